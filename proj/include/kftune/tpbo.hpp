#pragma once

#include "kftune/acquisition.hpp"
#include "kftune/direct.hpp"
#include "kftune/surrogate.hpp"
#include "kftune/types.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace kftune {

/// Latin-hypercube seed design: n points, one per stratum in every dimension.
std::vector<DesignPoint> seed_design(const BoxBounds& bounds, int n_seed, uint64_t rng_seed);

struct ProgressRecord {
    int iteration;          // 0 for seed samples
    DesignPoint point;
    double value;
    double incumbent_value;
    bool exploration_fallback;
};

struct TuningProblem {
    std::function<double(const DesignPoint&)> objective;  // may be stochastic
    BoxBounds bounds;
    int n_seed = 10;
    int max_iterations = 50;
    double min_improvement = 1e-4;
    int patience = 10;            // consecutive low-improvement iterations before stopping
    uint64_t rng_seed = 0;

    TrainingOptions surrogate;    // rescale_bounds is filled from `bounds` automatically
    FitOptions fit;
    DirectBudget acquisition_budget{};  // max_evaluations scaled by dimension for d > 2
    std::function<void(const ProgressRecord&)> progress;  // optional sink
};

struct TuningSample {
    DesignPoint point;
    double value;
    bool seeded;       // seed sample vs. proposed sample
    double wall_time_s;
};

struct HyperRecord {
    int iteration;
    KernelSpec kernel;
    double dof;
    double log_marginal;
    bool fit_fell_back;
};

struct TuningTrace {
    std::vector<TuningSample> samples;            // n_seed + iterations executed
    std::vector<std::pair<DesignPoint, double>> incumbents;  // per iteration (index 0 = after seeding)
    std::vector<HyperRecord> hyperparameters;
    int iterations_executed = 0;

    const std::pair<DesignPoint, double>& incumbent() const { return incumbents.back(); }
};

/// Surrogate-guided minimization: seed, then iterate
/// propose -> evaluate -> augment -> refit until the budget or the
/// improvement criterion stops the loop. Returns the full search trace;
/// the incumbent is the minimum over all evaluated samples.
TuningTrace run_tpbo(const TuningProblem& problem);

}  // namespace kftune
