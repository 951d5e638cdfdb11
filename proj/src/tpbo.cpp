#include "kftune/tpbo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace kftune {

namespace {

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

// Values handed to the surrogate: non-finite observations are replaced by a
// penalty above the worst finite value so the fit stays well posed.
std::vector<double> surrogate_values(const std::vector<TuningSample>& samples) {
    double worst = -std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : samples) {
        if (std::isfinite(s.value)) {
            worst = std::max(worst, s.value);
            best = std::min(best, s.value);
        }
    }
    if (!std::isfinite(worst))
        throw std::runtime_error("run_tpbo: every objective evaluation was non-finite");
    const double penalty = worst + std::max(1.0, worst - best);
    std::vector<double> out;
    out.reserve(samples.size());
    for (const auto& s : samples)
        out.push_back(std::isfinite(s.value) ? s.value : penalty);
    return out;
}

}  // namespace

std::vector<DesignPoint> seed_design(const BoxBounds& bounds, int n_seed, uint64_t rng_seed) {
    bounds.validate();
    if (n_seed < 1) throw std::invalid_argument("seed_design: n_seed must be positive");
    const Eigen::Index d = bounds.dim();

    std::mt19937_64 rng(rng_seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    std::vector<std::vector<int>> strata(static_cast<size_t>(d));
    for (auto& col : strata) {
        col.resize(static_cast<size_t>(n_seed));
        for (int i = 0; i < n_seed; ++i) col[static_cast<size_t>(i)] = i;
        std::shuffle(col.begin(), col.end(), rng);
    }

    std::vector<DesignPoint> points;
    points.reserve(static_cast<size_t>(n_seed));
    for (int i = 0; i < n_seed; ++i) {
        DesignPoint q(d);
        for (Eigen::Index j = 0; j < d; ++j) {
            const double frac = (strata[static_cast<size_t>(j)][static_cast<size_t>(i)] + u01(rng))
                              / static_cast<double>(n_seed);
            q[j] = bounds.lower[j] + frac * (bounds.upper[j] - bounds.lower[j]);
        }
        points.push_back(std::move(q));
    }
    return points;
}

TuningTrace run_tpbo(const TuningProblem& problem) {
    problem.bounds.validate();
    if (!problem.objective) throw std::invalid_argument("run_tpbo: no objective");
    if (problem.n_seed < 2) throw std::invalid_argument("run_tpbo: n_seed must be >= 2");
    if (problem.max_iterations < 1) throw std::invalid_argument("run_tpbo: max_iterations must be >= 1");
    if (problem.min_improvement < 0.0) throw std::invalid_argument("run_tpbo: negative min_improvement");

    const Eigen::Index d = problem.bounds.dim();
    DirectBudget budget = problem.acquisition_budget;
    if (d > 2) budget.max_evaluations *= static_cast<int>(d);

    TrainingOptions topts = problem.surrogate;
    topts.rescale_bounds = problem.bounds;

    TuningTrace trace;
    auto evaluate = [&](const DesignPoint& q, bool seeded) {
        const double t0 = now_seconds();
        double y = problem.objective(q);
        if (!std::isfinite(y)) y = std::numeric_limits<double>::infinity();
        trace.samples.push_back({q, y, seeded, now_seconds() - t0});
        return y;
    };

    for (const DesignPoint& q : seed_design(problem.bounds, problem.n_seed, problem.rng_seed))
        evaluate(q, /*seeded=*/true);

    auto update_incumbent = [&] {
        size_t best = 0;
        for (size_t i = 1; i < trace.samples.size(); ++i)
            if (trace.samples[i].value < trace.samples[best].value) best = i;
        trace.incumbents.emplace_back(trace.samples[best].point, trace.samples[best].value);
    };
    update_incumbent();

    KernelSpec kernel;
    kernel.length_scales = Eigen::VectorXd::Constant(d, 0.3);  // unit-box coordinates
    kernel.signal_variance = 1.0;
    kernel.jitter = 1e-8;
    double dof = topts.dof;

    auto build_set = [&]() {
        std::vector<DesignPoint> pts;
        pts.reserve(trace.samples.size());
        for (const auto& s : trace.samples) pts.push_back(s.point);
        TrainingOptions o = topts;
        o.dof = dof;
        return TrainingSet::build(std::move(pts), surrogate_values(trace.samples), kernel, o);
    };

    auto fit_round = [&](int iteration) {
        TrainingSet ts = build_set();
        FitResult fr = fit_hyperparameters(ts, problem.fit);
        if (!fr.fell_back) {
            kernel = fr.kernel;
            dof = fr.dof;
            ts = ts.with_kernel(kernel, dof);
        }
        trace.hyperparameters.push_back({iteration, kernel, dof, fr.log_marginal, fr.fell_back});
        return ts;
    };

    int low_improvement_streak = 0;
    for (int it = 1; it <= problem.max_iterations; ++it) {
        TrainingSet ts = fit_round(it - 1);

        const Proposal prop = propose_next(ts, problem.bounds, budget);
        const double y = evaluate(prop.point, /*seeded=*/false);
        trace.iterations_executed = it;

        const double prev_best = trace.incumbents.back().second;
        update_incumbent();
        const double improvement = prev_best - trace.incumbents.back().second;

        if (problem.progress)
            problem.progress({it, prop.point, y, trace.incumbents.back().second, prop.exploration_fallback});

        low_improvement_streak = improvement < problem.min_improvement ? low_improvement_streak + 1 : 0;
        if (low_improvement_streak >= problem.patience) break;
    }
    return trace;
}

}  // namespace kftune
