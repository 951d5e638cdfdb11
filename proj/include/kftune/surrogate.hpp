#pragma once

#include "kftune/kernel.hpp"
#include "kftune/types.hpp"

#include <Eigen/Cholesky>
#include <optional>
#include <vector>

namespace kftune {

/// Conditional predictive distribution at a single query point:
/// a univariate Student-t with `dof` degrees of freedom, location `mean`
/// and squared scale `scale`.
struct StudentTPosterior {
    double dof;
    double mean;
    double scale;  // squared scale, >= 0
};

struct TrainingOptions {
    double dof = 5.0;        // process degrees of freedom, > 2
    bool center_mean = true; // subtract the sample mean of y before fitting
    std::optional<BoxBounds> rescale_bounds;  // map inputs to the unit box
};

/// Immutable sample set backing a Student-t process regression model.
/// Exact duplicate points are merged (values averaged) at build time; the
/// kernel matrix is factorized once with escalating jitter.
class TrainingSet {
public:
    static TrainingSet build(std::vector<DesignPoint> points, std::vector<double> values,
                             KernelSpec kernel, TrainingOptions opts = {});

    /// Same data, different hyperparameters.
    TrainingSet with_kernel(KernelSpec kernel, double dof) const;

    const std::vector<DesignPoint>& points() const { return points_; }
    const std::vector<double>& values() const { return values_; }
    const KernelSpec& kernel() const { return kernel_; }
    const TrainingOptions& options() const { return opts_; }
    double dof() const { return opts_.dof; }
    double effective_jitter() const { return effective_jitter_; }
    Eigen::Index size() const { return static_cast<Eigen::Index>(points_.size()); }
    Eigen::Index dim() const { return points_.empty() ? 0 : points_.front().size(); }
    double min_value() const;

    double log_marginal_likelihood() const;
    StudentTPosterior predict(const DesignPoint& query) const;

private:
    TrainingSet() = default;

    std::vector<DesignPoint> points_;   // original coordinates, duplicates merged
    std::vector<double> values_;        // original units
    KernelSpec kernel_;
    TrainingOptions opts_;
    double y_offset_ = 0.0;

    std::vector<DesignPoint> scaled_;   // coordinates the kernel sees
    Eigen::VectorXd centered_;          // values the kernel sees
    Eigen::LLT<Eigen::MatrixXd> llt_;
    Eigen::VectorXd alpha_;             // K^{-1} centered_
    double quad_form_ = 0.0;            // centered^T K^{-1} centered
    double log_det_ = 0.0;
    double effective_jitter_ = 0.0;
};

double log_marginal_likelihood(const TrainingSet& ts);
StudentTPosterior posterior_predict(const TrainingSet& ts, const DesignPoint& query);

struct FitOptions {
    int n_starts = 8;              // Latin-hypercube starts in log space
    uint64_t rng_seed = 0x5eedULL;
    bool fit_dof = false;          // optimize dof over (2, 30] jointly
    // Box over [log ls_1..d, log sv (, log(dof-2))]. Empty vectors select defaults.
    Eigen::VectorXd log_lower;
    Eigen::VectorXd log_upper;
    int max_local_iterations = 200;
};

struct FitResult {
    KernelSpec kernel;
    double dof;
    double log_marginal;
    bool fell_back;  // every start failed to factorize; previous spec returned
};

/// Multi-start local maximization of the log marginal likelihood.
FitResult fit_hyperparameters(const TrainingSet& ts, const FitOptions& opts = {});

/// Convenience: fit, then rebuild the set with the winning hyperparameters.
TrainingSet refit(const TrainingSet& ts, const FitOptions& opts = {});

}  // namespace kftune
