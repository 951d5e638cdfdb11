#pragma once

#include "kftune/consistency.hpp"
#include "kftune/skycrane.hpp"
#include "kftune/types.hpp"

#include <cstdint>
#include <vector>

namespace kftune {

enum class CostKind { JNis, JNees };
enum class Parameterization { OneD, TwoD, ThreeD };

/// Closed-loop Monte-Carlo setup for tuning the Skycrane EKF.
///
/// The configured process-noise variances describe continuous white noise;
/// the truth simulator injects sqrt(dt)-scaled kicks on the velocity
/// channels each step. The filter's matched process noise is therefore
/// true_process_var / dt (see matched_q()).
struct ExperimentConfig {
    SkycraneParams params;
    LqrDesign design;
    double step_period = 0.1;

    Eigen::Vector3d true_process_var{0.01, 0.01, 0.001};
    Eigen::Vector4d meas_var{1.0, 0.5, 0.025, 0.0225};

    int n_runs = 200;
    int t_steps = 100;
    Eigen::VectorXd x0_mean;  // filter prior mean; truth is sampled around it
    Eigen::MatrixXd p0;       // filter prior covariance

    CostKind cost = CostKind::JNis;
    double alpha = 0.05;
    uint64_t master_seed = 1;

    Parameterization parameterization = Parameterization::OneD;
    double fixed_q_zdd = 0.1;  // held fixed in the 2D parameterization

    bool common_random_numbers = false;  // pin every evaluation to substream 0
    int threads = 0;                     // <= 0: machine parallelism
    int transient_skip = 0;              // leading steps dropped from the J cost
    double divergence_threshold = 1e6;
    bool joseph_update = false;

    static ExperimentConfig make_default();
    void validate() const;

    /// Search box for the active parameterization.
    BoxBounds default_bounds() const;
    /// Map a design point onto the EKF's assumed (Q_xidd, Q_zdd, Q_thetadd).
    Eigen::Vector3d assumed_q(const DesignPoint& q) const;
    /// Assumed Q whose discretized covariance equals the truth injection.
    Eigen::Vector3d matched_q() const;
};

/// One closed-loop rollout: truth, measurements, controls, estimates and
/// per-step statistics.
struct Rollout {
    std::vector<Eigen::VectorXd> truth;         // t_steps + 1
    std::vector<Eigen::VectorXd> measurements;  // t_steps
    std::vector<Eigen::Vector2d> controls;      // t_steps
    std::vector<Eigen::VectorXd> estimates;     // t_steps + 1
    std::vector<double> nees;                   // t_steps
    std::vector<double> nis;                    // t_steps
    Eigen::Vector3d rmse{0.0, 0.0, 0.0};        // xi, z, theta
    bool diverged = false;
    bool filter_failed = false;
    int clamp_events = 0;

    bool excluded() const { return diverged || filter_failed; }
};

/// Closed-loop truth generation with the matched filter in the loop.
/// Deterministic per (master seed, evaluation counter, run index).
Rollout simulate_truth(const ExperimentConfig& cfg, int run_index, uint64_t eval_counter = 0);

/// As simulate_truth but with the EKF running an arbitrary assumed Q.
Rollout run_closed_loop(const ExperimentConfig& cfg, const Eigen::Vector3d& assumed_q_diag,
                        int run_index, uint64_t eval_counter, bool record_trajectories);

struct EvalSummary {
    int n_included = 0;
    int n_excluded = 0;
    double mean_nis = 0.0;
    double mean_nees = 0.0;
    Eigen::Vector3d rmse_median{0.0, 0.0, 0.0};
    int clamp_events = 0;
};

struct Evaluation {
    double cost;
    ConsistencyReport report;  // for the statistic selected by cfg.cost
    EvalSummary summary;
};

/// The stochastic tuning objective: N fresh rollouts under the candidate's
/// assumed Q, aggregated into the scalar J cost. Bit-for-bit reproducible
/// given (q, master seed, evaluation counter).
Evaluation evaluate_candidate(const DesignPoint& q, const ExperimentConfig& cfg,
                              uint64_t eval_counter = 0);

struct RmseRow {
    DesignPoint q;
    Eigen::Vector3d median;
    Eigen::Vector3d q1;
    Eigen::Vector3d q3;
    int n_runs = 0;
};

/// Per-candidate RMSE distribution over fresh simulation runs.
std::vector<RmseRow> rmse_validation(const std::vector<DesignPoint>& candidates,
                                     const ExperimentConfig& cfg, int n_repeats = 50);

}  // namespace kftune
