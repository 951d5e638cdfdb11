#include "kftune/harness.hpp"

#include "kftune/parallel.hpp"
#include "kftune/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace kftune {

namespace {

// Symmetric PSD square root for sampling the initial state (p0 may be singular).
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    if (eig.info() != Eigen::Success)
        throw std::runtime_error("psd_sqrt: eigendecomposition failed");
    const Eigen::VectorXd d = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * d.asDiagonal() * eig.eigenvectors().transpose();
}

double quantile(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const double idx = p * static_cast<double>(v.size() - 1);
    const size_t lo = static_cast<size_t>(std::floor(idx));
    const size_t hi = static_cast<size_t>(std::ceil(idx));
    const double frac = idx - static_cast<double>(lo);
    return v[lo] + frac * (v[hi] - v[lo]);
}

}  // namespace

ExperimentConfig ExperimentConfig::make_default() {
    ExperimentConfig cfg;
    cfg.design = lqr_gain(cfg.params);
    cfg.x0_mean = skycrane_trim_state();
    Eigen::VectorXd p0_diag(6);
    p0_diag << 1.0, 0.1, 1.0, 0.1, 0.01, 0.01;
    cfg.p0 = p0_diag.asDiagonal();
    return cfg;
}

void ExperimentConfig::validate() const {
    params.validate();
    if (n_runs < 1) throw std::invalid_argument("ExperimentConfig: n_runs must be >= 1");
    if (t_steps < 1) throw std::invalid_argument("ExperimentConfig: t_steps must be >= 1");
    if (!(step_period > 0.0)) throw std::invalid_argument("ExperimentConfig: step period must be positive");
    if ((true_process_var.array() < 0.0).any() || (meas_var.array() < 0.0).any())
        throw std::invalid_argument("ExperimentConfig: noise variances must be non-negative");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("ExperimentConfig: alpha must be in (0,1)");
    if (x0_mean.size() != kSkycraneStateDim || p0.rows() != kSkycraneStateDim || p0.cols() != kSkycraneStateDim)
        throw std::invalid_argument("ExperimentConfig: initial state dimensions");
    if (transient_skip < 0 || transient_skip >= t_steps)
        throw std::invalid_argument("ExperimentConfig: transient_skip out of range");
}

BoxBounds ExperimentConfig::default_bounds() const {
    switch (parameterization) {
        case Parameterization::OneD:
            return BoxBounds(Eigen::VectorXd::Constant(1, 1e-2), Eigen::VectorXd::Constant(1, 1.0));
        case Parameterization::TwoD: {
            Eigen::VectorXd lo(2), hi(2);
            lo << 1e-2, 1e-3;
            hi << 1.0, 1.0;
            return BoxBounds(lo, hi);
        }
        case Parameterization::ThreeD: {
            Eigen::VectorXd lo(3), hi(3);
            lo << 1e-2, 1e-2, 1e-3;
            hi << 1.0, 1.0, 1.0;
            return BoxBounds(lo, hi);
        }
    }
    throw std::logic_error("ExperimentConfig: unknown parameterization");
}

Eigen::Vector3d ExperimentConfig::assumed_q(const DesignPoint& q) const {
    switch (parameterization) {
        case Parameterization::OneD:
            if (q.size() != 1) throw std::invalid_argument("assumed_q: 1D point expected");
            return {q[0], q[0], 0.1 * q[0]};  // Q_xidd = Q_zdd = 10 * Q_thetadd
        case Parameterization::TwoD:
            if (q.size() != 2) throw std::invalid_argument("assumed_q: 2D point expected");
            return {q[0], fixed_q_zdd, q[1]};
        case Parameterization::ThreeD:
            if (q.size() != 3) throw std::invalid_argument("assumed_q: 3D point expected");
            return {q[0], q[1], q[2]};
    }
    throw std::logic_error("assumed_q: unknown parameterization");
}

Eigen::Vector3d ExperimentConfig::matched_q() const {
    // Truth kicks have covariance dt * true_var on the velocity channels;
    // the filter's Omega Q Omega^T contributes dt^2 * Q there.
    return true_process_var / step_period;
}

Rollout run_closed_loop(const ExperimentConfig& cfg, const Eigen::Vector3d& assumed_q_diag,
                        int run_index, uint64_t eval_counter, bool record_trajectories) {
    if ((assumed_q_diag.array() < 0.0).any())
        throw std::invalid_argument("run_closed_loop: assumed Q must be non-negative");

    const double dt = cfg.step_period;
    const ContinuousModel model = make_skycrane_model(cfg.params, dt);
    const NoiseSpec noise{assumed_q_diag.asDiagonal(), cfg.meas_var.asDiagonal()};
    const EkfOptions ekf_opts{cfg.joseph_update};
    const NoiseStream stream(cfg.master_seed, cfg.common_random_numbers ? 0 : eval_counter,
                             static_cast<uint64_t>(run_index));

    Rollout out;
    out.nees.reserve(static_cast<size_t>(cfg.t_steps));
    out.nis.reserve(static_cast<size_t>(cfg.t_steps));

    // Truth starts as a draw from the filter prior.
    Eigen::VectorXd x_true = cfg.x0_mean;
    {
        Eigen::VectorXd z0(kSkycraneStateDim);
        for (Eigen::Index i = 0; i < kSkycraneStateDim; ++i)
            z0[i] = stream.normal(kInitStep, static_cast<uint32_t>(i));
        x_true += psd_sqrt(cfg.p0) * z0;
    }
    FilterState filter{cfg.x0_mean, cfg.p0};

    if (record_trajectories) {
        out.truth.push_back(x_true);
        out.estimates.push_back(filter.mean);
    }

    const Eigen::MatrixXd gamma = skycrane_noise_map();
    const Eigen::Vector3d kick_std = (dt * cfg.true_process_var).cwiseSqrt();
    const Eigen::Vector4d meas_std = cfg.meas_var.cwiseSqrt();

    Eigen::Vector3d err_sq_sum = Eigen::Vector3d::Zero();
    int steps_done = 0;

    for (int k = 1; k <= cfg.t_steps; ++k) {
        const Eigen::Vector2d u_raw = cfg.design.u_nom - cfg.design.gain * (filter.mean - cfg.design.x_ref);
        const Eigen::Vector2d u = skycrane_control(filter.mean, cfg.design);
        if ((u - u_raw).cwiseAbs().maxCoeff() > 0.0) ++out.clamp_events;

        // Truth: deterministic integration plus a white-noise velocity kick.
        x_true = rk4_step(
            [&](const Eigen::VectorXd& x) { return skycrane_dynamics(x, u, Eigen::Vector3d::Zero(), cfg.params); },
            x_true, dt);
        Eigen::Vector3d w;
        for (int i = 0; i < 3; ++i)
            w[i] = kick_std[i] * stream.normal(static_cast<uint64_t>(k), static_cast<uint32_t>(i));
        x_true += gamma * w;

        if (!x_true.allFinite() || x_true.cwiseAbs().maxCoeff() > cfg.divergence_threshold) {
            out.diverged = true;
            break;
        }

        Eigen::VectorXd z = skycrane_measure(x_true, u, cfg.params);
        for (int i = 0; i < 4; ++i)
            z[i] += meas_std[i] * stream.normal(static_cast<uint64_t>(k), static_cast<uint32_t>(3 + i));

        try {
            filter = ekf_predict(model, filter, u, noise);
            auto [posterior, record] = ekf_update(model, filter, z, u, noise, ekf_opts);
            filter = posterior;
            out.nis.push_back(record.nis);
            out.nees.push_back(nees(filter.mean - x_true, filter.covariance));
        } catch (const std::runtime_error&) {
            out.filter_failed = true;
            break;
        }

        const Eigen::VectorXd err = filter.mean - x_true;
        err_sq_sum[0] += err[0] * err[0];
        err_sq_sum[1] += err[2] * err[2];
        err_sq_sum[2] += err[4] * err[4];
        ++steps_done;

        if (record_trajectories) {
            out.truth.push_back(x_true);
            out.estimates.push_back(filter.mean);
            out.measurements.push_back(z);
            out.controls.push_back(u);
        }
    }

    if (steps_done > 0)
        out.rmse = (err_sq_sum / static_cast<double>(steps_done)).cwiseSqrt();
    return out;
}

Rollout simulate_truth(const ExperimentConfig& cfg, int run_index, uint64_t eval_counter) {
    cfg.validate();
    return run_closed_loop(cfg, cfg.matched_q(), run_index, eval_counter, /*record_trajectories=*/true);
}

Evaluation evaluate_candidate(const DesignPoint& q, const ExperimentConfig& cfg,
                              uint64_t eval_counter) {
    cfg.validate();
    const Eigen::Vector3d assumed = cfg.assumed_q(q);

    std::vector<Rollout> rollouts(static_cast<size_t>(cfg.n_runs));
    parallel_for(cfg.n_runs, cfg.threads, [&](int run) {
        rollouts[static_cast<size_t>(run)] =
            run_closed_loop(cfg, assumed, run, eval_counter, /*record_trajectories=*/false);
    });

    std::vector<const Rollout*> included;
    EvalSummary summary;
    for (const auto& r : rollouts) {
        if (r.excluded()) {
            ++summary.n_excluded;
        } else {
            included.push_back(&r);
            summary.clamp_events += r.clamp_events;
        }
    }
    summary.n_included = static_cast<int>(included.size());

    Evaluation out;
    out.summary = summary;
    if (summary.n_excluded > cfg.n_runs / 10 || included.empty()) {
        out.cost = std::numeric_limits<double>::infinity();
        return out;
    }

    const int n = summary.n_included;
    Eigen::MatrixXd nis_mat(n, cfg.t_steps), nees_mat(n, cfg.t_steps);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < cfg.t_steps; ++k) {
            nis_mat(i, k) = included[static_cast<size_t>(i)]->nis[static_cast<size_t>(k)];
            nees_mat(i, k) = included[static_cast<size_t>(i)]->nees[static_cast<size_t>(k)];
        }
    }

    const StatSeries nis_series = average_series(nis_mat, static_cast<int>(kSkycraneMeasDim));
    const StatSeries nees_series = average_series(nees_mat, static_cast<int>(kSkycraneStateDim));
    summary.mean_nis = nis_mat.mean();
    summary.mean_nees = nees_mat.mean();
    out.summary = summary;

    const StatSeries& tested = cfg.cost == CostKind::JNis ? nis_series : nees_series;
    StatSeries costed = tested;
    if (cfg.transient_skip > 0)
        costed.values.erase(costed.values.begin(), costed.values.begin() + cfg.transient_skip);
    out.cost = cfg.cost == CostKind::JNis ? j_nis(costed) : j_nees(costed);
    out.report = consistency_test(tested, chi2_bounds(cfg.alpha, n, tested.dof));

    std::vector<double> rmse_xi, rmse_z, rmse_theta;
    for (const Rollout* r : included) {
        rmse_xi.push_back(r->rmse[0]);
        rmse_z.push_back(r->rmse[1]);
        rmse_theta.push_back(r->rmse[2]);
    }
    out.summary.rmse_median = {quantile(rmse_xi, 0.5), quantile(rmse_z, 0.5), quantile(rmse_theta, 0.5)};
    return out;
}

std::vector<RmseRow> rmse_validation(const std::vector<DesignPoint>& candidates,
                                     const ExperimentConfig& cfg, int n_repeats) {
    cfg.validate();
    if (n_repeats < 1) throw std::invalid_argument("rmse_validation: n_repeats must be positive");

    std::vector<RmseRow> rows;
    uint64_t eval_counter = 0x524d5345ULL;  // separate substream family from tuning evaluations
    for (const DesignPoint& q : candidates) {
        const Eigen::Vector3d assumed = cfg.assumed_q(q);
        std::vector<Rollout> rollouts(static_cast<size_t>(n_repeats));
        parallel_for(n_repeats, cfg.threads, [&](int run) {
            rollouts[static_cast<size_t>(run)] =
                run_closed_loop(cfg, assumed, run, eval_counter, /*record_trajectories=*/false);
        });
        ++eval_counter;

        std::vector<double> xi, z, theta;
        for (const auto& r : rollouts) {
            if (r.excluded()) continue;
            xi.push_back(r.rmse[0]);
            z.push_back(r.rmse[1]);
            theta.push_back(r.rmse[2]);
        }
        if (xi.empty())
            throw std::runtime_error("rmse_validation: every run was excluded");

        RmseRow row;
        row.q = q;
        row.n_runs = static_cast<int>(xi.size());
        row.median = {quantile(xi, 0.5), quantile(z, 0.5), quantile(theta, 0.5)};
        row.q1 = {quantile(xi, 0.25), quantile(z, 0.25), quantile(theta, 0.25)};
        row.q3 = {quantile(xi, 0.75), quantile(z, 0.75), quantile(theta, 0.75)};
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace kftune
