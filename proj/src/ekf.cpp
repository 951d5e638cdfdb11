#include "kftune/ekf.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace kftune {

void ContinuousModel::validate() const {
    if (state_dim < 1 || input_dim < 0 || meas_dim < 1 || noise_dim < 1)
        throw std::invalid_argument("ContinuousModel: bad dimensions");
    if (!dynamics || !measurement || !process_jacobian || !measurement_jacobian)
        throw std::invalid_argument("ContinuousModel: missing model functions");
    if (noise_map.rows() != state_dim || noise_map.cols() != noise_dim)
        throw std::invalid_argument("ContinuousModel: noise_map shape mismatch");
    if (!(step_period > 0.0))
        throw std::invalid_argument("ContinuousModel: step period must be positive");
}

Eigen::VectorXd rk4_step(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                         const Eigen::VectorXd& x, double dt) {
    const Eigen::VectorXd k1 = f(x);
    const Eigen::VectorXd k2 = f(x + 0.5 * dt * k1);
    const Eigen::VectorXd k3 = f(x + 0.5 * dt * k2);
    const Eigen::VectorXd k4 = f(x + dt * k3);
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

FilterState ekf_predict(const ContinuousModel& model, const FilterState& state,
                        const Eigen::VectorXd& u, const NoiseSpec& noise) {
    const double dt = model.step_period;

    const Eigen::VectorXd mean =
        rk4_step([&](const Eigen::VectorXd& x) { return model.dynamics(x, u); }, state.mean, dt);
    if (!mean.allFinite()) {
        std::ostringstream msg;
        msg << "ekf_predict: non-finite dynamics output at state [" << state.mean.transpose() << "]";
        throw std::runtime_error(msg.str());
    }

    const Eigen::MatrixXd f_tilde =
        Eigen::MatrixXd::Identity(model.state_dim, model.state_dim) + dt * model.process_jacobian(state.mean, u);
    const Eigen::MatrixXd omega = dt * model.noise_map;

    Eigen::MatrixXd cov = f_tilde * state.covariance * f_tilde.transpose()
                        + omega * noise.q * omega.transpose();
    cov = 0.5 * (cov + cov.transpose()).eval();
    return {mean, std::move(cov)};
}

std::pair<FilterState, UpdateRecord> ekf_update(const ContinuousModel& model,
                                                const FilterState& state,
                                                const Eigen::VectorXd& z,
                                                const Eigen::VectorXd& u,
                                                const NoiseSpec& noise,
                                                const EkfOptions& opts) {
    if (!z.allFinite())
        throw std::invalid_argument("ekf_update: non-finite measurement");

    const Eigen::MatrixXd h = model.measurement_jacobian(state.mean, u);
    const Eigen::VectorXd innovation = z - model.measurement(state.mean, u);

    Eigen::MatrixXd s = h * state.covariance * h.transpose() + noise.r;
    s = 0.5 * (s + s.transpose()).eval();

    const Eigen::LLT<Eigen::MatrixXd> s_llt(s);
    if (s_llt.info() != Eigen::Success)
        throw std::runtime_error("ekf_update: innovation covariance is not positive definite");

    // K = P H^T S^{-1}, applied through the factorization.
    const Eigen::MatrixXd gain = s_llt.solve(h * state.covariance.transpose()).transpose();
    const double nis = innovation.dot(s_llt.solve(innovation));

    const Eigen::VectorXd mean = state.mean + gain * innovation;
    const Eigen::MatrixXd i_kh =
        Eigen::MatrixXd::Identity(model.state_dim, model.state_dim) - gain * h;
    Eigen::MatrixXd cov;
    if (opts.joseph_update) {
        cov = i_kh * state.covariance * i_kh.transpose() + gain * noise.r * gain.transpose();
    } else {
        cov = i_kh * state.covariance;
    }
    cov = 0.5 * (cov + cov.transpose()).eval();

    return {{mean, std::move(cov)}, {innovation, std::move(s), gain, nis}};
}

}  // namespace kftune
