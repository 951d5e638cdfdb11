#pragma once

#include <Eigen/Dense>

#include <functional>

namespace kftune {

/// Continuous-time filterable system. Jacobians are continuous-time;
/// discretization happens inside predict().
struct ContinuousModel {
    Eigen::Index state_dim = 0;
    Eigen::Index input_dim = 0;
    Eigen::Index meas_dim = 0;
    Eigen::Index noise_dim = 0;

    std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> dynamics;     // f(x, u) -> xdot
    std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> measurement;  // h(x, u) -> z
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> process_jacobian;      // df/dx
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> measurement_jacobian;  // dh/dx
    Eigen::MatrixXd noise_map;  // state_dim x noise_dim mapping of process noise into xdot
    double step_period = 0.1;   // seconds

    void validate() const;
};

struct FilterState {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};

struct NoiseSpec {
    Eigen::MatrixXd q;  // noise_dim x noise_dim process noise covariance (the tunable object)
    Eigen::MatrixXd r;  // meas_dim x meas_dim measurement noise covariance, fixed
};

struct UpdateRecord {
    Eigen::VectorXd innovation;
    Eigen::MatrixXd innovation_cov;
    Eigen::MatrixXd gain;
    double nis;
};

struct EkfOptions {
    bool joseph_update = false;  // Joseph-form covariance update for conditioning studies
};

/// One prediction step: RK4 mean propagation over the step period, covariance
/// via the first-order discretization P <- (I + dt F) P (I + dt F)^T + (dt G) Q (dt G)^T.
FilterState ekf_predict(const ContinuousModel& model, const FilterState& state,
                        const Eigen::VectorXd& u, const NoiseSpec& noise);

/// Standard measurement update; the record carries the innovation, its
/// covariance, the gain and the NIS value.
std::pair<FilterState, UpdateRecord> ekf_update(const ContinuousModel& model,
                                                const FilterState& state,
                                                const Eigen::VectorXd& z,
                                                const Eigen::VectorXd& u,
                                                const NoiseSpec& noise,
                                                const EkfOptions& opts = {});

/// Classical RK4 step of xdot = f(x).
Eigen::VectorXd rk4_step(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                         const Eigen::VectorXd& x, double dt);

}  // namespace kftune
