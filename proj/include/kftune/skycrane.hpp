#pragma once

#include "kftune/ekf.hpp"

#include <Eigen/Dense>

namespace kftune {

/// Physical constants of the MSL descent-stage longitudinal model.
/// Defaults are the Mars values.
struct SkycraneParams {
    double rho = 0.02;      // atmosphere density, kg/m^3
    double g = 3.711;       // gravity, m/s^2
    double beta = 0.78539816339744830961566084581988;  // thruster cant angle, rad (pi/4)
    double drag_coeff = 0.2;
    double fuel_mass = 390.0;      // kg
    double fuel_width = 1.0;       // m
    double fuel_height = 0.5;      // m
    double fuel_depth = 1.0;       // m
    double body_mass = 1510.0;     // kg
    double body_width = 3.2;       // m
    double body_height = 2.5;      // m
    double body_depth = 2.9;       // m
    double cm_height = 0.9421;     // m

    double total_mass() const { return body_mass + fuel_mass; }
    /// Pitch moment of inertia of the body+fuel boxes.
    double pitch_inertia() const {
        return (body_mass * (body_width * body_width + body_height * body_height)
              + fuel_mass * (fuel_width * fuel_width + fuel_height * fuel_height)) / 12.0;
    }
    double side_area() const { return body_height * body_depth + fuel_height * fuel_depth; }
    double bottom_area() const { return body_width * body_depth + fuel_width * fuel_depth; }
    /// Torque arm of differential thrust about the center of mass.
    double thrust_arm() const {
        return std::cos(beta) * body_width / 2.0 - std::sin(beta) * cm_height;
    }

    void validate() const;
};

// State ordering: (xi, xi_dot, z, z_dot, theta, theta_dot).
inline constexpr Eigen::Index kSkycraneStateDim = 6;
inline constexpr Eigen::Index kSkycraneInputDim = 2;
inline constexpr Eigen::Index kSkycraneMeasDim = 4;
inline constexpr Eigen::Index kSkycraneNoiseDim = 3;

/// Hover trim: 20 m altitude, everything else zero.
Eigen::VectorXd skycrane_trim_state();

/// Thrust at which the canted thrusters exactly balance gravity.
double skycrane_nominal_thrust(const SkycraneParams& p);

/// State derivative with an additive 3-vector acceleration disturbance on
/// (xi_dd, z_dd, theta_dd).
Eigen::VectorXd skycrane_dynamics(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                  const Eigen::Vector3d& w, const SkycraneParams& p);

/// Noise-free measurement (xi, z, theta_dot, xi_dd).
Eigen::VectorXd skycrane_measure(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                 const SkycraneParams& p);

Eigen::MatrixXd skycrane_process_jacobian(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                          const SkycraneParams& p);
Eigen::MatrixXd skycrane_measurement_jacobian(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                              const SkycraneParams& p);

/// df/du of the continuous dynamics (needed for the regulator design).
Eigen::MatrixXd skycrane_input_jacobian(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                        const SkycraneParams& p);

/// Process-noise mapping: selector onto the acceleration rows.
Eigen::MatrixXd skycrane_noise_map();

/// Fixed measurement noise covariance diag(1.0, 0.5, 0.025, 0.0225).
Eigen::Matrix4d skycrane_default_measurement_cov();

struct LqrDesign {
    Eigen::MatrixXd q_weights;   // 6x6 state weights
    Eigen::MatrixXd r_weights;   // 2x2 input weights
    Eigen::MatrixXd gain;        // 2x6 feedback gain
    Eigen::VectorXd x_ref;       // trim state
    Eigen::Vector2d u_nom;       // nominal thrusts
    double thrust_limit;         // per-thruster clamp, 2 * T_nom
};

/// Default state/input weights: diag(200, 15, 200, 15, 10000, 15) and diag(0.01, 0.01).
Eigen::MatrixXd skycrane_default_q_weights();
Eigen::MatrixXd skycrane_default_r_weights();

/// Solve the regulator at the hover trim. Throws if the closed loop is not
/// strictly stable or the Riccati residual is out of tolerance.
LqrDesign lqr_gain(const SkycraneParams& p, const Eigen::MatrixXd& q_weights,
                   const Eigen::MatrixXd& r_weights);
LqrDesign lqr_gain(const SkycraneParams& p);

/// u = u_nom - K (x_est - x_ref), clamped per thruster to [0, thrust_limit].
Eigen::Vector2d skycrane_control(const Eigen::VectorXd& x_est, const LqrDesign& design);

/// EKF adapter over the noise-free dynamics.
ContinuousModel make_skycrane_model(const SkycraneParams& p, double step_period = 0.1);

}  // namespace kftune
