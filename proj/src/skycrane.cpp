#include "kftune/skycrane.hpp"

#include "kftune/care.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace kftune {

namespace {

constexpr double kVelocityGuard = 1e-9;  // below this total speed all drag terms vanish

// Projected-area trig terms shared by the dynamics and the Jacobians.
struct DragGeometry {
    double v_t;    // total speed
    double a_sc, a_ss, a_bc, a_bs;
    bool moving;
};

DragGeometry drag_geometry(double xi_dot, double z_dot, double theta, const SkycraneParams& p) {
    DragGeometry g{};
    g.v_t = std::hypot(xi_dot, z_dot);
    g.moving = g.v_t >= kVelocityGuard;
    if (!g.moving) return g;
    const double alpha = std::atan2(z_dot, xi_dot);  // angle of attack
    const double rel = theta - alpha;
    g.a_sc = p.side_area() * std::cos(rel);
    g.a_ss = p.side_area() * std::sin(rel);
    g.a_bc = p.bottom_area() * std::cos(rel);
    g.a_bs = p.bottom_area() * std::sin(rel);
    return g;
}

}  // namespace

void SkycraneParams::validate() const {
    if (!(rho > 0.0) || !(g > 0.0) || !(drag_coeff > 0.0))
        throw std::invalid_argument("SkycraneParams: densities and coefficients must be positive");
    if (!(fuel_mass > 0.0) || !(body_mass > 0.0))
        throw std::invalid_argument("SkycraneParams: masses must be positive");
    if (!(beta > 0.0 && beta < 1.5707963267948966))
        throw std::invalid_argument("SkycraneParams: beta must lie in (0, pi/2)");
}

Eigen::VectorXd skycrane_trim_state() {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(kSkycraneStateDim);
    x[2] = 20.0;
    return x;
}

double skycrane_nominal_thrust(const SkycraneParams& p) {
    return 0.5 * p.g * p.total_mass() / std::cos(p.beta);
}

Eigen::VectorXd skycrane_dynamics(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                  const Eigen::Vector3d& w, const SkycraneParams& p) {
    const double xi_dot = x[1], z_dot = x[3], theta = x[4], theta_dot = x[5];
    const double t1 = u[0], t2 = u[1];
    const double inv_mass = 1.0 / p.total_mass();

    const DragGeometry geo = drag_geometry(xi_dot, z_dot, theta, p);
    double drag_xi = 0.0, drag_z = 0.0;
    if (geo.moving) {
        const double cd = 0.5 * p.rho * p.drag_coeff;
        const double area = geo.a_sc + geo.a_bs;
        drag_xi = cd * area * xi_dot * geo.v_t;
        drag_z = cd * area * z_dot * geo.v_t;
    }

    Eigen::VectorXd dx(kSkycraneStateDim);
    dx[0] = xi_dot;
    dx[1] = inv_mass * (t1 * std::sin(theta + p.beta) + t2 * std::sin(theta - p.beta) - drag_xi) + w[0];
    dx[2] = z_dot;
    dx[3] = inv_mass * (t1 * std::cos(theta + p.beta) + t2 * std::cos(theta - p.beta) - drag_z) - p.g + w[1];
    dx[4] = theta_dot;
    dx[5] = (t1 - t2) * p.thrust_arm() / p.pitch_inertia() + w[2];
    return dx;
}

Eigen::VectorXd skycrane_measure(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                 const SkycraneParams& p) {
    const Eigen::VectorXd dx = skycrane_dynamics(x, u, Eigen::Vector3d::Zero(), p);
    Eigen::VectorXd z(kSkycraneMeasDim);
    z << x[0], x[2], x[5], dx[1];
    return z;
}

Eigen::MatrixXd skycrane_process_jacobian(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                          const SkycraneParams& p) {
    const double xi_dot = x[1], z_dot = x[3], theta = x[4];
    const double t1 = u[0], t2 = u[1];
    const double inv_mass = 1.0 / p.total_mass();
    const double cd = 0.5 * p.rho * p.drag_coeff;
    const double nc = -inv_mass * cd;

    Eigen::MatrixXd f = Eigen::MatrixXd::Zero(kSkycraneStateDim, kSkycraneStateDim);
    f(0, 1) = 1.0;
    f(2, 3) = 1.0;
    f(4, 5) = 1.0;

    f(1, 4) = inv_mass * (t1 * std::cos(theta + p.beta) + t2 * std::cos(theta - p.beta));
    f(3, 4) = inv_mass * (-t1 * std::sin(theta + p.beta) - t2 * std::sin(theta - p.beta));

    const DragGeometry geo = drag_geometry(xi_dot, z_dot, theta, p);
    if (geo.moving) {
        const double vt = geo.v_t;
        const double area = geo.a_sc + geo.a_bs;
        // d(area)/d(alpha) enters through alpha = atan2(z_dot, xi_dot).
        f(1, 1) += nc * (area * (2.0 * xi_dot * xi_dot + z_dot * z_dot) / vt
                         + xi_dot * z_dot * (geo.a_bc - geo.a_ss) / vt);
        f(1, 3) += nc * (area * xi_dot * z_dot / vt
                         + xi_dot * xi_dot * (geo.a_ss - geo.a_bc) / vt);
        f(1, 4) += inv_mass * cd * xi_dot * vt * (geo.a_ss - geo.a_bc);

        f(3, 1) += nc * (area * xi_dot * z_dot / vt
                         + z_dot * z_dot * (geo.a_bc - geo.a_ss) / vt);
        f(3, 3) += nc * (area * (xi_dot * xi_dot + 2.0 * z_dot * z_dot) / vt
                         + xi_dot * z_dot * (geo.a_ss - geo.a_bc) / vt);
        f(3, 4) += inv_mass * cd * z_dot * vt * (geo.a_ss - geo.a_bc);
    }
    return f;
}

Eigen::MatrixXd skycrane_measurement_jacobian(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                              const SkycraneParams& p) {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(kSkycraneMeasDim, kSkycraneStateDim);
    h(0, 0) = 1.0;
    h(1, 2) = 1.0;
    h(2, 5) = 1.0;
    // Accelerometer channel reads xi_dd, so its row is that row of the process Jacobian.
    h.row(3) = skycrane_process_jacobian(x, u, p).row(1);
    return h;
}

Eigen::MatrixXd skycrane_input_jacobian(const Eigen::VectorXd& x, const Eigen::VectorXd& /*u*/,
                                        const SkycraneParams& p) {
    const double theta = x[4];
    const double inv_mass = 1.0 / p.total_mass();
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(kSkycraneStateDim, kSkycraneInputDim);
    b(1, 0) = inv_mass * std::sin(theta + p.beta);
    b(1, 1) = inv_mass * std::sin(theta - p.beta);
    b(3, 0) = inv_mass * std::cos(theta + p.beta);
    b(3, 1) = inv_mass * std::cos(theta - p.beta);
    b(5, 0) = p.thrust_arm() / p.pitch_inertia();
    b(5, 1) = -p.thrust_arm() / p.pitch_inertia();
    return b;
}

Eigen::MatrixXd skycrane_noise_map() {
    Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(kSkycraneStateDim, kSkycraneNoiseDim);
    gamma(1, 0) = 1.0;
    gamma(3, 1) = 1.0;
    gamma(5, 2) = 1.0;
    return gamma;
}

Eigen::Matrix4d skycrane_default_measurement_cov() {
    return Eigen::Vector4d(1.0, 0.5, 0.025, 0.0225).asDiagonal();
}

Eigen::MatrixXd skycrane_default_q_weights() {
    Eigen::VectorXd d(6);
    d << 200.0, 15.0, 200.0, 15.0, 10000.0, 15.0;
    return d.asDiagonal();
}

Eigen::MatrixXd skycrane_default_r_weights() {
    return Eigen::Vector2d(0.01, 0.01).asDiagonal();
}

LqrDesign lqr_gain(const SkycraneParams& p, const Eigen::MatrixXd& q_weights,
                   const Eigen::MatrixXd& r_weights) {
    p.validate();
    if (q_weights.rows() != 6 || q_weights.cols() != 6)
        throw std::invalid_argument("lqr_gain: state weights must be 6x6");
    if (r_weights.rows() != 2 || r_weights.cols() != 2)
        throw std::invalid_argument("lqr_gain: input weights must be 2x2");

    const Eigen::VectorXd x_ref = skycrane_trim_state();
    const double t_nom = skycrane_nominal_thrust(p);
    const Eigen::Vector2d u_nom(t_nom, t_nom);

    const Eigen::MatrixXd a = skycrane_process_jacobian(x_ref, u_nom, p);
    const Eigen::MatrixXd b = skycrane_input_jacobian(x_ref, u_nom, p);

    const Eigen::MatrixXd s = solve_continuous_riccati(a, b, q_weights, r_weights);
    const Eigen::MatrixXd gain = r_weights.llt().solve(b.transpose() * s);

    const Eigen::VectorXcd eigs = Eigen::EigenSolver<Eigen::MatrixXd>(a - b * gain).eigenvalues();
    for (Eigen::Index i = 0; i < eigs.size(); ++i)
        if (eigs[i].real() >= 0.0)
            throw std::runtime_error("lqr_gain: closed loop is not strictly stable");

    return {q_weights, r_weights, gain, x_ref, u_nom, 2.0 * t_nom};
}

LqrDesign lqr_gain(const SkycraneParams& p) {
    return lqr_gain(p, skycrane_default_q_weights(), skycrane_default_r_weights());
}

Eigen::Vector2d skycrane_control(const Eigen::VectorXd& x_est, const LqrDesign& design) {
    Eigen::Vector2d u = design.u_nom - design.gain * (x_est - design.x_ref);
    u[0] = std::min(std::max(u[0], 0.0), design.thrust_limit);
    u[1] = std::min(std::max(u[1], 0.0), design.thrust_limit);
    return u;
}

ContinuousModel make_skycrane_model(const SkycraneParams& p, double step_period) {
    ContinuousModel m;
    m.state_dim = kSkycraneStateDim;
    m.input_dim = kSkycraneInputDim;
    m.meas_dim = kSkycraneMeasDim;
    m.noise_dim = kSkycraneNoiseDim;
    m.dynamics = [p](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
        return skycrane_dynamics(x, u, Eigen::Vector3d::Zero(), p);
    };
    m.measurement = [p](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
        return skycrane_measure(x, u, p);
    };
    m.process_jacobian = [p](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
        return skycrane_process_jacobian(x, u, p);
    };
    m.measurement_jacobian = [p](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
        return skycrane_measurement_jacobian(x, u, p);
    };
    m.noise_map = skycrane_noise_map();
    m.step_period = step_period;
    return m;
}

}  // namespace kftune
