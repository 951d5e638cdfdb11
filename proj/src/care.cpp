#include "kftune/care.hpp"

#include <Eigen/Eigenvalues>

#include <stdexcept>

namespace kftune {

Eigen::MatrixXd solve_continuous_riccati(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                         const Eigen::MatrixXd& q, const Eigen::MatrixXd& r) {
    const Eigen::Index n = a.rows();
    if (a.cols() != n || b.rows() != n || q.rows() != n || q.cols() != n)
        throw std::invalid_argument("solve_continuous_riccati: dimension mismatch");
    if (r.rows() != b.cols() || r.cols() != b.cols())
        throw std::invalid_argument("solve_continuous_riccati: R shape mismatch");

    const Eigen::LLT<Eigen::MatrixXd> r_llt(r);
    if (r_llt.info() != Eigen::Success)
        throw std::invalid_argument("solve_continuous_riccati: R must be positive definite");

    Eigen::MatrixXd hamiltonian(2 * n, 2 * n);
    hamiltonian << a, -b * r_llt.solve(b.transpose()),
                   -q, -a.transpose();

    Eigen::ComplexEigenSolver<Eigen::MatrixXd> eig(hamiltonian);
    if (eig.info() != Eigen::Success)
        throw std::runtime_error("solve_continuous_riccati: Hamiltonian eigensolve failed");

    // Basis of the stable invariant subspace.
    Eigen::MatrixXcd stable(2 * n, n);
    Eigen::Index count = 0;
    for (Eigen::Index i = 0; i < 2 * n; ++i) {
        if (eig.eigenvalues()[i].real() < 0.0) {
            if (count == n)
                throw std::runtime_error("solve_continuous_riccati: too many stable eigenvalues");
            stable.col(count++) = eig.eigenvectors().col(i);
        }
    }
    if (count != n)
        throw std::runtime_error("solve_continuous_riccati: stable subspace has wrong dimension "
                                 "(system not stabilizable/detectable?)");

    const Eigen::MatrixXcd u1 = stable.topRows(n);
    const Eigen::MatrixXcd u2 = stable.bottomRows(n);
    const Eigen::MatrixXcd s_c = u2 * u1.fullPivLu().solve(Eigen::MatrixXcd::Identity(n, n));

    Eigen::MatrixXd s = s_c.real();
    s = 0.5 * (s + s.transpose()).eval();

    const Eigen::MatrixXd b_rinv_bt = b * r_llt.solve(b.transpose());
    auto residual_norm = [&](const Eigen::MatrixXd& x) {
        return (a.transpose() * x + x * a - x * b_rinv_bt * x + q).cwiseAbs().maxCoeff();
    };

    // Newton (Kleinman) polish: each step solves the Lyapunov equation
    // (A - B K)^T X + X (A - B K) = -(Q + K^T R K) for the next iterate.
    for (int it = 0; it < 8 && residual_norm(s) > 1e-10; ++it) {
        const Eigen::MatrixXd k_gain = r_llt.solve(b.transpose() * s);
        const Eigen::MatrixXd a_cl = a - b * k_gain;
        const Eigen::MatrixXd rhs = -(q + k_gain.transpose() * r * k_gain);

        // Kronecker-vectorized Lyapunov solve; fine at regulator-sized n.
        Eigen::MatrixXd op = Eigen::MatrixXd::Zero(n * n, n * n);
        const Eigen::MatrixXd at = a_cl.transpose();
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                for (Eigen::Index k = 0; k < n; ++k) {
                    op(i + j * n, k + j * n) += at(i, k);   // A_cl^T X
                    op(i + j * n, i + k * n) += at(j, k);   // X A_cl
                }
        Eigen::VectorXd rhs_v(n * n);
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index i = 0; i < n; ++i) rhs_v[i + j * n] = rhs(i, j);
        const Eigen::VectorXd x_v = op.partialPivLu().solve(rhs_v);
        Eigen::MatrixXd next(n, n);
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index i = 0; i < n; ++i) next(i, j) = x_v[i + j * n];
        next = 0.5 * (next + next.transpose()).eval();
        if (residual_norm(next) >= residual_norm(s)) break;
        s = next;
    }

    if (residual_norm(s) > 1e-8)
        throw std::runtime_error("solve_continuous_riccati: residual exceeds tolerance");
    return s;
}

}  // namespace kftune
