#include "kftune/kernel.hpp"

#include <cmath>
#include <stdexcept>

namespace kftune {

namespace {
constexpr double kSqrt3 = 1.7320508075688772935274463415059;
constexpr double kSqrt5 = 2.2360679774997896964091736687313;
}  // namespace

void KernelSpec::validate() const {
    if (length_scales.size() == 0)
        throw std::invalid_argument("KernelSpec: no length scales");
    if ((length_scales.array() <= 0.0).any())
        throw std::invalid_argument("KernelSpec: length scales must be positive");
    if (!(signal_variance > 0.0))
        throw std::invalid_argument("KernelSpec: signal variance must be positive");
    if (jitter < 0.0)
        throw std::invalid_argument("KernelSpec: jitter must be non-negative");
}

double kernel_eval(const KernelSpec& spec, const DesignPoint& a, const DesignPoint& b) {
    if (a.size() != spec.length_scales.size() || b.size() != spec.length_scales.size())
        throw std::invalid_argument("kernel_eval: point dimension does not match length scales");

    const double r2 = ((a - b).array() / spec.length_scales.array()).square().sum();
    switch (spec.family) {
        case KernelFamily::SquaredExponential:
            return spec.signal_variance * std::exp(-0.5 * r2);
        case KernelFamily::Matern32: {
            const double s = kSqrt3 * std::sqrt(r2);
            return spec.signal_variance * (1.0 + s) * std::exp(-s);
        }
        case KernelFamily::Matern52: {
            const double s = kSqrt5 * std::sqrt(r2);
            return spec.signal_variance * (1.0 + s + 5.0 * r2 / 3.0) * std::exp(-s);
        }
    }
    throw std::logic_error("kernel_eval: unknown kernel family");
}

Eigen::MatrixXd build_covariance(const KernelSpec& spec, const std::vector<DesignPoint>& points) {
    if (points.empty())
        throw std::invalid_argument("build_covariance: empty point list");
    const Eigen::Index n = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double v = kernel_eval(spec, points[static_cast<size_t>(i)], points[static_cast<size_t>(j)]);
            if (!std::isfinite(v))
                throw std::runtime_error("build_covariance: non-finite kernel value");
            k(i, j) = v;
            k(j, i) = v;
        }
        k(i, i) += spec.jitter;
    }
    return k;
}

}  // namespace kftune
