#pragma once

#include "kftune/types.hpp"

#include <Eigen/Dense>
#include <vector>

namespace kftune {

enum class KernelFamily { SquaredExponential, Matern32, Matern52 };

/// Stationary kernel with per-dimension length scales.
struct KernelSpec {
    KernelFamily family = KernelFamily::Matern52;
    Eigen::VectorXd length_scales;
    double signal_variance = 1.0;
    double jitter = 0.0;  // added to covariance diagonals

    void validate() const;
};

/// k(a, b). Symmetric, equals signal_variance at zero distance.
double kernel_eval(const KernelSpec& spec, const DesignPoint& a, const DesignPoint& b);

/// Dense kernel matrix over a point set, jitter added on the diagonal.
Eigen::MatrixXd build_covariance(const KernelSpec& spec, const std::vector<DesignPoint>& points);

}  // namespace kftune
