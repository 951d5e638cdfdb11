#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace kftune {

/// A candidate assignment of the tunable noise parameters.
using DesignPoint = Eigen::VectorXd;

/// Axis-aligned box constraints for a search space.
struct BoxBounds {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    BoxBounds() = default;
    BoxBounds(Eigen::VectorXd lo, Eigen::VectorXd hi)
        : lower(std::move(lo)), upper(std::move(hi)) {
        validate();
    }

    static BoxBounds unit(Eigen::Index dim) {
        return BoxBounds(Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim));
    }

    Eigen::Index dim() const { return lower.size(); }

    void validate() const {
        if (lower.size() != upper.size())
            throw std::invalid_argument("BoxBounds: lower/upper size mismatch");
        if (lower.size() == 0)
            throw std::invalid_argument("BoxBounds: empty bounds");
        for (Eigen::Index i = 0; i < lower.size(); ++i)
            if (!(lower[i] < upper[i]))
                throw std::invalid_argument("BoxBounds: lower must be < upper in every dimension");
    }

    bool contains(const DesignPoint& q, double tol = 0.0) const {
        if (q.size() != lower.size()) return false;
        for (Eigen::Index i = 0; i < q.size(); ++i)
            if (q[i] < lower[i] - tol || q[i] > upper[i] + tol) return false;
        return true;
    }

    DesignPoint clamp(DesignPoint q) const {
        for (Eigen::Index i = 0; i < q.size(); ++i)
            q[i] = std::min(std::max(q[i], lower[i]), upper[i]);
        return q;
    }

    /// Map a point in this box to the unit box.
    DesignPoint to_unit(const DesignPoint& q) const {
        return ((q - lower).array() / (upper - lower).array()).matrix();
    }

    /// Map a unit-box point back to this box.
    DesignPoint from_unit(const DesignPoint& u) const {
        return lower + ((upper - lower).array() * u.array()).matrix();
    }
};

}  // namespace kftune
