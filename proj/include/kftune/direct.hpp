#pragma once

#include "kftune/types.hpp"

#include <functional>

namespace kftune {

struct DirectBudget {
    int max_evaluations = 400;
    int max_rectangle_divisions = 50;  // trisection depth cap per dimension
    double epsilon = 1e-4;             // potential-optimality slack

    void validate() const {
        if (max_evaluations < 1)
            throw std::invalid_argument("DirectBudget: max_evaluations must be >= 1");
        if (max_rectangle_divisions < 1)
            throw std::invalid_argument("DirectBudget: max_rectangle_divisions must be >= 1");
        if (epsilon < 0.0)
            throw std::invalid_argument("DirectBudget: epsilon must be non-negative");
    }
};

struct DirectResult {
    DesignPoint point;
    double value;
    int evaluations;
};

/// Deterministic derivative-free global minimization over a box
/// (divided-rectangles search with Jones-style potentially-optimal
/// selection). Non-finite objective values are treated as +infinity;
/// if every evaluation is non-finite the search fails.
DirectResult direct_minimize(const std::function<double(const DesignPoint&)>& objective,
                             const BoxBounds& bounds, const DirectBudget& budget);

}  // namespace kftune
