#pragma once

#include "kftune/direct.hpp"
#include "kftune/surrogate.hpp"
#include "kftune/types.hpp"

namespace kftune {

/// Current state of the search as the acquisition sees it.
struct AcquisitionState {
    double best_value;          // minimum observed objective value
    const TrainingSet* surrogate;
};

/// Closed-form expected improvement below `best_value` under a Student-t
/// predictive posterior. The posterior scale is a squared scale; its square
/// root enters the standardization.
double expected_improvement(const StudentTPosterior& post, double best_value);

struct Proposal {
    DesignPoint point;
    double ei;
    bool exploration_fallback;  // every EI evaluation was zero; maximized posterior scale instead
};

/// Next sample proposal: maximizes EI over the box with the divided-rectangles
/// search. Falls back to maximizing the posterior scale when EI is flat zero.
Proposal propose_next(const TrainingSet& ts, const BoxBounds& bounds, const DirectBudget& budget);

}  // namespace kftune
