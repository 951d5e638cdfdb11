#include "kftune/acquisition.hpp"

#include "kftune/student_t.hpp"

#include <cmath>
#include <stdexcept>

namespace kftune {

double expected_improvement(const StudentTPosterior& post, double best_value) {
    if (post.dof <= 1.0)
        throw std::invalid_argument("expected_improvement: posterior dof must exceed 1");
    if (post.scale < 0.0)
        throw std::invalid_argument("expected_improvement: negative posterior scale");

    const double sigma = std::sqrt(post.scale);
    const double delta = best_value - post.mean;
    if (sigma < 1e-12) return std::max(0.0, delta);  // degenerate limit of the closed form

    const double v = post.dof;
    const double z = delta / sigma;
    const double ei = delta * student_t_cdf(z, v)
                    + v / (v - 1.0) * (1.0 + z * z / v) * sigma * student_t_pdf(z, v);
    return std::max(0.0, ei);
}

Proposal propose_next(const TrainingSet& ts, const BoxBounds& bounds, const DirectBudget& budget) {
    if (ts.size() == 0)
        throw std::invalid_argument("propose_next: empty training set");

    const AcquisitionState state{ts.min_value(), &ts};

    auto neg_ei = [&](const DesignPoint& q) {
        return -expected_improvement(state.surrogate->predict(q), state.best_value);
    };
    DirectResult res = direct_minimize(neg_ei, bounds, budget);
    if (res.value < 0.0)
        return {res.point, -res.value, /*exploration_fallback=*/false};

    // EI is flat zero everywhere it was probed; chase predictive uncertainty instead.
    auto neg_scale = [&](const DesignPoint& q) { return -state.surrogate->predict(q).scale; };
    DirectResult fb = direct_minimize(neg_scale, bounds, budget);
    return {fb.point, 0.0, /*exploration_fallback=*/true};
}

}  // namespace kftune
