#include "kftune/direct.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

namespace kftune {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Rect {
    Eigen::VectorXd center;   // unit-box coordinates
    std::vector<int> levels;  // trisections applied per dimension
    double value = kInf;
    int id = 0;               // creation order, used for tie-breaks

    double size() const {
        double s = 0.0;
        for (int l : levels) s += std::pow(3.0, -2.0 * l);
        return 0.5 * std::sqrt(s);
    }
};

}  // namespace

DirectResult direct_minimize(const std::function<double(const DesignPoint&)>& objective,
                             const BoxBounds& bounds, const DirectBudget& budget) {
    bounds.validate();
    budget.validate();
    const Eigen::Index d = bounds.dim();

    int evaluations = 0;
    DesignPoint best_point;
    double best_value = kInf;

    auto evaluate = [&](const Eigen::VectorXd& unit_center) -> double {
        const DesignPoint q = bounds.from_unit(unit_center);
        double v = objective(q);
        ++evaluations;
        if (!std::isfinite(v)) v = kInf;
        if (v < best_value) {  // strict: the first point wins ties
            best_value = v;
            best_point = q;
        }
        return v;
    };

    std::vector<Rect> rects;
    {
        Rect r0;
        r0.center = Eigen::VectorXd::Constant(d, 0.5);
        r0.levels.assign(static_cast<size_t>(d), 0);
        r0.value = evaluate(r0.center);
        r0.id = 0;
        rects.push_back(std::move(r0));
    }

    int next_id = 1;

    auto divisible_dims = [&](const Rect& r) {
        // Longest sides (minimum level), excluding dims at the depth cap.
        std::vector<Eigen::Index> dims;
        const int min_level = *std::min_element(r.levels.begin(), r.levels.end());
        if (min_level >= budget.max_rectangle_divisions) return dims;
        for (Eigen::Index i = 0; i < d; ++i)
            if (r.levels[static_cast<size_t>(i)] == min_level) dims.push_back(i);
        return dims;
    };

    while (evaluations < budget.max_evaluations) {
        // One representative per distinct size: lowest value, then lowest id.
        std::map<double, size_t> class_best;
        for (size_t i = 0; i < rects.size(); ++i) {
            if (divisible_dims(rects[i]).empty()) continue;
            const double s = rects[i].size();
            auto it = class_best.find(s);
            if (it == class_best.end()) {
                class_best[s] = i;
            } else {
                const Rect& cur = rects[it->second];
                const Rect& cand = rects[i];
                if (cand.value < cur.value || (cand.value == cur.value && cand.id < cur.id))
                    it->second = i;
            }
        }
        if (class_best.empty()) break;

        std::vector<std::pair<double, size_t>> classes(class_best.begin(), class_best.end());
        const size_t m = classes.size();

        std::vector<size_t> selected;
        for (size_t j = 0; j < m; ++j) {
            const double dj = classes[j].first;
            const double fj = rects[classes[j].second].value;
            if (!std::isfinite(fj)) continue;

            double max_lower = 0.0;
            for (size_t k = 0; k < j; ++k) {
                const double fk = rects[classes[k].second].value;
                if (!std::isfinite(fk)) continue;
                max_lower = std::max(max_lower, (fj - fk) / (dj - classes[k].first));
            }
            double min_upper = kInf;
            for (size_t k = j + 1; k < m; ++k) {
                const double fk = rects[classes[k].second].value;
                if (!std::isfinite(fk)) continue;
                min_upper = std::min(min_upper, (fk - fj) / (classes[k].first - dj));
            }
            if (max_lower > min_upper) continue;

            if (std::isfinite(min_upper)) {
                // Sufficient-descent condition with the largest admissible slope.
                if (best_value != 0.0) {
                    if (fj - min_upper * dj > best_value - budget.epsilon * std::abs(best_value)) continue;
                } else {
                    if (fj > min_upper * dj) continue;
                }
            }
            selected.push_back(classes[j].second);
        }
        if (selected.empty()) break;

        // Divide from the largest selected class down.
        std::sort(selected.begin(), selected.end(),
                  [&](size_t a, size_t b) { return rects[a].size() > rects[b].size(); });

        bool out_of_budget = false;
        for (size_t idx : selected) {
            auto dims = divisible_dims(rects[idx]);
            const int remaining = budget.max_evaluations - evaluations;
            if (remaining < 2) { out_of_budget = true; break; }
            if (static_cast<int>(dims.size()) * 2 > remaining)
                dims.resize(static_cast<size_t>(remaining / 2));

            const int level = rects[idx].levels[static_cast<size_t>(dims.front())];
            const double delta = std::pow(3.0, -(level + 1));

            struct Sample { Eigen::Index dim; Eigen::VectorXd lo_c, hi_c; double lo_f, hi_f; };
            std::vector<Sample> samples;
            for (Eigen::Index i : dims) {
                Sample s;
                s.dim = i;
                s.lo_c = rects[idx].center; s.lo_c[i] -= delta;
                s.hi_c = rects[idx].center; s.hi_c[i] += delta;
                s.lo_f = evaluate(s.lo_c);
                s.hi_f = evaluate(s.hi_c);
                samples.push_back(std::move(s));
            }

            std::stable_sort(samples.begin(), samples.end(), [](const Sample& a, const Sample& b) {
                return std::min(a.lo_f, a.hi_f) < std::min(b.lo_f, b.hi_f);
            });

            // Best dimension is split first so its children keep the largest share.
            for (const auto& s : samples) {
                rects[idx].levels[static_cast<size_t>(s.dim)] += 1;
                Rect lo{s.lo_c, rects[idx].levels, s.lo_f, next_id++};
                Rect hi{s.hi_c, rects[idx].levels, s.hi_f, next_id++};
                rects.push_back(std::move(lo));
                rects.push_back(std::move(hi));
            }
            if (evaluations >= budget.max_evaluations) { out_of_budget = true; break; }
        }
        if (out_of_budget) break;
    }

    if (!std::isfinite(best_value))
        throw std::runtime_error("direct_minimize: every objective evaluation was non-finite");
    return {best_point, best_value, evaluations};
}

}  // namespace kftune
