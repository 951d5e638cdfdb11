#include "kftune/direct.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace kftune;

namespace {

BoxBounds unit2() { return BoxBounds::unit(2); }

}  // namespace

TEST_SUITE("direct") {

TEST_CASE("2D quadratic minimum located within 1e-2 in 500 evaluations") {
    auto f = [](const DesignPoint& q) {
        return (q[0] - 0.3) * (q[0] - 0.3) + (q[1] - 0.3) * (q[1] - 0.3);
    };
    const DirectResult res = direct_minimize(f, unit2(), {500, 50, 1e-4});
    CHECK(res.evaluations <= 500);
    CHECK(std::abs(res.point[0] - 0.3) <= 1e-2);
    CHECK(std::abs(res.point[1] - 0.3) <= 1e-2);
}

TEST_CASE("constant objective returns the box center") {
    auto f = [](const DesignPoint&) { return 7.0; };
    const BoxBounds bounds(Eigen::VectorXd::Constant(2, -1.0), Eigen::VectorXd::Constant(2, 3.0));
    const DirectResult res = direct_minimize(f, bounds, {100, 50, 1e-4});
    CHECK(res.point[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(res.point[1] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(res.value == 7.0);
}

TEST_CASE("deterministic evaluation sequence") {
    std::vector<std::vector<double>> seq_a, seq_b;
    auto make = [](std::vector<std::vector<double>>& seq) {
        return [&seq](const DesignPoint& q) {
            seq.push_back({q[0], q[1]});
            return std::sin(5.0 * q[0]) + q[1] * q[1];
        };
    };
    const DirectResult a = direct_minimize(make(seq_a), unit2(), {250, 50, 1e-4});
    const DirectResult b = direct_minimize(make(seq_b), unit2(), {250, 50, 1e-4});
    CHECK(seq_a == seq_b);
    CHECK(a.point == b.point);
    CHECK(a.value == b.value);
    CHECK(a.evaluations == b.evaluations);
}

TEST_CASE("reported best value is non-increasing in evaluation count") {
    double running_best = std::numeric_limits<double>::infinity();
    std::vector<double> bests;
    auto f = [&](const DesignPoint& q) {
        const double v = std::cos(7.0 * q[0]) * std::sin(3.0 * q[1]) + 0.5 * q[0];
        running_best = std::min(running_best, v);
        bests.push_back(running_best);
        return v;
    };
    const DirectResult res = direct_minimize(f, unit2(), {300, 50, 1e-4});
    CHECK(res.value == bests.back());
    for (size_t i = 1; i < bests.size(); ++i) CHECK(bests[i] <= bests[i - 1]);
}

TEST_CASE("affine rescaling of the box does not change the search") {
    const Eigen::VectorXd lo = (Eigen::VectorXd(2) << -3.0, 10.0).finished();
    const Eigen::VectorXd hi = (Eigen::VectorXd(2) << 5.0, 11.0).finished();
    const BoxBounds box(lo, hi);
    auto f = [](const DesignPoint& q) {
        return (q[0] - 1.0) * (q[0] - 1.0) + 50.0 * (q[1] - 10.2) * (q[1] - 10.2);
    };
    auto f_unit = [&](const DesignPoint& u) { return f(box.from_unit(u)); };

    const DirectResult direct_box = direct_minimize(f, box, {400, 50, 1e-4});
    const DirectResult direct_unit = direct_minimize(f_unit, unit2(), {400, 50, 1e-4});
    const DesignPoint mapped = box.from_unit(direct_unit.point);
    CHECK(std::abs(direct_box.point[0] - mapped[0]) < 1e-12);
    CHECK(std::abs(direct_box.point[1] - mapped[1]) < 1e-12);
}

TEST_CASE("non-finite regions are skipped, full failure throws") {
    auto partial = [](const DesignPoint& q) {
        if (q[0] < 0.4) return std::numeric_limits<double>::quiet_NaN();
        return (q[0] - 0.7) * (q[0] - 0.7);
    };
    const DirectResult res = direct_minimize(partial, BoxBounds::unit(1), {200, 50, 1e-4});
    CHECK(std::abs(res.point[0] - 0.7) < 1e-2);

    auto all_bad = [](const DesignPoint&) { return std::numeric_limits<double>::quiet_NaN(); };
    CHECK_THROWS_AS(direct_minimize(all_bad, BoxBounds::unit(1), {50, 50, 1e-4}), std::runtime_error);
}

TEST_CASE("budget validation") {
    auto f = [](const DesignPoint&) { return 0.0; };
    CHECK_THROWS_AS(direct_minimize(f, unit2(), {0, 50, 1e-4}), std::invalid_argument);
    CHECK_THROWS_AS(direct_minimize(f, unit2(), {10, 50, -1.0}), std::invalid_argument);
}

}  // TEST_SUITE
