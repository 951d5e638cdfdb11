#include "kftune/surrogate.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace kftune;

namespace {

constexpr double kPi = 3.1415926535897932384626433832795;

KernelSpec make_kernel(Eigen::Index dim, double ls, double sv, double jitter = 0.0) {
    KernelSpec spec;
    spec.family = KernelFamily::Matern52;
    spec.length_scales = Eigen::VectorXd::Constant(dim, ls);
    spec.signal_variance = sv;
    spec.jitter = jitter;
    return spec;
}

std::vector<DesignPoint> random_points(int n, Eigen::Index dim, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<DesignPoint> pts;
    for (int i = 0; i < n; ++i) {
        DesignPoint p(dim);
        for (Eigen::Index j = 0; j < dim; ++j) p[j] = u(rng);
        pts.push_back(p);
    }
    return pts;
}

// Reference evaluation of the conditional through explicit matrix inverses.
StudentTPosterior brute_force_posterior(const std::vector<DesignPoint>& pts,
                                        const std::vector<double>& ys, const KernelSpec& spec,
                                        double v, const DesignPoint& q) {
    const Eigen::Index n = static_cast<Eigen::Index>(pts.size());
    Eigen::MatrixXd k11(n, n);
    Eigen::VectorXd k21(n), y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) k11(i, j) = kernel_eval(spec, pts[i], pts[j]);
        k11(i, i) += spec.jitter;
        k21[i] = kernel_eval(spec, q, pts[i]);
        y[i] = ys[static_cast<size_t>(i)];
    }
    const Eigen::MatrixXd k11_inv = k11.inverse();
    const double k22 = spec.signal_variance + spec.jitter;
    const double u = k21.dot(k11_inv * y);
    const double d = y.dot(k11_inv * y);
    const double sigma = (v + d) / (v + n) * (k22 - k21.dot(k11_inv * k21));
    return {v + static_cast<double>(n), u, sigma};
}

}  // namespace

TEST_SUITE("surrogate") {

TEST_CASE("single standardized observation matches the scaled-t log density") {
    // n=1, y=0, K=[1], v=3: lgamma(2) - lgamma(1.5) - 0.5*log(pi), independently -0.45158270528945466.
    TrainingOptions opts;
    opts.dof = 3.0;
    opts.center_mean = false;
    const auto ts = TrainingSet::build({Eigen::VectorXd::Zero(1)}, {0.0}, make_kernel(1, 1.0, 1.0), opts);
    CHECK(log_marginal_likelihood(ts) == doctest::Approx(-0.45158270528945466).epsilon(1e-12));
}

TEST_CASE("likelihood decreases as observations grow with fixed K") {
    TrainingOptions opts;
    opts.dof = 4.0;
    opts.center_mean = false;
    const auto pts = random_points(6, 1, 3);
    std::vector<double> y(6, 0.0);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n01;
    for (auto& v : y) v = n01(rng);

    double prev = std::numeric_limits<double>::infinity();
    for (double scale : {1.0, 2.0, 5.0, 20.0}) {
        std::vector<double> ys;
        for (double v : y) ys.push_back(scale * v);
        const auto ts = TrainingSet::build(pts, ys, make_kernel(1, 0.5, 1.0, 1e-10), opts);
        const double lml = log_marginal_likelihood(ts);
        CHECK(lml < prev);
        prev = lml;
    }
}

TEST_CASE("large dof approaches the Gaussian log density") {
    TrainingOptions opts;
    opts.dof = 1e6;
    opts.center_mean = false;
    const auto pts = random_points(5, 2, 9);
    std::vector<double> ys = {0.3, -0.2, 0.5, 0.1, -0.4};
    const KernelSpec spec = make_kernel(2, 0.7, 1.2, 1e-10);
    const auto ts = TrainingSet::build(pts, ys, spec, opts);

    // N(0, K) log density evaluated with explicit inverse.
    const Eigen::MatrixXd k = build_covariance(spec, pts);
    Eigen::VectorXd y(5);
    for (int i = 0; i < 5; ++i) y[i] = ys[static_cast<size_t>(i)];
    const double gaussian = -0.5 * y.dot(k.inverse() * y) - 0.5 * std::log(k.determinant())
                          - 2.5 * std::log(2.0 * kPi);
    CHECK(log_marginal_likelihood(ts) == doctest::Approx(gaussian).epsilon(1e-3));
}

TEST_CASE("interpolation: querying a training point pins mean and collapses scale") {
    TrainingOptions opts;
    opts.dof = 5.0;
    opts.center_mean = false;
    const auto pts = random_points(6, 1, 21);
    std::vector<double> ys = {1.0, -0.5, 0.2, 0.9, -1.2, 0.4};
    const auto ts = TrainingSet::build(pts, ys, make_kernel(1, 0.5, 1.0), opts);
    const auto post = posterior_predict(ts, pts[2]);
    CHECK(post.mean == doctest::Approx(0.2).epsilon(1e-7));
    CHECK(post.scale <= 1e-8);
}

TEST_CASE("prior reversion far from the data") {
    TrainingOptions opts;
    opts.dof = 5.0;
    opts.center_mean = false;
    const auto pts = random_points(4, 1, 33);
    std::vector<double> ys = {0.4, 0.6, -0.3, 0.8};
    const KernelSpec spec = make_kernel(1, 0.1, 2.0);
    const auto ts = TrainingSet::build(pts, ys, spec, opts);

    Eigen::VectorXd y(4);
    for (int i = 0; i < 4; ++i) y[i] = ys[static_cast<size_t>(i)];
    const Eigen::MatrixXd k = build_covariance(spec, pts);
    const double d = y.dot(k.inverse() * y);

    const auto post = posterior_predict(ts, Eigen::VectorXd::Constant(1, 100.0));
    CHECK(std::abs(post.mean) < 1e-9);
    CHECK(post.scale == doctest::Approx((5.0 + d) / (5.0 + 4.0) * 2.0).epsilon(1e-9));
}

TEST_CASE("five-point posterior matches the explicit-inverse reference") {
    TrainingOptions opts;
    opts.dof = 4.5;
    opts.center_mean = false;
    std::mt19937_64 rng(77);
    std::normal_distribution<double> n01;
    for (int rep = 0; rep < 20; ++rep) {
        const auto pts = random_points(5, 2, 100 + static_cast<uint64_t>(rep));
        std::vector<double> ys;
        for (int i = 0; i < 5; ++i) ys.push_back(n01(rng));
        const KernelSpec spec = make_kernel(2, 0.6, 1.5, 1e-10);
        const auto ts = TrainingSet::build(pts, ys, spec, opts);

        DesignPoint q(2);
        q << n01(rng) * 0.3 + 0.5, n01(rng) * 0.3 + 0.5;
        const auto fast = posterior_predict(ts, q);
        const auto slow = brute_force_posterior(pts, ys, spec, 4.5, q);
        CHECK(fast.dof == slow.dof);
        CHECK(fast.mean == doctest::Approx(slow.mean).epsilon(1e-10));
        CHECK(fast.scale == doctest::Approx(slow.scale).epsilon(1e-10));
    }
}

TEST_CASE("posterior scale is non-negative and dof adds the sample count") {
    TrainingOptions opts;
    opts.dof = 3.3;
    const auto pts = random_points(8, 2, 55);
    std::vector<double> ys;
    std::mt19937_64 rng(56);
    std::normal_distribution<double> n01;
    for (int i = 0; i < 8; ++i) ys.push_back(n01(rng));
    const auto ts = TrainingSet::build(pts, ys, make_kernel(2, 0.4, 1.0, 1e-10), opts);
    for (const auto& q : random_points(200, 2, 57)) {
        const auto post = posterior_predict(ts, q);
        CHECK(post.scale >= 0.0);
        CHECK(post.dof == doctest::Approx(3.3 + 8.0));
    }
}

TEST_CASE("adding a training point does not increase the scale there") {
    TrainingOptions opts;
    opts.dof = 5.0;
    opts.center_mean = false;
    const auto pts = random_points(6, 1, 58);
    std::vector<double> ys = {0.1, 0.3, -0.2, 0.7, 0.0, -0.5};
    const KernelSpec spec = make_kernel(1, 0.4, 1.0);
    const auto ts = TrainingSet::build(pts, ys, spec, opts);

    const DesignPoint q = Eigen::VectorXd::Constant(1, 0.37);
    const double before = posterior_predict(ts, q).scale;

    auto pts2 = pts;
    auto ys2 = ys;
    pts2.push_back(q);
    ys2.push_back(0.25);
    const auto ts2 = TrainingSet::build(pts2, ys2, spec, opts);
    CHECK(posterior_predict(ts2, q).scale <= before + 1e-12);
}

TEST_CASE("TP matches GP conditioning at very large dof") {
    TrainingOptions opts;
    opts.dof = 1e6;
    opts.center_mean = false;
    const auto pts = random_points(6, 1, 60);
    const KernelSpec spec = make_kernel(1, 0.5, 1.3, 1e-10);
    // Values drawn from the prior keep the quadratic form O(n), which the
    // dof -> infinity limit needs.
    std::vector<double> ys;
    {
        const Eigen::MatrixXd cov = build_covariance(spec, pts);
        const Eigen::MatrixXd l = Eigen::LLT<Eigen::MatrixXd>(cov).matrixL();
        std::mt19937_64 prior_rng(62);
        std::normal_distribution<double> prior_n01;
        Eigen::VectorXd z6(6);
        for (int i = 0; i < 6; ++i) z6[i] = prior_n01(prior_rng);
        const Eigen::VectorXd y6 = l * z6;
        ys.assign(y6.data(), y6.data() + 6);
    }
    const auto ts = TrainingSet::build(pts, ys, spec, opts);

    Eigen::MatrixXd k = build_covariance(spec, pts);
    Eigen::VectorXd y(6);
    for (int i = 0; i < 6; ++i) y[i] = ys[static_cast<size_t>(i)];
    const Eigen::MatrixXd k_inv = k.inverse();

    for (const auto& q : random_points(20, 1, 61)) {
        Eigen::VectorXd k21(6);
        for (int i = 0; i < 6; ++i) k21[i] = kernel_eval(spec, q, pts[static_cast<size_t>(i)]);
        const double gp_mean = k21.dot(k_inv * y);
        const double gp_var = spec.signal_variance + spec.jitter - k21.dot(k_inv * k21);
        const auto post = posterior_predict(ts, q);
        CHECK(post.mean == doctest::Approx(gp_mean).epsilon(1e-3));
        if (gp_var > 1e-8)
            CHECK(post.scale == doctest::Approx(gp_var).epsilon(1e-3));
    }
}

TEST_CASE("near-duplicate points escalate the jitter until the factorization holds") {
    TrainingOptions opts;
    opts.center_mean = false;
    const DesignPoint a = Eigen::VectorXd::Constant(1, 0.5);
    const DesignPoint b = Eigen::VectorXd::Constant(1, 0.5 + 1e-13);
    const auto ts = TrainingSet::build({a, b}, {1.0, 1.0}, make_kernel(1, 0.5, 1.0, 0.0), opts);
    CHECK(ts.effective_jitter() > 0.0);
    CHECK(std::isfinite(log_marginal_likelihood(ts)));
}

TEST_CASE("duplicate points are merged by averaging") {
    TrainingOptions opts;
    opts.center_mean = false;
    const DesignPoint p = Eigen::VectorXd::Constant(1, 0.5);
    const DesignPoint p2 = Eigen::VectorXd::Constant(1, 0.9);
    const auto ts = TrainingSet::build({p, p2, p}, {1.0, 0.3, 3.0}, make_kernel(1, 0.5, 1.0), opts);
    REQUIRE(ts.size() == 2);
    CHECK(ts.values()[0] == doctest::Approx(2.0));
}

TEST_CASE("input rescaling maps the box onto unit coordinates") {
    // With rescaling, distances are relative to the box, so a kernel with
    // unit-box length scales behaves identically on a stretched box.
    TrainingOptions opts_a;
    opts_a.center_mean = false;
    opts_a.rescale_bounds = BoxBounds(Eigen::VectorXd::Constant(1, 0.0), Eigen::VectorXd::Constant(1, 1.0));
    TrainingOptions opts_b = opts_a;
    opts_b.rescale_bounds = BoxBounds(Eigen::VectorXd::Constant(1, 0.0), Eigen::VectorXd::Constant(1, 1000.0));

    const KernelSpec spec = make_kernel(1, 0.3, 1.0);
    std::vector<DesignPoint> pa, pb;
    const std::vector<double> ys = {0.2, 0.9, -0.4};
    for (double v : {0.1, 0.5, 0.8}) {
        pa.push_back(Eigen::VectorXd::Constant(1, v));
        pb.push_back(Eigen::VectorXd::Constant(1, 1000.0 * v));
    }
    const auto ta = TrainingSet::build(pa, ys, spec, opts_a);
    const auto tb = TrainingSet::build(pb, ys, spec, opts_b);
    const auto post_a = posterior_predict(ta, Eigen::VectorXd::Constant(1, 0.3));
    const auto post_b = posterior_predict(tb, Eigen::VectorXd::Constant(1, 300.0));
    CHECK(post_a.mean == doctest::Approx(post_b.mean).epsilon(1e-12));
    CHECK(post_a.scale == doctest::Approx(post_b.scale).epsilon(1e-12));
}

TEST_CASE("hyperparameter fit recovers a known length scale within a factor of two") {
    // Data drawn from a zero-mean process with Matern52, ls = 0.3.
    const int n = 20;
    const auto pts = random_points(n, 1, 70);
    const KernelSpec truth = make_kernel(1, 0.3, 1.0, 1e-10);
    const Eigen::MatrixXd k = build_covariance(truth, pts);
    const Eigen::MatrixXd l = Eigen::LLT<Eigen::MatrixXd>(k).matrixL();
    std::mt19937_64 rng(71);
    std::normal_distribution<double> n01;
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) z[i] = n01(rng);
    const Eigen::VectorXd y = l * z;
    std::vector<double> ys(y.data(), y.data() + n);

    TrainingOptions opts;
    opts.dof = 5.0;
    opts.center_mean = false;
    const auto ts = TrainingSet::build(pts, ys, make_kernel(1, 1.0, 1.0, 1e-8), opts);
    const FitResult fit = fit_hyperparameters(ts);
    REQUIRE_FALSE(fit.fell_back);
    CHECK(fit.kernel.length_scales[0] > 0.15);
    CHECK(fit.kernel.length_scales[0] < 0.6);
}

TEST_CASE("fit result is at least as likely as every start") {
    const auto pts = random_points(10, 1, 80);
    std::vector<double> ys;
    std::mt19937_64 rng(81);
    std::normal_distribution<double> n01;
    for (int i = 0; i < 10; ++i) ys.push_back(n01(rng));
    const auto ts = TrainingSet::build(pts, ys, make_kernel(1, 0.7, 1.0, 1e-8), {});
    const FitResult fit = fit_hyperparameters(ts);
    const auto refitted = ts.with_kernel(fit.kernel, fit.dof);
    CHECK(refitted.log_marginal_likelihood() >= ts.log_marginal_likelihood() - 1e-9);
    CHECK(fit.log_marginal == doctest::Approx(refitted.log_marginal_likelihood()).epsilon(1e-6));
}

TEST_CASE("flat data drives the signal variance to the lower bound") {
    const auto pts = random_points(8, 1, 90);
    const std::vector<double> ys(8, 3.14);
    TrainingOptions opts;
    opts.center_mean = true;
    const auto ts = TrainingSet::build(pts, ys, make_kernel(1, 0.5, 1.0, 1e-8), opts);
    const FitResult fit = fit_hyperparameters(ts);
    REQUIRE_FALSE(fit.fell_back);
    CHECK(fit.kernel.signal_variance < 1e-9);
}

TEST_CASE("fitting is deterministic") {
    const auto pts = random_points(9, 1, 95);
    std::vector<double> ys;
    std::mt19937_64 rng(96);
    std::normal_distribution<double> n01;
    for (int i = 0; i < 9; ++i) ys.push_back(n01(rng));
    const auto ts = TrainingSet::build(pts, ys, make_kernel(1, 0.7, 1.0, 1e-8), {});
    const FitResult a = fit_hyperparameters(ts);
    const FitResult b = fit_hyperparameters(ts);
    CHECK(a.kernel.length_scales[0] == b.kernel.length_scales[0]);
    CHECK(a.kernel.signal_variance == b.kernel.signal_variance);
    CHECK(a.dof == b.dof);
}

TEST_CASE("input validation") {
    CHECK_THROWS_AS(TrainingSet::build({}, {}, make_kernel(1, 1.0, 1.0), {}), std::invalid_argument);
    CHECK_THROWS_AS(TrainingSet::build({Eigen::VectorXd::Zero(1)}, {1.0, 2.0}, make_kernel(1, 1.0, 1.0), {}),
                    std::invalid_argument);
    TrainingOptions bad_dof;
    bad_dof.dof = 2.0;
    CHECK_THROWS_AS(TrainingSet::build({Eigen::VectorXd::Zero(1)}, {1.0}, make_kernel(1, 1.0, 1.0), bad_dof),
                    std::invalid_argument);
    const auto one = TrainingSet::build({Eigen::VectorXd::Zero(1)}, {1.0}, make_kernel(1, 1.0, 1.0), {});
    CHECK_THROWS_AS(fit_hyperparameters(one), std::invalid_argument);
    CHECK_THROWS_AS(posterior_predict(one, Eigen::VectorXd::Zero(2)), std::invalid_argument);
}

}  // TEST_SUITE
