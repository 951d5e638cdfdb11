#include "kftune/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace kftune {

namespace {

constexpr double kPi = 3.1415926535897932384626433832795;
constexpr double kJitterCapFactor = 1e-2;   // escalation stops at 1e-2 * signal variance
constexpr double kJitterBaseFactor = 1e-8;

struct Factorization {
    Eigen::LLT<Eigen::MatrixXd> llt;
    double effective_jitter;
    double log_det;
};

// Cholesky with jitter doubled on failure, capped relative to the signal variance.
Factorization factorize(const KernelSpec& spec, const std::vector<DesignPoint>& points) {
    Eigen::MatrixXd base = build_covariance(spec, points);
    base.diagonal().array() -= spec.jitter;  // re-add below so escalation starts clean

    double jitter = spec.jitter;
    const double cap = kJitterCapFactor * spec.signal_variance;
    while (true) {
        Eigen::MatrixXd k = base;
        k.diagonal().array() += jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(k);
        if (llt.info() == Eigen::Success) {
            double log_det = 0.0;
            for (Eigen::Index i = 0; i < k.rows(); ++i)
                log_det += 2.0 * std::log(llt.matrixLLT()(i, i));
            if (std::isfinite(log_det))
                return {std::move(llt), jitter, log_det};
        }
        const double next = jitter == 0.0 ? kJitterBaseFactor * spec.signal_variance : 2.0 * jitter;
        if (next > cap) {
            std::ostringstream msg;
            msg << "TrainingSet: covariance factorization failed at jitter cap (signal_variance="
                << spec.signal_variance << ", length_scales=[" << spec.length_scales.transpose() << "])";
            throw std::runtime_error(msg.str());
        }
        jitter = next;
    }
}

double scaled_mvt_log_density(double v, Eigen::Index n, double log_det, double quad_form) {
    return std::lgamma(0.5 * (v + static_cast<double>(n))) - std::lgamma(0.5 * v)
         - 0.5 * static_cast<double>(n) * std::log((v - 2.0) * kPi)
         - 0.5 * log_det
         - 0.5 * (v + static_cast<double>(n)) * std::log1p(quad_form / (v - 2.0));
}

// --- Nelder-Mead local search over a box (maximization via negation) ------

using ObjectiveFn = std::function<double(const Eigen::VectorXd&)>;

Eigen::VectorXd clamp_to(const Eigen::VectorXd& x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    return x.cwiseMax(lo).cwiseMin(hi);
}

std::pair<Eigen::VectorXd, double> nelder_mead_minimize(const ObjectiveFn& f,
                                                        const Eigen::VectorXd& x0,
                                                        const Eigen::VectorXd& lo,
                                                        const Eigen::VectorXd& hi,
                                                        int max_iterations) {
    const Eigen::Index d = x0.size();
    std::vector<Eigen::VectorXd> simplex;
    std::vector<double> fv;
    simplex.push_back(clamp_to(x0, lo, hi));
    for (Eigen::Index i = 0; i < d; ++i) {
        Eigen::VectorXd p = simplex[0];
        p[i] += 0.1 * (hi[i] - lo[i]);
        simplex.push_back(clamp_to(p, lo, hi));
    }
    for (auto& p : simplex) fv.push_back(f(p));

    auto order = [&] {
        std::vector<size_t> idx(simplex.size());
        for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return fv[a] < fv[b]; });
        std::vector<Eigen::VectorXd> s2;
        std::vector<double> f2;
        for (size_t i : idx) { s2.push_back(simplex[i]); f2.push_back(fv[i]); }
        simplex.swap(s2);
        fv.swap(f2);
    };
    order();

    for (int it = 0; it < max_iterations; ++it) {
        const size_t worst = simplex.size() - 1;
        if (std::abs(fv[worst] - fv[0]) < 1e-10 * (1.0 + std::abs(fv[0]))) break;

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
        for (size_t i = 0; i < worst; ++i) centroid += simplex[i];
        centroid /= static_cast<double>(worst);

        auto try_point = [&](double coef) {
            Eigen::VectorXd p = clamp_to(centroid + coef * (centroid - simplex[worst]), lo, hi);
            return std::make_pair(p, f(p));
        };

        auto [xr, fr] = try_point(1.0);  // reflection
        if (fr < fv[0]) {
            auto [xe, fe] = try_point(2.0);  // expansion
            if (fe < fr) { simplex[worst] = xe; fv[worst] = fe; }
            else         { simplex[worst] = xr; fv[worst] = fr; }
        } else if (fr < fv[worst - 1]) {
            simplex[worst] = xr; fv[worst] = fr;
        } else {
            auto [xc, fc] = try_point(fr < fv[worst] ? 0.5 : -0.5);  // contraction
            if (fc < std::min(fr, fv[worst])) {
                simplex[worst] = xc; fv[worst] = fc;
            } else {  // shrink toward best
                for (size_t i = 1; i < simplex.size(); ++i) {
                    simplex[i] = clamp_to(simplex[0] + 0.5 * (simplex[i] - simplex[0]), lo, hi);
                    fv[i] = f(simplex[i]);
                }
            }
        }
        order();
    }
    return {simplex[0], fv[0]};
}

}  // namespace

TrainingSet TrainingSet::build(std::vector<DesignPoint> points, std::vector<double> values,
                               KernelSpec kernel, TrainingOptions opts) {
    if (points.size() != values.size())
        throw std::invalid_argument("TrainingSet: points/values length mismatch");
    if (points.empty())
        throw std::invalid_argument("TrainingSet: empty training data");
    if (!(opts.dof > 2.0))
        throw std::invalid_argument("TrainingSet: dof must exceed 2");
    kernel.validate();
    const Eigen::Index dim = points.front().size();
    for (const auto& p : points)
        if (p.size() != dim)
            throw std::invalid_argument("TrainingSet: inconsistent point dimensions");
    if (kernel.length_scales.size() != dim)
        throw std::invalid_argument("TrainingSet: kernel dimension mismatch");
    for (double y : values)
        if (!std::isfinite(y))
            throw std::invalid_argument("TrainingSet: non-finite training value");

    // Merge exact duplicates by averaging their values.
    std::vector<DesignPoint> merged_points;
    std::vector<double> merged_sums;
    std::vector<int> merged_counts;
    for (size_t i = 0; i < points.size(); ++i) {
        bool found = false;
        for (size_t j = 0; j < merged_points.size(); ++j) {
            if (merged_points[j] == points[i]) {
                merged_sums[j] += values[i];
                merged_counts[j] += 1;
                found = true;
                break;
            }
        }
        if (!found) {
            merged_points.push_back(points[i]);
            merged_sums.push_back(values[i]);
            merged_counts.push_back(1);
        }
    }

    TrainingSet ts;
    ts.points_ = std::move(merged_points);
    ts.values_.resize(ts.points_.size());
    for (size_t i = 0; i < ts.values_.size(); ++i)
        ts.values_[i] = merged_sums[i] / merged_counts[i];
    ts.kernel_ = std::move(kernel);
    ts.opts_ = std::move(opts);

    ts.scaled_.reserve(ts.points_.size());
    for (const auto& p : ts.points_)
        ts.scaled_.push_back(ts.opts_.rescale_bounds ? ts.opts_.rescale_bounds->to_unit(p) : p);

    const Eigen::Index n = ts.size();
    ts.y_offset_ = 0.0;
    if (ts.opts_.center_mean) {
        for (double y : ts.values_) ts.y_offset_ += y;
        ts.y_offset_ /= static_cast<double>(n);
    }
    ts.centered_.resize(n);
    for (Eigen::Index i = 0; i < n; ++i)
        ts.centered_[i] = ts.values_[static_cast<size_t>(i)] - ts.y_offset_;

    Factorization fac = factorize(ts.kernel_, ts.scaled_);
    ts.llt_ = std::move(fac.llt);
    ts.effective_jitter_ = fac.effective_jitter;
    ts.log_det_ = fac.log_det;
    ts.alpha_ = ts.llt_.solve(ts.centered_);
    ts.quad_form_ = ts.centered_.dot(ts.alpha_);
    return ts;
}

TrainingSet TrainingSet::with_kernel(KernelSpec kernel, double dof) const {
    TrainingOptions opts = opts_;
    opts.dof = dof;
    return build(points_, values_, std::move(kernel), std::move(opts));
}

double TrainingSet::min_value() const {
    return *std::min_element(values_.begin(), values_.end());
}

double TrainingSet::log_marginal_likelihood() const {
    return scaled_mvt_log_density(opts_.dof, size(), log_det_, quad_form_);
}

StudentTPosterior TrainingSet::predict(const DesignPoint& query) const {
    if (query.size() != dim())
        throw std::invalid_argument("posterior_predict: query dimension mismatch");
    const DesignPoint q = opts_.rescale_bounds ? opts_.rescale_bounds->to_unit(query) : query;

    const Eigen::Index n = size();
    Eigen::VectorXd k21(n);
    for (Eigen::Index i = 0; i < n; ++i)
        k21[i] = kernel_eval(kernel_, q, scaled_[static_cast<size_t>(i)]);
    const double k22 = kernel_.signal_variance + effective_jitter_;

    const double mean = y_offset_ + k21.dot(alpha_);
    const Eigen::VectorXd w = llt_.solve(k21);
    const double schur = std::max(0.0, k22 - k21.dot(w));
    const double v = opts_.dof;
    const double scale = std::max(0.0, (v + quad_form_) / (v + static_cast<double>(n)) * schur);
    return {v + static_cast<double>(n), mean, scale};
}

double log_marginal_likelihood(const TrainingSet& ts) { return ts.log_marginal_likelihood(); }

StudentTPosterior posterior_predict(const TrainingSet& ts, const DesignPoint& query) {
    return ts.predict(query);
}

FitResult fit_hyperparameters(const TrainingSet& ts, const FitOptions& opts) {
    if (ts.size() < 2)
        throw std::invalid_argument("fit_hyperparameters: at least 2 training pairs required");

    const Eigen::Index d = ts.dim();
    const Eigen::Index n_hyp = d + 1 + (opts.fit_dof ? 1 : 0);

    // Variance of the centered values sets the signal-variance search range.
    double mean_y = 0.0;
    for (double y : ts.values()) mean_y += y;
    mean_y /= static_cast<double>(ts.size());
    double var_y = 0.0;
    for (double y : ts.values()) var_y += (y - mean_y) * (y - mean_y);
    var_y /= static_cast<double>(ts.size());
    if (var_y < 1e-12) var_y = 1e-12;

    Eigen::VectorXd lo(n_hyp), hi(n_hyp);
    if (opts.log_lower.size() == n_hyp && opts.log_upper.size() == n_hyp) {
        lo = opts.log_lower;
        hi = opts.log_upper;
    } else if (opts.log_lower.size() == 0 && opts.log_upper.size() == 0) {
        for (Eigen::Index i = 0; i < d; ++i) { lo[i] = std::log(0.02); hi[i] = std::log(20.0); }
        lo[d] = std::log(1e-6 * var_y);
        hi[d] = std::log(1e3 * var_y);
        if (opts.fit_dof) { lo[d + 1] = std::log(0.01); hi[d + 1] = std::log(28.0); }  // dof in (2, 30]
    } else {
        throw std::invalid_argument("fit_hyperparameters: log bounds must cover every hyperparameter");
    }

    auto decode = [&](const Eigen::VectorXd& theta) {
        KernelSpec spec = ts.kernel();
        spec.length_scales = theta.head(d).array().exp().matrix();
        spec.signal_variance = std::exp(theta[d]);
        spec.jitter = kJitterBaseFactor * spec.signal_variance;
        double dof = opts.fit_dof ? 2.0 + std::exp(theta[d + 1]) : ts.dof();
        return std::make_pair(spec, dof);
    };

    std::vector<DesignPoint> scaled;
    scaled.reserve(ts.points().size());
    for (const auto& p : ts.points())
        scaled.push_back(ts.options().rescale_bounds ? ts.options().rescale_bounds->to_unit(p) : p);
    Eigen::VectorXd centered(ts.size());
    const double offset = ts.options().center_mean ? mean_y : 0.0;
    for (Eigen::Index i = 0; i < ts.size(); ++i)
        centered[i] = ts.values()[static_cast<size_t>(i)] - offset;

    auto neg_lml = [&](const Eigen::VectorXd& theta) -> double {
        auto [spec, dof] = decode(theta);
        try {
            Factorization fac = factorize(spec, scaled);
            const Eigen::VectorXd alpha = fac.llt.solve(centered);
            const double quad = centered.dot(alpha);
            const double lml = scaled_mvt_log_density(dof, ts.size(), fac.log_det, quad);
            return std::isfinite(lml) ? -lml : std::numeric_limits<double>::infinity();
        } catch (const std::runtime_error&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    // Latin-hypercube starts in log space.
    std::mt19937_64 rng(opts.rng_seed);
    std::vector<Eigen::VectorXd> starts;
    {
        const int s = opts.n_starts;
        std::vector<std::vector<int>> strata(static_cast<size_t>(n_hyp));
        for (auto& col : strata) {
            col.resize(static_cast<size_t>(s));
            for (int i = 0; i < s; ++i) col[static_cast<size_t>(i)] = i;
            std::shuffle(col.begin(), col.end(), rng);
        }
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        for (int i = 0; i < s; ++i) {
            Eigen::VectorXd theta(n_hyp);
            for (Eigen::Index j = 0; j < n_hyp; ++j) {
                const double frac = (strata[static_cast<size_t>(j)][static_cast<size_t>(i)] + u01(rng)) / s;
                theta[j] = lo[j] + frac * (hi[j] - lo[j]);
            }
            starts.push_back(theta);
        }
    }

    double best = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_theta;
    for (const auto& s : starts) {
        const double f0 = neg_lml(s);
        if (f0 < best) { best = f0; best_theta = s; }
        if (!std::isfinite(f0)) continue;
        auto [x, fx] = nelder_mead_minimize(neg_lml, s, lo, hi, opts.max_local_iterations);
        if (fx < best) { best = fx; best_theta = x; }
    }

    if (!std::isfinite(best)) {
        return {ts.kernel(), ts.dof(), ts.log_marginal_likelihood(), /*fell_back=*/true};
    }
    auto [spec, dof] = decode(best_theta);
    return {spec, dof, -best, /*fell_back=*/false};
}

TrainingSet refit(const TrainingSet& ts, const FitOptions& opts) {
    const FitResult fr = fit_hyperparameters(ts, opts);
    if (fr.fell_back) return ts;
    return ts.with_kernel(fr.kernel, fr.dof);
}

}  // namespace kftune
