#include "kftune/consistency.hpp"

#include "kftune/student_t.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace kftune {

void StatSeries::validate() const {
    if (values.empty()) throw std::invalid_argument("StatSeries: empty");
    if (dof < 1) throw std::invalid_argument("StatSeries: dof must be positive");
    if (n_runs < 1) throw std::invalid_argument("StatSeries: n_runs must be positive");
    for (double v : values)
        if (v < 0.0 || !std::isfinite(v))
            throw std::invalid_argument("StatSeries: values must be finite and non-negative");
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Consistent: return "consistent";
        case Verdict::Pessimistic: return "pessimistic";
        case Verdict::Optimistic: return "optimistic";
    }
    return "unknown";
}

namespace {

double quad_form_solve(const Eigen::VectorXd& e, const Eigen::MatrixXd& m, const char* who) {
    if (m.rows() != m.cols() || m.rows() != e.size())
        throw std::invalid_argument(std::string(who) + ": dimension mismatch");
    const Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error(std::string(who) + ": matrix is not positive definite");
    return e.dot(llt.solve(e));
}

double j_cost(const StatSeries& series) {
    series.validate();
    double mean = 0.0;
    for (double v : series.values) mean += v;
    mean /= static_cast<double>(series.values.size());
    if (mean == 0.0) return std::numeric_limits<double>::infinity();
    return std::abs(std::log(mean / static_cast<double>(series.dof)));
}

}  // namespace

double nees(const Eigen::VectorXd& err, const Eigen::MatrixXd& p) {
    return quad_form_solve(err, p, "nees");
}

double nis(const Eigen::VectorXd& innov, const Eigen::MatrixXd& s) {
    return quad_form_solve(innov, s, "nis");
}

StatSeries average_series(const Eigen::MatrixXd& per_run_per_step, int dof) {
    if (per_run_per_step.rows() < 1 || per_run_per_step.cols() < 1)
        throw std::invalid_argument("average_series: empty matrix");
    StatSeries out;
    out.dof = dof;
    out.n_runs = static_cast<int>(per_run_per_step.rows());
    out.values.resize(static_cast<size_t>(per_run_per_step.cols()));
    for (Eigen::Index k = 0; k < per_run_per_step.cols(); ++k)
        out.values[static_cast<size_t>(k)] = per_run_per_step.col(k).mean();
    return out;
}

ChiSquareBounds chi2_bounds(double alpha, int n_runs, int dof) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("chi2_bounds: alpha must be in (0,1)");
    if (n_runs < 1 || dof < 1)
        throw std::invalid_argument("chi2_bounds: n_runs and dof must be positive");
    const double m = static_cast<double>(n_runs) * dof;
    const double n = static_cast<double>(n_runs);
    return {chi2_quantile(alpha / 2.0, m) / n, chi2_quantile(1.0 - alpha / 2.0, m) / n, alpha};
}

ConsistencyReport consistency_test(const StatSeries& series, const ChiSquareBounds& bounds) {
    series.validate();
    ConsistencyReport rep;
    rep.dof = series.dof;
    rep.alpha = bounds.alpha;
    rep.n_runs = series.n_runs;
    rep.bounds = bounds;
    rep.stats = series.values;
    rep.flags.reserve(series.values.size());

    int below = 0, above = 0, inside = 0;
    for (double v : series.values) {
        if (v < bounds.lower) { rep.flags.push_back(-1); ++below; }
        else if (v > bounds.upper) { rep.flags.push_back(1); ++above; }
        else { rep.flags.push_back(0); ++inside; }
    }
    rep.pass_fraction = static_cast<double>(inside) / static_cast<double>(series.values.size());
    rep.cost = j_cost(series);

    // Consistent when the in-band fraction is within sampling slack of 1-alpha;
    // otherwise classify by the dominant violation direction.
    if (rep.pass_fraction >= 1.0 - 2.0 * bounds.alpha) {
        rep.verdict = Verdict::Consistent;
    } else {
        rep.verdict = below >= above ? Verdict::Pessimistic : Verdict::Optimistic;
    }
    return rep;
}

double j_nees(const StatSeries& series) { return j_cost(series); }
double j_nis(const StatSeries& series) { return j_cost(series); }

std::string ConsistencyReport::to_json() const {
    nlohmann::json j;
    j["dof"] = dof;
    j["alpha"] = alpha;
    j["n_runs"] = n_runs;
    j["bounds"] = {{"lower", bounds.lower}, {"upper", bounds.upper}};
    j["pass_fraction"] = pass_fraction;
    j["verdict"] = to_string(verdict);
    j["cost"] = cost;
    j["per_step"] = {{"stat", stats}, {"flag", flags}};
    return j.dump(2);
}

std::string ConsistencyReport::to_csv() const {
    std::ostringstream out;
    out << "k,stat,lower,upper,flag\n";
    out.precision(17);
    for (size_t k = 0; k < stats.size(); ++k) {
        const char* flag = flags[k] < 0 ? "below" : (flags[k] > 0 ? "above" : "in");
        out << k + 1 << ',' << stats[k] << ',' << bounds.lower << ',' << bounds.upper << ','
            << flag << '\n';
    }
    return out.str();
}

}  // namespace kftune
