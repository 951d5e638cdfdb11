#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace kftune {

/// Monte-Carlo-averaged test statistic, one value per time step.
struct StatSeries {
    std::vector<double> values;
    int dof = 0;      // n_x for NEES, n_z for NIS
    int n_runs = 0;

    void validate() const;
};

struct ChiSquareBounds {
    double lower = 0.0;
    double upper = 0.0;
    double alpha = 0.0;
};

enum class Verdict { Consistent, Pessimistic, Optimistic };

std::string to_string(Verdict v);

struct ConsistencyReport {
    int dof = 0;
    double alpha = 0.0;
    int n_runs = 0;
    ChiSquareBounds bounds;
    std::vector<double> stats;   // the tested series
    std::vector<int> flags;      // -1 below the band, 0 inside, +1 above
    double pass_fraction = 0.0;
    Verdict verdict = Verdict::Consistent;
    double cost = 0.0;           // |log(time-averaged statistic / dof)|

    std::string to_json() const;
    std::string to_csv() const;  // columns: k,stat,lower,upper,flag
};

/// Normalized estimation error squared e^T P^{-1} e.
double nees(const Eigen::VectorXd& err, const Eigen::MatrixXd& p);

/// Normalized innovation squared e^T S^{-1} e.
double nis(const Eigen::VectorXd& innov, const Eigen::MatrixXd& s);

/// Column means of an n_runs x t_steps matrix of per-run statistics.
StatSeries average_series(const Eigen::MatrixXd& per_run_per_step, int dof);

/// Two-sided band for the mean of N iid chi-square(dof) variables:
/// [chi2inv(alpha/2, N*dof), chi2inv(1-alpha/2, N*dof)] / N.
ChiSquareBounds chi2_bounds(double alpha, int n_runs, int dof);

/// Per-step band test and the pessimistic/optimistic classification.
ConsistencyReport consistency_test(const StatSeries& series, const ChiSquareBounds& bounds);

/// |log(time-averaged statistic / dof)|; +infinity when the average is zero.
double j_nees(const StatSeries& series);
double j_nis(const StatSeries& series);

}  // namespace kftune
