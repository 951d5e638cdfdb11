#include "kftune/student_t.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <stdexcept>

namespace kftune {

double student_t_pdf(double z, double v) {
    if (!(v > 0.0)) throw std::invalid_argument("student_t_pdf: dof must be positive");
    if (!std::isfinite(z)) return 0.0;
    return boost::math::pdf(boost::math::students_t_distribution<double>(v), z);
}

double student_t_cdf(double z, double v) {
    if (!(v > 0.0)) throw std::invalid_argument("student_t_cdf: dof must be positive");
    if (std::isnan(z)) throw std::invalid_argument("student_t_cdf: z is NaN");
    if (z == -std::numeric_limits<double>::infinity()) return 0.0;
    if (z == std::numeric_limits<double>::infinity()) return 1.0;
    return boost::math::cdf(boost::math::students_t_distribution<double>(v), z);
}

double chi2_quantile(double p, double dof) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("chi2_quantile: p must be in (0,1)");
    if (!(dof > 0.0)) throw std::invalid_argument("chi2_quantile: dof must be positive");
    return boost::math::quantile(boost::math::chi_squared_distribution<double>(dof), p);
}

}  // namespace kftune
