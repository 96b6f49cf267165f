// Symmetric alpha-stable law with characteristic function exp(-|t|^alpha).
//
// Distribution function and density use the integral representation of
// Nolan (1997) with beta = 0 for moderate |x| and the convergent (alpha < 1)
// or asymptotic (alpha > 1) power series in x^-alpha for large |x|.

#include "tailstab/heavy_tails.hpp"

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <limits>

namespace tailstab::stable {

namespace {

constexpr double kPi = boost::math::constants::pi<double>();
constexpr double kSeriesSwitch = 30.0;  // use the series once x^alpha exceeds this
constexpr int kSeriesTerms = 40;

double log_v(double alpha, double theta) {
    const double e = alpha / (alpha - 1.0);
    return e * (std::log(std::cos(theta)) - std::log(std::sin(alpha * theta))) +
           std::log(std::cos((alpha - 1.0) * theta)) - std::log(std::cos(theta));
}

template <class F>
double integrate_half_pi(F f) {
    using boost::math::quadrature::gauss_kronrod;
    double error = 0.0;
    return gauss_kronrod<double, 31>::integrate(f, 0.0, kPi / 2, 20, 1e-13, &error);
}

// Sum of the series sum_k c_k(alpha) x^{-k alpha}; stops when terms stop shrinking.
template <class Coef>
double tail_series(double alpha, double x, Coef coef) {
    const double xa = std::pow(x, -alpha);
    double power = 1.0;
    double sum = 0.0;
    double last = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= kSeriesTerms; ++k) {
        power *= xa;
        const double term = coef(k) * power;
        const double magnitude = std::abs(term);
        if (magnitude != 0.0 && magnitude > last && alpha > 1.0) break;
        sum += term;
        if (magnitude != 0.0) last = magnitude;
        if (magnitude != 0.0 && magnitude < 1e-18 * std::abs(sum)) break;
    }
    return sum;
}

double upper_tail_positive(double alpha, double x) {
    if (x == 0.0) return 0.5;
    if (alpha == 1.0) return std::atan2(1.0, x) / kPi;
    if (std::pow(x, alpha) >= kSeriesSwitch) {
        return tail_series(alpha, x, [alpha](int k) {
                   const double sign = (k % 2 == 1) ? 1.0 : -1.0;
                   return sign * std::exp(std::lgamma(k * alpha) - std::lgamma(k + 1.0)) *
                          std::sin(k * kPi * alpha / 2.0);
               }) /
               kPi;
    }
    const double scaled = std::pow(x, alpha / (alpha - 1.0));
    if (alpha > 1.0) {
        return integrate_half_pi([&](double t) { return std::exp(-scaled * std::exp(log_v(alpha, t))); }) / kPi;
    }
    return integrate_half_pi([&](double t) { return -std::expm1(-scaled * std::exp(log_v(alpha, t))); }) / kPi;
}

double density_positive(double alpha, double x) {
    if (alpha == 1.0) return 1.0 / (kPi * (1.0 + x * x));
    if (x == 0.0) return std::tgamma(1.0 + 1.0 / alpha) / kPi;
    if (std::pow(x, alpha) >= kSeriesSwitch) {
        return tail_series(alpha, x, [alpha](int k) {
                   const double sign = (k % 2 == 1) ? 1.0 : -1.0;
                   return sign * std::exp(std::lgamma(k * alpha + 1.0) - std::lgamma(k + 1.0)) *
                          std::sin(k * kPi * alpha / 2.0);
               }) /
               (kPi * x);
    }
    const double scaled = std::pow(x, alpha / (alpha - 1.0));
    const double integral = integrate_half_pi([&](double t) {
        const double v = std::exp(log_v(alpha, t));
        return v * std::exp(-scaled * v);
    });
    return alpha * std::pow(x, 1.0 / (alpha - 1.0)) * integral / (kPi * std::abs(alpha - 1.0));
}

}  // namespace

double upper_tail(double alpha, double x) {
    if (x >= 0.0) return upper_tail_positive(alpha, x);
    return 1.0 - upper_tail_positive(alpha, -x);
}

double cdf(double alpha, double x) {
    if (x <= 0.0) return upper_tail_positive(alpha, -x);
    return 1.0 - upper_tail_positive(alpha, x);
}

double density(double alpha, double x) { return density_positive(alpha, std::abs(x)); }

double sample(double alpha, double u1, double u2) {
    const double v = kPi * (u1 - 0.5);
    if (alpha == 1.0) return std::tan(v);
    const double w = -std::log(u2);
    return std::sin(alpha * v) / std::pow(std::cos(v), 1.0 / alpha) *
           std::pow(std::cos((1.0 - alpha) * v) / w, (1.0 - alpha) / alpha);
}

}  // namespace tailstab::stable
