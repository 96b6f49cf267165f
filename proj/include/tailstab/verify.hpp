#pragma once

#include "tailstab/processes.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tailstab {

// ---------------------------------------------------------------------------
// Tail constants
// ---------------------------------------------------------------------------

enum class TailCase { LinearOnly, StochVolCaseI, StochVolCaseII, StochVolCaseIII };
std::string_view to_string(TailCase c);

struct TailConstants {
    double A1 = 0.0;
    double A2 = 0.0;
    TailCase tail_case = TailCase::LinearOnly;
    /// lim P(R > x) / P(|eps| > x) (LinearOnly, Case I) or lim P(R > x) / P(|S| > x) (Case II).
    double constant = 0.0;
    bool monte_carlo = false;  // moments estimated by simulation
    double mc_se = 0.0;
    std::string reference;  // "innovation" or "volatility": the denominator's variable
};

/// A1 = sum p (a_j)_+^nu + (1-p)(a_j)_-^nu, A2 = sum p (a_j)_-^nu + (1-p)(a_j)_+^nu.
std::pair<double, double> tail_balance_sums(const CoefficientSeq& coeffs, double nu, double p);

/// Case II estimates E[X_+^beta], E[X_-^beta] from mc_reps draws of X_0.
/// Case III throws Unsupported.
TailConstants tail_constants(const ProcessSpec& spec, TailCase tail_case, std::size_t mc_reps = 200'000,
                             std::uint64_t seed = 0, unsigned threads = 1);

// ---------------------------------------------------------------------------
// Frechet max-linear oracles (unit-scale Frechet innovations)
// ---------------------------------------------------------------------------

/// P(X_0 <= x) = exp(-x^{-nu} sum_j a_j^nu).
double frechet_maxlinear_cdf(std::span<const double> coeffs, double nu, double x);
/// P(X_1 <= x, X_{1+k} <= y) = exp(-sum_m max(a_m / x, a_{m+k} / y)^nu).
double frechet_maxlinear_cdf2(std::span<const double> coeffs, double nu, double x, double y, std::size_t k);
/// Unit Frechet x with P(X_0 > x) = u.
double frechet_maxlinear_upper_quantile(std::span<const double> coeffs, double nu, double u);

struct ExactTheta {
    std::vector<double> values;  // theta(z) on the grid
    double sup = 0.0;
    double z_sup = 0.0;
};

/// P(X_i* <= z | X_i > z) = P(Y_i <= z) P(a_i eps* <= z) P(a_i eps > z) / P(X_0 > z).
double frechet_theta_at(std::span<const double> coeffs, double nu, std::size_t lag, double z);
ExactTheta frechet_theta_exact(std::span<const double> coeffs, double nu, std::size_t lag,
                               std::span<const double> z_grid);

// ---------------------------------------------------------------------------
// Stable sums, regular variation diagnostics
// ---------------------------------------------------------------------------

/// (sum_{j != i} |a_j|^nu)^{1/nu}.
double stable_marginal_scale(std::span<const double> coeffs, double nu,
                             std::optional<std::size_t> excluded = std::nullopt);

struct HillEstimate {
    double nu = 0.0;
    double se = 0.0;
    std::size_t k = 0;
};
/// nu_hat = k / sum_{j<=k} log(X_(j) / X_(k+1)) over descending order statistics.
HillEstimate hill_estimate(std::span<const double> sample, std::size_t k);
/// n/100 capped at 10^4, at least 10.
std::size_t default_hill_k(std::size_t n);

/// E[Z^beta; Z <= z] / (z^beta P(Z > z)); tends to nu / (beta - nu) for beta > nu.
double truncated_moment_ratio(const TailLaw& law, double beta, double z);

struct EnvelopeBin {
    double lo = 0.0;
    double hi = 0.0;
    double density = 0.0;
    double se = 0.0;
    double envelope = 0.0;  // max of min(1, |x|^{-nu-1+delta}) over the bin
};
struct EnvelopeLag {
    std::vector<EnvelopeBin> bins;
    double max_ratio = 0.0;
};
struct EnvelopeCheck {
    bool pass = false;
    double c_hat = 0.0;
    double worst_excess = 0.0;  // max over bins of (ratio - c_hat) / se_ratio
    std::vector<EnvelopeLag> lags;
};

/// Histogram check of f(x) <= c min(1, |x|^{-nu-1+delta}) with one c shared by all lags.
/// c is fitted on |x| up to the geometric midpoint of the tail range; every bin must
/// then satisfy ratio <= c + 3 SE.
EnvelopeCheck density_envelope_check(const std::vector<std::vector<double>>& samples, double nu, double delta,
                                     std::size_t tail_bins = 30, std::size_t min_samples = 100'000);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};
/// Two-sample Kolmogorov-Smirnov test with the asymptotic Kolmogorov distribution.
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);
/// P(K > x) for the Kolmogorov distribution.
double kolmogorov_survival(double x);

}  // namespace tailstab
