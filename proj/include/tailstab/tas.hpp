#pragma once

#include "tailstab/processes.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace tailstab {

struct GridPolicy {
    std::size_t size = 50;
    std::size_t min_exceed = 200;
    double alpha = 0.01;  // one-sided level of the simultaneous upper bound
};

struct ZPoint {
    double z = 0.0;
    std::size_t n_exceed = 0;  // #{x > z}
    std::size_t n_hit = 0;     // #{x > z, x* <= z}
    double p_hat = 0.0;
    double se = 0.0;     // binomial sqrt(p(1-p)/n)
    double upper = 0.0;  // Wilson upper bound at level alpha / grid size
};

struct LagTheta {
    std::size_t lag = 0;
    double theta_hat = 0.0;
    double upper_conf = 0.0;
    double se = 0.0;      // binomial SE at the maximizing grid point
    double se_sup = 0.0;  // (upper_conf - theta_hat) / z_{alpha/G}: Wilson half-width in SE units
    double z_argmax = 0.0;
    std::size_t n_exceed_at_y = 0;
    bool degenerate = false;  // every pair had x == x*
    std::vector<ZPoint> per_z;
};

struct ThetaEstimate {
    double y = 0.0;
    GridPolicy policy;
    std::vector<LagTheta> rows;

    std::vector<std::size_t> lags() const;
    std::vector<double> theta_hat() const;
};

/// Grid of thresholds for one lag: y followed by order statistics of the
/// exceedances at levels 1 - (m/N)^{k/(G-1)}, deduplicated, each with at
/// least min_exceed exceedances.
std::vector<double> theta_grid(std::span<const double> x, double y, const GridPolicy& policy);

/// P(X* <= z | X > z) on an explicit grid.
std::vector<ZPoint> conditional_exceedance(std::span<const double> x, std::span<const double> x_star,
                                           std::span<const double> grid, double z_quantile);

/// Estimates theta_y(i) = sup_{z >= y} P(X_i* <= z | X_i > z) for every lag in the draws.
/// Throws InsufficientData naming the lag when #{x > y} < min_exceed.
ThetaEstimate estimate_theta_curve(const CoupledDraws& draws, double y, const GridPolicy& policy = {},
                                   unsigned threads = 1);

/// Wilson score upper bound for a binomial proportion at normal quantile zq.
double wilson_upper(std::size_t hits, std::size_t n, double zq);

struct DecayFit {
    double c_hat = 0.0;
    double eta_hat = 0.0;
    double r_squared = 0.0;
    std::size_t lag_lo = 0;
    std::size_t lag_hi = 0;
    std::vector<std::size_t> used_lags;
    std::vector<std::size_t> excluded_lags;
    double target = 1.0;
    double tolerance = 0.2;
    bool pass = false;
};

/// OLS of log theta_hat(i) on log|a_i|; lags with zero theta_hat or a_i are excluded.
/// Needs at least 4 usable lags.
DecayFit fit_decay_exponent(std::span<const std::size_t> lags, std::span<const double> theta,
                            const CoefficientSeq& coeffs, double target = 1.0, double tolerance = 0.2);
DecayFit fit_decay_exponent(const ThetaEstimate& est, const CoefficientSeq& coeffs, double target = 1.0,
                            double tolerance = 0.2);

struct ThetaSum {
    double value = 0.0;
    std::size_t max_lag = 0;
    /// Bound on sum_{i > max_lag} (c_hat |a_i|^eta_hat)^{1/q}; absent without a fit.
    std::optional<double> remainder_bound;
};

/// Sum_i theta(i)^{1/q} over lags 0..max_lag (must be contiguous from 0).
ThetaSum aggregate_theta_sum(std::span<const std::size_t> lags, std::span<const double> theta, double q,
                             const DecayFit* fit = nullptr, const CoefficientSeq* coeffs = nullptr);
ThetaSum aggregate_theta_sum(const ThetaEstimate& est, double q, const DecayFit* fit = nullptr,
                             const CoefficientSeq* coeffs = nullptr);

enum class InnovationClass { General, SymmetricStable };

/// Exponent vartheta(nu, q, eps) such that sum_i |a_i|^vartheta < inf certifies TAS_q.
double sufficiency_exponent(double nu, double q, double eps, InnovationClass cls = InnovationClass::General);

}  // namespace tailstab
