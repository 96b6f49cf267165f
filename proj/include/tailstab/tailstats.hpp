#pragma once

#include "tailstab/heavy_tails.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace tailstab {

// ---------------------------------------------------------------------------
// Tail autocorrelation
// ---------------------------------------------------------------------------

struct BootstrapPolicy {
    std::size_t resamples = 500;
    std::size_t block_length = 0;  // 0: ceil(n^{1/3})
    double level = 0.95;
    bool simultaneous = true;  // Bonferroni over lags 1..k_max
    std::uint64_t seed = 0;
};

struct TauPoint {
    std::size_t k = 0;
    double tau = 0.0;
    double se = 0.0;  // bootstrap SE; 0 at k = 0
    double ci_lo = 0.0;
    double ci_hi = 0.0;
};

struct TailAutocorrelation {
    double threshold = 0.0;
    std::size_t n = 0;
    std::size_t n_exceed = 0;
    double p_exceed = 0.0;
    std::size_t block_length = 0;
    double critical_value = 0.0;  // normal quantile used for the intervals
    std::vector<TauPoint> points;  // k = 0..k_max
};

/// tau(k) = (P(X_{i+k} > x | X_i > x) - P(X > x)) / (1 - P(X > x)) from overlapping pairs,
/// with moving-block bootstrap normal intervals built on the square-root scale of
/// P(X_{i+k} > x | X_i > x). Needs n > k_max and >= 30 exceedances.
TailAutocorrelation sample_tail_autocorrelation(std::span<const double> path, double x_n, std::size_t k_max,
                                                const BootstrapPolicy& policy = {}, unsigned threads = 1);

// ---------------------------------------------------------------------------
// Tail empirical distribution
// ---------------------------------------------------------------------------

struct TailEmpirical {
    double threshold = 0.0;
    std::size_t n = 0;
    std::size_t n_exceed = 0;
    double t_hat = 0.0;
    std::optional<double> reference;  // population T (simulation) or user reference
    std::optional<double> clt_stat;
    std::vector<double> rho_hat;  // indicator correlations at lags 1..horizon
    double long_run_variance = 1.0;  // 1 + 2 sum rho_hat
};

/// Indicator autocorrelations cor(1{X_0 > x}, 1{X_k > x}) for k = 1..horizon.
std::vector<double> indicator_correlations(std::span<const double> path, double x_n, std::size_t horizon);
/// ceil(n^{1/4}).
std::size_t default_rho_horizon(std::size_t n);

/// T_hat = n^{-1} #{X_i > x_n}; with a reference T also the statistic
/// sqrt(n / (T_hat (1 - T_hat))) (T_hat - T). Throws when no or all observations exceed.
TailEmpirical tail_empirical_clt(std::span<const double> path, double x_n,
                                 std::optional<double> reference = std::nullopt);

// ---------------------------------------------------------------------------
// High quantile regression
// ---------------------------------------------------------------------------

/// phi_{1-alpha}(u) = (1-alpha) u^+ + alpha (-u)^+.
double check_loss(double u, double alpha);
double check_objective(std::span<const double> responses, const Eigen::MatrixXd* design,
                       const Eigen::VectorXd& beta, double alpha);

struct QuantileFit {
    Eigen::VectorXd beta;
    double objective = 0.0;
    std::size_t iterations = 0;
    std::size_t order_index = 0;  // 1-based order statistic index for the intercept-only fit
};

/// Minimizes sum phi_{1-alpha}(U_i - W_i' eta). Without a design the answer is the
/// order statistic at ceil(n(1-alpha)). With a design an exact vertex descent is used;
/// among minimizers the one with the smallest mean(W)'beta is returned, so an all-ones
/// column reproduces the intercept-only answer.
QuantileFit high_quantile_fit(std::span<const double> responses, const Eigen::MatrixXd* design, double alpha);

/// psi_n = sqrt(n alpha) f(beta_n) / alpha with beta_n the upper alpha-quantile of the law.
double psi_n(const TailLaw& law, std::size_t n, double alpha);

}  // namespace tailstab
