#include "tailstab/tailstats.hpp"

#include "tailstab/errors.hpp"
#include "tailstab/parallel.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace tailstab {

namespace {

std::vector<std::uint8_t> indicators(std::span<const double> path, double x) {
    std::vector<std::uint8_t> out(path.size());
    for (std::size_t i = 0; i < path.size(); ++i) out[i] = path[i] > x ? 1 : 0;
    return out;
}

double tau_from_counts(double exceed_start, double joint, double p) {
    if (exceed_start <= 0.0 || p >= 1.0) return 0.0;
    return (joint / exceed_start - p) / (1.0 - p);
}

}  // namespace

TailAutocorrelation sample_tail_autocorrelation(std::span<const double> path, double x_n, std::size_t k_max,
                                                const BootstrapPolicy& policy, unsigned threads) {
    const std::size_t n = path.size();
    require(n > k_max, "path length " + std::to_string(n) + " must exceed k_max " + std::to_string(k_max));
    require(policy.level > 0.0 && policy.level < 1.0, "bootstrap level must lie in (0,1)");
    require(policy.resamples >= 2, "bootstrap needs >= 2 resamples");
    const auto ind = indicators(path, x_n);
    const std::size_t total = std::count(ind.begin(), ind.end(), std::uint8_t{1});
    if (total < 30) {
        fail(ErrorKind::InsufficientData,
             "tail autocorrelation needs >= 30 exceedances of x_n, got " + std::to_string(total));
    }
    require(total < n, "every observation exceeds x_n");

    TailAutocorrelation out;
    out.threshold = x_n;
    out.n = n;
    out.n_exceed = total;
    out.p_exceed = static_cast<double>(total) / static_cast<double>(n);
    out.points.resize(k_max + 1);
    out.points[0] = TauPoint{0, 1.0, 0.0, 1.0, 1.0};
    std::vector<double> cond(k_max + 1, 0.0);  // P(X_{i+k} > x | X_i > x)
    for (std::size_t k = 1; k <= k_max; ++k) {
        std::size_t starts = 0;
        std::size_t joint = 0;
        for (std::size_t i = 0; i + k < n; ++i) {
            starts += ind[i];
            joint += ind[i] & ind[i + k];
        }
        out.points[k].k = k;
        cond[k] = starts > 0 ? static_cast<double>(joint) / static_cast<double>(starts) : 0.0;
        out.points[k].tau = tau_from_counts(static_cast<double>(starts), static_cast<double>(joint), out.p_exceed);
    }
    if (k_max == 0) return out;

    // Moving-block bootstrap over tuples (I_i, I_{i+1}, ..., I_{i+k_max}), i < n - k_max.
    const std::size_t m = n - k_max;
    const std::size_t block = policy.block_length > 0
                                  ? policy.block_length
                                  : static_cast<std::size_t>(std::ceil(std::cbrt(static_cast<double>(n))));
    require(block <= m, "bootstrap block length exceeds the usable path length");
    out.block_length = block;
    // prefix[c][i]: column c = 0 holds I_i, column k holds I_i I_{i+k}.
    std::vector<std::vector<std::uint32_t>> prefix(k_max + 1, std::vector<std::uint32_t>(m + 1, 0));
    for (std::size_t i = 0; i < m; ++i) {
        prefix[0][i + 1] = prefix[0][i] + ind[i];
        for (std::size_t k = 1; k <= k_max; ++k) prefix[k][i + 1] = prefix[k][i] + (ind[i] & ind[i + k]);
    }
    const std::size_t blocks = (m + block - 1) / block;
    const std::size_t starts_range = m - block + 1;
    std::vector<std::vector<double>> taus(policy.resamples, std::vector<double>(k_max, 0.0));
    std::vector<std::vector<double>> roots(policy.resamples, std::vector<double>(k_max, 0.0));
    parallel_for(policy.resamples, resolve_threads(threads), [&](std::size_t begin, std::size_t end) {
        std::vector<double> sums(k_max + 1);
        for (std::size_t b = begin; b < end; ++b) {
            rng::Stream stream(policy.seed, rng::Tag::Bootstrap, {b});
            std::fill(sums.begin(), sums.end(), 0.0);
            std::size_t length = 0;
            for (std::size_t j = 0; j < blocks; ++j) {
                const auto s = static_cast<std::size_t>(stream.uniform() * static_cast<double>(starts_range));
                const std::size_t take = std::min(block, m - length);
                for (std::size_t c = 0; c <= k_max; ++c) sums[c] += prefix[c][s + take] - prefix[c][s];
                length += take;
            }
            const double p = sums[0] / static_cast<double>(m);
            for (std::size_t k = 1; k <= k_max; ++k) {
                taus[b][k - 1] = tau_from_counts(sums[0], sums[k], p);
                roots[b][k - 1] = sums[0] > 0.0 ? std::sqrt(sums[k] / sums[0]) : 0.0;
            }
        }
    });

    const double tail_prob = (1.0 - policy.level) / (policy.simultaneous ? 2.0 * static_cast<double>(k_max) : 2.0);
    out.critical_value = boost::math::quantile(
        boost::math::complement(boost::math::normal_distribution<double>(), tail_prob));
    const double r = static_cast<double>(policy.resamples);
    auto sd = [&](const std::vector<std::vector<double>>& draws, std::size_t col) {
        double mean = 0.0;
        for (const auto& t : draws) mean += t[col];
        mean /= r;
        double var = 0.0;
        for (const auto& t : draws) var += (t[col] - mean) * (t[col] - mean);
        return std::sqrt(var / (r - 1.0));
    };
    // Normal interval on the square-root scale of the conditional proportion
    // (joint counts are small and Poisson-like), mapped back to tau.
    const double p = out.p_exceed;
    for (std::size_t k = 1; k <= k_max; ++k) {
        auto& pt = out.points[k];
        pt.se = sd(taus, k - 1);
        const double root = std::sqrt(cond[k]);
        const double half = out.critical_value * sd(roots, k - 1);
        const double lo = std::max(root - half, 0.0);
        const double hi = root + half;
        pt.ci_lo = (lo * lo - p) / (1.0 - p);
        pt.ci_hi = (hi * hi - p) / (1.0 - p);
    }
    return out;
}

std::size_t default_rho_horizon(std::size_t n) {
    return static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(n), 0.25)));
}

std::vector<double> indicator_correlations(std::span<const double> path, double x_n, std::size_t horizon) {
    const std::size_t n = path.size();
    require(n > horizon, "path shorter than the correlation horizon");
    const auto ind = indicators(path, x_n);
    const double p = static_cast<double>(std::count(ind.begin(), ind.end(), std::uint8_t{1})) / static_cast<double>(n);
    const double var = p * (1.0 - p);
    std::vector<double> rho(horizon, 0.0);
    if (var <= 0.0) return rho;
    for (std::size_t k = 1; k <= horizon; ++k) {
        std::size_t joint = 0;
        for (std::size_t i = 0; i + k < n; ++i) joint += ind[i] & ind[i + k];
        const double cov = static_cast<double>(joint) / static_cast<double>(n - k) - p * p;
        rho[k - 1] = cov / var;
    }
    return rho;
}

TailEmpirical tail_empirical_clt(std::span<const double> path, double x_n, std::optional<double> reference) {
    const std::size_t n = path.size();
    require(n >= 2, "tail empirical statistic needs n >= 2");
    TailEmpirical out;
    out.threshold = x_n;
    out.n = n;
    out.n_exceed = static_cast<std::size_t>(std::count_if(path.begin(), path.end(), [x_n](double v) { return v > x_n; }));
    if (out.n_exceed == 0 || out.n_exceed == n) {
        fail(ErrorKind::InsufficientData, "tail empirical statistic: " + std::to_string(out.n_exceed) + " of " +
                                              std::to_string(n) + " observations exceed x_n");
    }
    out.t_hat = static_cast<double>(out.n_exceed) / static_cast<double>(n);
    if (reference) {
        require(*reference >= 0.0 && *reference <= 1.0, "reference T must lie in [0,1]");
        out.reference = reference;
        out.clt_stat = std::sqrt(static_cast<double>(n) / (out.t_hat * (1.0 - out.t_hat))) * (out.t_hat - *reference);
    }
    const std::size_t horizon = std::min(default_rho_horizon(n), n - 1);
    out.rho_hat = indicator_correlations(path, x_n, horizon);
    out.long_run_variance = 1.0;
    for (double r : out.rho_hat) out.long_run_variance += 2.0 * r;
    return out;
}

double psi_n(const TailLaw& law, std::size_t n, double alpha) {
    require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0,1)");
    require(n >= 1, "n must be >= 1");
    const double beta = upper_quantile(law, alpha);
    return std::sqrt(static_cast<double>(n) * alpha) * density(law, beta) / alpha;
}

}  // namespace tailstab
