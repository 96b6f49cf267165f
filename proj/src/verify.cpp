#include "tailstab/verify.hpp"

#include "tailstab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <variant>

namespace tailstab {

std::string_view to_string(TailCase c) {
    switch (c) {
        case TailCase::LinearOnly: return "linear_only";
        case TailCase::StochVolCaseI: return "stoch_vol_case_i";
        case TailCase::StochVolCaseII: return "stoch_vol_case_ii";
        case TailCase::StochVolCaseIII: return "stoch_vol_case_iii";
    }
    return "unknown";
}

std::pair<double, double> tail_balance_sums(const CoefficientSeq& coeffs, double nu, double p) {
    require(nu > 0.0, "nu must be > 0");
    require(p >= 0.0 && p <= 1.0, "balance p must lie in [0,1]");
    double a1 = 0.0;
    double a2 = 0.0;
    for (double a : coeffs.values) {
        const double pos = a > 0.0 ? std::pow(a, nu) : 0.0;
        const double neg = a < 0.0 ? std::pow(-a, nu) : 0.0;
        a1 += p * pos + (1.0 - p) * neg;
        a2 += p * neg + (1.0 - p) * pos;
    }
    return {a1, a2};
}

namespace {

SignedMoments volatility_moments(const VolatilityLaw& law, double order) {
    if (const auto* d = std::get_if<DiscreteLaw>(&law)) {
        SignedMoments m;
        for (std::size_t k = 0; k < d->values.size(); ++k) {
            const double v = d->values[k];
            if (v > 0.0) m.positive += d->probs[k] * std::pow(v, order);
            if (v < 0.0) m.negative += d->probs[k] * std::pow(-v, order);
        }
        return m;
    }
    return signed_moments(std::get<TailLaw>(law), order);
}

}  // namespace

TailConstants tail_constants(const ProcessSpec& spec, TailCase tail_case, std::size_t mc_reps, std::uint64_t seed,
                             unsigned threads) {
    const double nu = spec.innovation.index;
    const auto [a1, a2] = tail_balance_sums(spec.coeffs, nu, spec.innovation.balance);
    require(a1 + a2 > 0.0, "A1 + A2 must be > 0");
    TailConstants tc;
    tc.A1 = a1;
    tc.A2 = a2;
    tc.tail_case = tail_case;
    switch (tail_case) {
        case TailCase::LinearOnly:
            tc.constant = a1;
            tc.reference = "innovation";
            return tc;
        case TailCase::StochVolCaseI: {
            require(spec.volatility.has_value(), "Case I needs a volatility law");
            if (const auto* law = std::get_if<TailLaw>(&*spec.volatility)) {
                require(law->index > nu, "Case I needs E|S|^beta < inf for some beta > nu; volatility index " +
                                             std::to_string(law->index) + " <= nu");
            }
            const auto m = volatility_moments(*spec.volatility, nu);
            tc.constant = a1 * m.positive + a2 * m.negative;
            tc.reference = "innovation";
            return tc;
        }
        case TailCase::StochVolCaseII: {
            require(spec.volatility.has_value(), "Case II needs a volatility law");
            const auto* law = std::get_if<TailLaw>(&*spec.volatility);
            require(law != nullptr, "Case II needs a regularly varying volatility law");
            const double beta = law->index;
            require(beta < nu, "Case II needs volatility index beta < nu");
            require(mc_reps >= 2, "Case II needs >= 2 Monte Carlo draws");
            ProcessSpec linear = spec;
            linear.kind = ProcessKind::Linear;
            linear.volatility.reset();
            linear.transform.reset();
            const auto path = simulate_path(linear, mc_reps, seed, threads).values;
            const double q = law->balance;
            std::vector<double> terms(path.size());
            for (std::size_t t = 0; t < path.size(); ++t) {
                const double x = path[t];
                terms[t] = x > 0.0 ? q * std::pow(x, beta) : (1.0 - q) * std::pow(-x, beta);
            }
            const double n = static_cast<double>(terms.size());
            const double mean = std::accumulate(terms.begin(), terms.end(), 0.0) / n;
            double var = 0.0;
            for (double v : terms) var += (v - mean) * (v - mean);
            tc.constant = mean;
            tc.mc_se = std::sqrt(var / (n - 1.0) / n);
            tc.monte_carlo = true;
            tc.reference = "volatility";
            return tc;
        }
        case TailCase::StochVolCaseIII:
            fail(ErrorKind::Unsupported,
                 "Case III tail constants are not computed: regular variation of R may fail; use a Hill check");
    }
    fail(ErrorKind::InvalidArgument, "unknown tail case");
}

double frechet_maxlinear_cdf(std::span<const double> coeffs, double nu, double x) {
    require(x > 0.0, "Frechet max-linear CDF needs x > 0");
    require(nu > 0.0, "nu must be > 0");
    double s = 0.0;
    for (double a : coeffs) {
        require(a >= 0.0, "max-linear coefficients must be >= 0");
        s += std::pow(a, nu);
    }
    return std::exp(-std::pow(x, -nu) * s);
}

double frechet_maxlinear_cdf2(std::span<const double> coeffs, double nu, double x, double y, std::size_t k) {
    require(x > 0.0 && y > 0.0, "Frechet max-linear CDF needs positive arguments");
    require(nu > 0.0, "nu must be > 0");
    const auto m = static_cast<long long>(coeffs.size());
    const auto kk = static_cast<long long>(k);
    auto a = [&](long long j) { return (j >= 0 && j < m) ? coeffs[static_cast<std::size_t>(j)] : 0.0; };
    double s = 0.0;
    for (long long j = -kk; j < m; ++j) {
        const double v = std::max(a(j) / x, a(j + kk) / y);
        if (v > 0.0) s += std::pow(v, nu);
    }
    return std::exp(-s);
}

double frechet_maxlinear_upper_quantile(std::span<const double> coeffs, double nu, double u) {
    require(u > 0.0 && u < 1.0, "level must lie in (0,1)");
    double s = 0.0;
    for (double a : coeffs) s += std::pow(a, nu);
    // 1 - exp(-s x^{-nu}) = u
    return std::pow(-std::log1p(-u) / s, -1.0 / nu);
}

double frechet_theta_at(std::span<const double> coeffs, double nu, std::size_t lag, double z) {
    require(z > 0.0, "Frechet theta needs z > 0");
    const double ai = lag < coeffs.size() ? coeffs[lag] : 0.0;
    if (ai == 0.0) return 0.0;
    double total = 0.0;
    for (double a : coeffs) {
        require(a >= 0.0, "max-linear coefficients must be >= 0");
        total += std::pow(a, nu);
    }
    const double zn = std::pow(z, -nu);
    const double ain = std::pow(ai, nu);
    const double p_y = std::exp(-zn * (total - ain));
    const double p_star_low = std::exp(-zn * ain);
    const double p_high = -std::expm1(-zn * ain);
    const double p_x = -std::expm1(-zn * total);
    return p_y * p_star_low * p_high / p_x;
}

ExactTheta frechet_theta_exact(std::span<const double> coeffs, double nu, std::size_t lag,
                               std::span<const double> z_grid) {
    ExactTheta out;
    out.values.reserve(z_grid.size());
    for (double z : z_grid) {
        const double v = frechet_theta_at(coeffs, nu, lag, z);
        out.values.push_back(v);
        if (v > out.sup || out.values.size() == 1) {
            out.sup = v;
            out.z_sup = z;
        }
    }
    return out;
}

double stable_marginal_scale(std::span<const double> coeffs, double nu, std::optional<std::size_t> excluded) {
    require(nu > 0.0 && nu < 2.0, "stable index must lie in (0,2)");
    double s = 0.0;
    for (std::size_t j = 0; j < coeffs.size(); ++j) {
        if (excluded && *excluded == j) continue;
        s += std::pow(std::abs(coeffs[j]), nu);
    }
    require(s > 0.0, "all coefficients are zero after exclusion");
    return std::pow(s, 1.0 / nu);
}

HillEstimate hill_estimate(std::span<const double> sample, std::size_t k) {
    require(k >= 10, "Hill estimator needs k >= 10");
    if (sample.size() < k + 1) {
        fail(ErrorKind::InsufficientData, "Hill estimator needs > k = " + std::to_string(k) + " observations");
    }
    std::vector<double> top(sample.begin(), sample.end());
    std::nth_element(top.begin(), top.begin() + static_cast<std::ptrdiff_t>(k), top.end(), std::greater<>());
    const double threshold = top[k];
    if (!(threshold > 0.0)) {
        fail(ErrorKind::InsufficientData, "Hill estimator needs > k positive observations");
    }
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += std::log(top[j] / threshold);
    if (!(s > 0.0)) fail(ErrorKind::Numerical, "Hill log-sum is zero (ties at the threshold)");
    HillEstimate h;
    h.k = k;
    h.nu = static_cast<double>(k) / s;
    h.se = h.nu / std::sqrt(static_cast<double>(k));
    return h;
}

std::size_t default_hill_k(std::size_t n) { return std::max<std::size_t>(10, std::min<std::size_t>(n / 100, 10'000)); }

double truncated_moment_ratio(const TailLaw& law, double beta, double z) {
    const double tail = survival(law, z, Side::Abs);
    require(tail > 0.0, "P(|eps| > z) underflows at z");
    return truncated_moment(law, beta, z) / (std::pow(z, beta) * tail);
}

EnvelopeCheck density_envelope_check(const std::vector<std::vector<double>>& samples, double nu, double delta,
                                     std::size_t tail_bins, std::size_t min_samples) {
    require(!samples.empty(), "density envelope check needs at least one sample");
    require(nu > 0.0, "nu must be > 0");
    require(delta > 0.0 && delta < nu + 1.0, "delta must lie in (0, nu+1)");
    require(tail_bins >= 4, "need >= 4 tail bins");
    const double expo = -nu - 1.0 + delta;
    auto envelope = [&](double lo, double hi) {
        const double inner = (lo < 0.0 && hi > 0.0) ? 0.0 : std::min(std::abs(lo), std::abs(hi));
        return inner <= 1.0 ? 1.0 : std::pow(inner, expo);
    };
    constexpr std::size_t kCentreBins = 20;

    EnvelopeCheck out;
    std::vector<std::vector<double>> ratio_se;
    std::vector<std::vector<bool>> in_fit;
    for (const auto& s : samples) {
        if (s.size() < min_samples) {
            fail(ErrorKind::InsufficientData, "density envelope check needs >= " + std::to_string(min_samples) +
                                                  " samples per lag, got " + std::to_string(s.size()));
        }
        const double n = static_cast<double>(s.size());
        std::vector<double> mags(s.size());
        std::transform(s.begin(), s.end(), mags.begin(), [](double v) { return std::abs(v); });
        const std::size_t top = static_cast<std::size_t>(n) - 100;
        std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(top), mags.end());
        const double xmax = std::max(mags[top], 2.0);

        std::vector<double> edges;  // signed bin edges
        std::vector<double> pos{1.0};
        const double ratio = std::pow(xmax, 1.0 / static_cast<double>(tail_bins));
        for (std::size_t b = 1; b <= tail_bins; ++b) pos.push_back(pos.back() * ratio);
        for (auto it = pos.rbegin(); it != pos.rend(); ++it) edges.push_back(-*it);
        for (std::size_t b = 1; b < kCentreBins; ++b) {
            edges.push_back(-1.0 + 2.0 * static_cast<double>(b) / static_cast<double>(kCentreBins));
        }
        for (double v : pos) edges.push_back(v);

        std::vector<std::size_t> counts(edges.size() - 1, 0);
        for (double v : s) {
            if (v < edges.front() || v >= edges.back()) continue;
            const auto it = std::upper_bound(edges.begin(), edges.end(), v);
            ++counts[static_cast<std::size_t>(it - edges.begin()) - 1];
        }
        EnvelopeLag lag;
        std::vector<double> rse;
        std::vector<bool> fit;
        const double midpoint = std::sqrt(xmax);
        for (std::size_t b = 0; b < counts.size(); ++b) {
            EnvelopeBin bin;
            bin.lo = edges[b];
            bin.hi = edges[b + 1];
            const double width = bin.hi - bin.lo;
            bin.density = static_cast<double>(counts[b]) / (n * width);
            bin.se = std::sqrt(static_cast<double>(std::max<std::size_t>(counts[b], 1))) / (n * width);
            bin.envelope = envelope(bin.lo, bin.hi);
            const double r = bin.density / bin.envelope;
            lag.max_ratio = std::max(lag.max_ratio, r);
            rse.push_back(bin.se / bin.envelope);
            fit.push_back(std::min(std::abs(bin.lo), std::abs(bin.hi)) <= midpoint);
            lag.bins.push_back(bin);
        }
        out.lags.push_back(std::move(lag));
        ratio_se.push_back(std::move(rse));
        in_fit.push_back(std::move(fit));
    }
    for (std::size_t l = 0; l < out.lags.size(); ++l) {
        for (std::size_t b = 0; b < out.lags[l].bins.size(); ++b) {
            if (!in_fit[l][b]) continue;
            const auto& bin = out.lags[l].bins[b];
            out.c_hat = std::max(out.c_hat, bin.density / bin.envelope);
        }
    }
    out.worst_excess = -std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < out.lags.size(); ++l) {
        for (std::size_t b = 0; b < out.lags[l].bins.size(); ++b) {
            const auto& bin = out.lags[l].bins[b];
            const double excess = (bin.density / bin.envelope - out.c_hat) / ratio_se[l][b];
            out.worst_excess = std::max(out.worst_excess, excess);
        }
    }
    out.pass = out.c_hat > 0.0 && std::isfinite(out.c_hat) && out.worst_excess <= 3.0;
    return out;
}

double kolmogorov_survival(double x) {
    if (x <= 0.0) return 1.0;
    if (x < 1.18) {
        // Theta-function form, accurate for small x.
        const double pi = 3.14159265358979323846;
        const double w = -pi * pi / (8.0 * x * x);
        double s = 0.0;
        for (int k = 1; k <= 7; k += 2) s += std::exp(w * k * k);
        return 1.0 - std::sqrt(2.0 * pi) / x * s;
    }
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * x * x);
        s += (k % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-18) break;
    }
    return std::clamp(s, 0.0, 1.0);
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
    require(!a.empty() && !b.empty(), "KS test needs two non-empty samples");
    std::vector<double> x(a.begin(), a.end());
    std::vector<double> y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double n = static_cast<double>(x.size());
    const double m = static_cast<double>(y.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] == v) ++i;
        while (j < y.size() && y[j] == v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
    }
    KsResult r;
    r.statistic = d;
    const double en = std::sqrt(n * m / (n + m));
    r.p_value = kolmogorov_survival((en + 0.12 + 0.11 / en) * d);
    return r;
}

}  // namespace tailstab
