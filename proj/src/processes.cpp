#include "tailstab/processes.hpp"

#include "tailstab/errors.hpp"
#include "tailstab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace tailstab {

namespace {

constexpr std::uint64_t kPathDomain = 0;
constexpr std::uint64_t kCoupledDomain = 1;

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

double innovation_at(const ProcessSpec& spec, std::uint64_t seed, std::uint64_t domain, std::uint64_t rep,
                     long long t) {
    rng::Stream stream(seed, rng::Tag::Innovation, {domain, rep, rng::time_id(t)});
    return draw(spec.innovation, stream);
}

double volatility_at(const ProcessSpec& spec, std::uint64_t seed, std::uint64_t domain, std::uint64_t rep,
                     long long t) {
    rng::Stream stream(seed, rng::Tag::Volatility, {domain, rep, rng::time_id(t)});
    return draw(*spec.volatility, stream);
}

void check_lags(const ProcessSpec& spec, std::span<const std::size_t> lags, std::size_t reps) {
    require(!lags.empty(), "at least one lag is required");
    require(reps >= 1, "reps must be >= 1");
    const std::size_t m = spec.coeffs.truncation();
    for (std::size_t lag : lags) {
        require(lag <= m, "lag " + std::to_string(lag) + " exceeds the truncation M=" + std::to_string(m) +
                              "; the coupled pair would be degenerate by truncation");
    }
}

CoupledDraws empty_draws(std::span<const std::size_t> lags, std::size_t reps, std::uint64_t seed) {
    CoupledDraws out;
    out.lags.assign(lags.begin(), lags.end());
    out.reps = reps;
    out.seed = seed;
    out.x.assign(lags.size(), std::vector<double>(reps));
    out.x_star.assign(lags.size(), std::vector<double>(reps));
    out.eps0.resize(reps);
    out.eps0_star.resize(reps);
    return out;
}

// Fills the innovation window eps_{-M}..eps_{L} for replication r, returns eps0*.
double fill_window(const ProcessSpec& spec, std::uint64_t seed, std::size_t r, std::size_t max_lag,
                   std::vector<double>& window) {
    const auto m = static_cast<long long>(spec.coeffs.truncation());
    window.resize(static_cast<std::size_t>(m) + max_lag + 1);
    for (std::size_t k = 0; k < window.size(); ++k) {
        window[k] = innovation_at(spec, seed, kCoupledDomain, r, static_cast<long long>(k) - m);
    }
    rng::Stream star(seed, rng::Tag::CoupledInnovation, {kCoupledDomain, r});
    return draw(spec.innovation, star);
}

enum class Combine { Sum, Max };

template <Combine C>
CoupledDraws coupled_filter(const ProcessSpec& spec, std::span<const std::size_t> lags, std::size_t reps,
                            std::uint64_t seed, unsigned threads) {
    check_lags(spec, lags, reps);
    CoupledDraws out = empty_draws(lags, reps, seed);
    const std::size_t max_lag = *std::max_element(lags.begin(), lags.end());
    const std::size_t m = spec.coeffs.truncation();
    const auto& a = spec.coeffs.values;
    const bool stoch_vol = spec.kind == ProcessKind::StochVol;

    parallel_for(reps, resolve_threads(threads), [&](std::size_t begin, std::size_t end) {
        std::vector<double> window;
        for (std::size_t r = begin; r < end; ++r) {
            const double eps0_star = fill_window(spec, seed, r, max_lag, window);
            const double eps0 = window[m];
            out.eps0[r] = eps0;
            out.eps0_star[r] = eps0_star;
            double s0 = 1.0;
            double s0_star = 1.0;
            if (stoch_vol) {
                s0 = volatility_at(spec, seed, kCoupledDomain, r, 0);
                rng::Stream star(seed, rng::Tag::CoupledVolatility, {kCoupledDomain, r});
                s0_star = draw(*spec.volatility, star);
            }
            for (std::size_t li = 0; li < lags.size(); ++li) {
                const std::size_t i = lags[li];
                // Y_i = combination over j != i of a_j eps_{i-j}; window index of eps_t is t + M.
                double y = C == Combine::Sum ? 0.0 : -std::numeric_limits<double>::infinity();
                for (std::size_t j = 0; j <= m; ++j) {
                    if (j == i) continue;
                    const double term = a[j] * window[i + m - j];
                    if constexpr (C == Combine::Sum) {
                        y += term;
                    } else {
                        y = std::max(y, term);
                    }
                }
                double x = 0.0;
                double xs = 0.0;
                if constexpr (C == Combine::Sum) {
                    x = y + a[i] * eps0;
                    xs = y + a[i] * eps0_star;
                } else {
                    x = std::max(y, a[i] * eps0);
                    xs = std::max(y, a[i] * eps0_star);
                }
                if (stoch_vol) {
                    if (i == 0) {
                        // e_0 = (S_0, eps_0): both members of the time-0 element are replaced.
                        x *= s0;
                        xs *= s0_star;
                    } else {
                        const double si = volatility_at(spec, seed, kCoupledDomain, r, static_cast<long long>(i));
                        x *= si;
                        xs *= si;
                    }
                }
                out.x[li][r] = x;
                out.x_star[li][r] = xs;
            }
        }
    });
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Coefficients
// ---------------------------------------------------------------------------

double CoefficientSeq::tail_bound(double exponent) const {
    require(exponent > 0.0, "tail exponent must be > 0");
    const double m = static_cast<double>(truncation());
    return std::visit(
        [&](const auto& fam) -> double {
            using T = std::decay_t<decltype(fam)>;
            if constexpr (std::is_same_v<T, PowerDecay>) {
                const double s = fam.zeta * exponent;
                if (s <= 1.0) return std::numeric_limits<double>::infinity();
                return std::pow(std::abs(fam.c), exponent) * std::pow(m + 0.5, 1.0 - s) / (s - 1.0);
            } else if constexpr (std::is_same_v<T, Geometric>) {
                const double rk = std::pow(std::abs(fam.r), exponent);
                return std::pow(std::abs(fam.c), exponent) * std::pow(rk, m + 1.0) / (1.0 - rk);
            } else {
                double sum = 0.0;
                for (std::size_t j = values.size(); j < fam.values.size(); ++j) {
                    sum += std::pow(std::abs(fam.values[j]), exponent);
                }
                return sum;
            }
        },
        family);
}

double CoefficientSeq::partial_power_sum(double exponent) const {
    double sum = 0.0;
    for (double v : values) {
        if (v != 0.0) sum += std::pow(std::abs(v), exponent);
    }
    return sum;
}

CoefficientSeq make_coefficients(const CoefficientFamily& family, double kappa, double trunc_tol,
                                 std::size_t max_truncation) {
    require(kappa > 0.0 && kappa <= 1.0, "summability exponent kappa must lie in (0,1], got " + fmt(kappa));
    CoefficientSeq seq;
    seq.family = family;
    seq.kappa = kappa;
    seq.trunc_tol = trunc_tol;

    if (const auto* pd = std::get_if<PowerDecay>(&family)) {
        require(pd->zeta > 0.0, "power decay exponent zeta must be > 0, got " + fmt(pd->zeta));
        require(pd->c != 0.0 && std::isfinite(pd->c), "power decay constant c must be finite and nonzero");
        require(trunc_tol > 0.0, "trunc_tol must be > 0 for infinite sequences");
        const double s = pd->zeta * kappa;
        require(s > 1.0, "sum_j j^(-zeta*kappa) diverges for zeta*kappa = " + fmt(s) +
                             " <= 1; no finite truncation meets the budget");
        const double ck = std::pow(std::abs(pd->c), kappa);
        auto bound = [&](double m) { return ck * std::pow(m + 0.5, 1.0 - s) / (s - 1.0); };
        // (M + 1/2)^{1-s} < tol (s-1)/c^kappa
        const double root = std::pow(trunc_tol * (s - 1.0) / ck, 1.0 / (1.0 - s)) - 0.5;
        require(std::isfinite(root) && root < static_cast<double>(max_truncation),
                "truncation needed for trunc_tol=" + fmt(trunc_tol) + " exceeds " + std::to_string(max_truncation));
        std::size_t m = root <= 0.0 ? 0 : static_cast<std::size_t>(std::floor(root));
        while (m > 0 && bound(static_cast<double>(m - 1)) < trunc_tol) --m;
        while (!(bound(static_cast<double>(m)) < trunc_tol)) ++m;
        seq.values.resize(m + 1);
        seq.values[0] = pd->c;
        for (std::size_t j = 1; j <= m; ++j) seq.values[j] = pd->c * std::pow(static_cast<double>(j), -pd->zeta);
        return seq;
    }
    if (const auto* g = std::get_if<Geometric>(&family)) {
        require(std::abs(g->r) < 1.0 && g->r != 0.0, "geometric ratio must satisfy 0 < |r| < 1, got " + fmt(g->r));
        require(g->c != 0.0 && std::isfinite(g->c), "geometric constant c must be finite and nonzero");
        require(trunc_tol > 0.0, "trunc_tol must be > 0 for infinite sequences");
        const double rk = std::pow(std::abs(g->r), kappa);
        const double ck = std::pow(std::abs(g->c), kappa);
        std::size_t m = 0;
        while (!(ck * std::pow(rk, static_cast<double>(m) + 1.0) / (1.0 - rk) < trunc_tol)) {
            ++m;
            require(m <= max_truncation, "geometric truncation exceeds " + std::to_string(max_truncation));
        }
        seq.values.resize(m + 1);
        for (std::size_t j = 0; j <= m; ++j) seq.values[j] = g->c * std::pow(g->r, static_cast<double>(j));
        return seq;
    }
    const auto& ex = std::get<Explicit>(family);
    require(!ex.values.empty(), "explicit coefficient sequence is empty");
    require(std::all_of(ex.values.begin(), ex.values.end(), [](double v) { return std::isfinite(v); }),
            "explicit coefficients must be finite");
    require(std::any_of(ex.values.begin(), ex.values.end(), [](double v) { return v != 0.0; }),
            "at least one coefficient must be nonzero");
    seq.values = ex.values;
    return seq;
}

// ---------------------------------------------------------------------------
// Volatility laws and transforms
// ---------------------------------------------------------------------------

DiscreteLaw make_discrete_law(std::vector<double> values, std::vector<double> probs) {
    require(!values.empty() && values.size() == probs.size(), "discrete law needs matching non-empty values/probs");
    double total = 0.0;
    for (double p : probs) {
        require(p >= 0.0 && std::isfinite(p), "discrete probabilities must be >= 0");
        total += p;
    }
    require(std::abs(total - 1.0) < 1e-12, "discrete probabilities must sum to 1, got " + fmt(total));
    for (double v : values) require(std::isfinite(v), "discrete values must be finite");
    return DiscreteLaw{std::move(values), std::move(probs)};
}

double draw(const DiscreteLaw& law, rng::Stream& stream) {
    const double u = stream.uniform();
    double cumulative = 0.0;
    for (std::size_t k = 0; k + 1 < law.values.size(); ++k) {
        cumulative += law.probs[k];
        if (u < cumulative) return law.values[k];
    }
    return law.values.back();
}

double draw(const VolatilityLaw& law, rng::Stream& stream) {
    return std::visit([&](const auto& l) { return draw(l, stream); }, law);
}

AffineTransform make_affine(double slope, double shift) {
    require(slope > 0.0 && std::isfinite(slope), "affine transform needs a positive slope, got " + fmt(slope));
    require(std::isfinite(shift), "affine shift must be finite");
    return AffineTransform{slope, shift};
}

TableTransform make_table(std::vector<double> x, std::vector<double> y) {
    require(x.size() >= 2 && x.size() == y.size(), "transform table needs >= 2 matching knots");
    for (std::size_t k = 1; k < x.size(); ++k) {
        require(x[k] > x[k - 1], "transform table knots must be strictly increasing in x");
        require(y[k] >= y[k - 1], "transform table is not non-decreasing at knot " + std::to_string(k));
    }
    return TableTransform{std::move(x), std::move(y)};
}

void validate(const MonotoneTransform& transform) {
    if (const auto* a = std::get_if<AffineTransform>(&transform)) make_affine(a->slope, a->shift);
    if (const auto* t = std::get_if<TableTransform>(&transform)) make_table(t->x, t->y);
}

double apply(const MonotoneTransform& transform, double x) {
    return std::visit(
        [x](const auto& k) -> double {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, FloorTransform>) {
                return std::floor(x);
            } else if constexpr (std::is_same_v<T, AffineTransform>) {
                return k.slope * x + k.shift;
            } else {
                if (x <= k.x.front()) return k.y.front();
                if (x >= k.x.back()) return k.y.back();
                const auto it = std::upper_bound(k.x.begin(), k.x.end(), x);
                const std::size_t hi = static_cast<std::size_t>(it - k.x.begin());
                const std::size_t lo = hi - 1;
                const double w = (x - k.x[lo]) / (k.x[hi] - k.x[lo]);
                return k.y[lo] + w * (k.y[hi] - k.y[lo]);
            }
        },
        transform);
}

double matched_threshold(const MonotoneTransform& transform, double z) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return std::visit(
        [z](const auto& k) -> double {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, FloorTransform>) {
                return std::floor(z) + 1.0;
            } else if constexpr (std::is_same_v<T, AffineTransform>) {
                return (z - k.shift) / k.slope;
            } else {
                if (z >= k.y.back()) return inf;
                if (z < k.y.front()) return -inf;
                // last knot with y <= z; the segment after it crosses z
                std::size_t lo = 0;
                for (std::size_t i = 0; i < k.y.size(); ++i) {
                    if (k.y[i] <= z) lo = i;
                }
                const std::size_t hi = lo + 1;
                const double w = (z - k.y[lo]) / (k.y[hi] - k.y[lo]);
                return k.x[lo] + w * (k.x[hi] - k.x[lo]);
            }
        },
        transform);
}

// ---------------------------------------------------------------------------
// Processes
// ---------------------------------------------------------------------------

std::string_view to_string(ProcessKind kind) {
    switch (kind) {
        case ProcessKind::Linear: return "linear";
        case ProcessKind::StochVol: return "stoch_vol";
        case ProcessKind::MaxLinear: return "max_linear";
    }
    return "unknown";
}

void validate(const ProcessSpec& spec) {
    require(!spec.coeffs.values.empty(), "process has no coefficients");
    require(spec.volatility.has_value() == (spec.kind == ProcessKind::StochVol),
            "a volatility law is required for stoch_vol processes and forbidden otherwise");
    if (spec.kind == ProcessKind::MaxLinear) {
        require(spec.innovation.one_sided(), "max-linear processes need a one-sided (non-negative) innovation law");
        for (std::size_t j = 0; j < spec.coeffs.values.size(); ++j) {
            require(spec.coeffs.values[j] >= 0.0,
                    "max-linear coefficient a_" + std::to_string(j) + " is negative");
        }
    }
    if (spec.transform) validate(*spec.transform);
}

SimulatedPath simulate_path(const ProcessSpec& spec, std::size_t n, std::uint64_t seed, unsigned threads) {
    validate(spec);
    require(n >= 1, "path length must be >= 1");
    threads = resolve_threads(threads);
    const std::size_t m = spec.coeffs.truncation();
    const auto& a = spec.coeffs.values;
    SimulatedPath path;
    path.innovations.resize(m + n);
    parallel_for(m + n, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) {
            path.innovations[k] =
                innovation_at(spec, seed, kPathDomain, 0, static_cast<long long>(k) - static_cast<long long>(m));
        }
    });
    path.values.assign(n, 0.0);
    const bool is_max = spec.kind == ProcessKind::MaxLinear;
    if (is_max) std::fill(path.values.begin(), path.values.end(), -std::numeric_limits<double>::infinity());
    // X_t = combine_j a_j eps_{t-j}; eps_t sits at index t + M. Summation order is j ascending for every t.
    parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
        double* out = path.values.data();
        const double* e = path.innovations.data();
        for (std::size_t j = 0; j <= m; ++j) {
            const double aj = a[j];
            if (is_max) {
                for (std::size_t t = begin; t < end; ++t) out[t] = std::max(out[t], aj * e[t + m - j]);
            } else {
                for (std::size_t t = begin; t < end; ++t) out[t] += aj * e[t + m - j];
            }
        }
    });
    if (spec.kind == ProcessKind::StochVol) {
        path.volatilities.resize(n);
        parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t t = begin; t < end; ++t) {
                path.volatilities[t] = volatility_at(spec, seed, kPathDomain, 0, static_cast<long long>(t));
                path.values[t] *= path.volatilities[t];
            }
        });
    }
    if (spec.transform) {
        for (double& v : path.values) v = apply(*spec.transform, v);
    }
    return path;
}

std::vector<double> simulate_linear(const ProcessSpec& spec, std::size_t n, std::uint64_t seed, unsigned threads) {
    require(spec.kind == ProcessKind::Linear, "simulate_linear needs a linear process");
    return simulate_path(spec, n, seed, threads).values;
}

CoupledDraws simulate_coupled_pairs(const ProcessSpec& spec, std::span<const std::size_t> lags, std::size_t reps,
                                    std::uint64_t seed, unsigned threads) {
    validate(spec);
    require(spec.kind == ProcessKind::Linear, "simulate_coupled_pairs needs a linear process");
    return coupled_filter<Combine::Sum>(spec, lags, reps, seed, threads);
}

CoupledDraws simulate_stoch_vol_coupled(const ProcessSpec& spec, std::span<const std::size_t> lags,
                                        std::size_t reps, std::uint64_t seed, unsigned threads) {
    validate(spec);
    require(spec.kind == ProcessKind::StochVol, "simulate_stoch_vol_coupled needs a stoch_vol process");
    return coupled_filter<Combine::Sum>(spec, lags, reps, seed, threads);
}

CoupledDraws simulate_max_linear_coupled(const ProcessSpec& spec, std::span<const std::size_t> lags,
                                         std::size_t reps, std::uint64_t seed, unsigned threads) {
    validate(spec);
    require(spec.kind == ProcessKind::MaxLinear, "simulate_max_linear_coupled needs a max_linear process");
    return coupled_filter<Combine::Max>(spec, lags, reps, seed, threads);
}

CoupledDraws simulate_coupled(const ProcessSpec& spec, std::span<const std::size_t> lags, std::size_t reps,
                              std::uint64_t seed, unsigned threads) {
    CoupledDraws draws;
    switch (spec.kind) {
        case ProcessKind::Linear: draws = simulate_coupled_pairs(spec, lags, reps, seed, threads); break;
        case ProcessKind::StochVol: draws = simulate_stoch_vol_coupled(spec, lags, reps, seed, threads); break;
        case ProcessKind::MaxLinear: draws = simulate_max_linear_coupled(spec, lags, reps, seed, threads); break;
    }
    if (spec.transform) return apply_monotone(draws, *spec.transform);
    return draws;
}

std::vector<double> apply_monotone(std::span<const double> path, const MonotoneTransform& transform) {
    validate(transform);
    std::vector<double> out(path.size());
    std::transform(path.begin(), path.end(), out.begin(), [&](double v) { return apply(transform, v); });
    return out;
}

CoupledDraws apply_monotone(const CoupledDraws& draws, const MonotoneTransform& transform) {
    validate(transform);
    CoupledDraws out = draws;
    for (std::size_t li = 0; li < out.lags.size(); ++li) {
        for (std::size_t r = 0; r < out.reps; ++r) {
            out.x[li][r] = apply(transform, draws.x[li][r]);
            out.x_star[li][r] = apply(transform, draws.x_star[li][r]);
        }
    }
    return out;
}

}  // namespace tailstab
