#pragma once

#include "tailstab/heavy_tails.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace tailstab {

// ---------------------------------------------------------------------------
// Coefficient sequences
// ---------------------------------------------------------------------------

/// a_0 = c, a_j = c j^-zeta for j >= 1.
struct PowerDecay {
    double zeta = 2.0;
    double c = 1.0;
    bool operator==(const PowerDecay&) const = default;
};
/// a_j = c r^j.
struct Geometric {
    double r = 0.5;
    double c = 1.0;
    bool operator==(const Geometric&) const = default;
};
/// Finite explicit sequence; zero beyond its last entry.
struct Explicit {
    std::vector<double> values;
    bool operator==(const Explicit&) const = default;
};
using CoefficientFamily = std::variant<PowerDecay, Geometric, Explicit>;

/// Truncated coefficients a_0..a_M of a (possibly infinite) filter together
/// with the declared budget for the neglected tail sum_{j>M} |a_j|^kappa.
struct CoefficientSeq {
    std::vector<double> values;
    CoefficientFamily family;
    double kappa = 1.0;
    double trunc_tol = 0.0;

    std::size_t truncation() const noexcept { return values.size() - 1; }
    double at(std::size_t j) const noexcept { return j < values.size() ? values[j] : 0.0; }

    /// Analytic upper bound on sum_{j>M} |a_j|^exponent; +inf when it diverges.
    double tail_bound(double exponent) const;
    /// sum_{j<=M} |a_j|^exponent.
    double partial_power_sum(double exponent) const;
};

/// Chooses the smallest M whose analytic tail bound is below trunc_tol.
/// Power decay uses the midpoint bound sum_{j>M} j^-s <= (M+1/2)^{1-s}/(s-1)
/// (valid for convex j^-s); geometric tails are summed exactly.
/// Throws when zeta*kappa <= 1 (divergent tail), kappa outside (0,1] or when
/// the budget needs more than max_truncation terms.
CoefficientSeq make_coefficients(const CoefficientFamily& family, double kappa, double trunc_tol,
                                 std::size_t max_truncation = 10'000'000);

// ---------------------------------------------------------------------------
// Volatility and monotone transforms
// ---------------------------------------------------------------------------

/// Finite discrete law, e.g. a bounded volatility taking a few values.
struct DiscreteLaw {
    std::vector<double> values;
    std::vector<double> probs;
    bool operator==(const DiscreteLaw&) const = default;
};
DiscreteLaw make_discrete_law(std::vector<double> values, std::vector<double> probs);
double draw(const DiscreteLaw& law, rng::Stream& stream);

using VolatilityLaw = std::variant<TailLaw, DiscreteLaw>;
double draw(const VolatilityLaw& law, rng::Stream& stream);

struct FloorTransform {
    bool operator==(const FloorTransform&) const = default;
};
struct AffineTransform {
    double slope = 1.0;
    double shift = 0.0;
    bool operator==(const AffineTransform&) const = default;
};
/// Piecewise-linear interpolation through (x_k, y_k), constant outside the knots.
struct TableTransform {
    std::vector<double> x;
    std::vector<double> y;
    bool operator==(const TableTransform&) const = default;
};
using MonotoneTransform = std::variant<FloorTransform, AffineTransform, TableTransform>;

AffineTransform make_affine(double slope, double shift);
TableTransform make_table(std::vector<double> x, std::vector<double> y);
void validate(const MonotoneTransform& transform);

double apply(const MonotoneTransform& transform, double x);
/// b(z) = sup{x : K(x) <= z}; maps a threshold on the transformed scale back
/// to the original scale so that {K(X) > z} = {X > b(z)} up to null sets.
double matched_threshold(const MonotoneTransform& transform, double z);

// ---------------------------------------------------------------------------
// Process specification and simulation
// ---------------------------------------------------------------------------

enum class ProcessKind { Linear, StochVol, MaxLinear };
std::string_view to_string(ProcessKind kind);

/// A process is Transformed when `transform` is set; the base kind is kept in `kind`.
struct ProcessSpec {
    ProcessKind kind = ProcessKind::Linear;
    TailLaw innovation;
    CoefficientSeq coeffs;
    std::optional<VolatilityLaw> volatility;
    std::optional<MonotoneTransform> transform;
};

/// Throws when volatility is present iff kind != StochVol, or a max-linear
/// process has negative coefficients or a two-sided innovation law.
void validate(const ProcessSpec& spec);

struct SimulatedPath {
    std::vector<double> values;        // X_0..X_{n-1} (after transform, if any)
    std::vector<double> innovations;   // eps_{-M}..eps_{n-1}
    std::vector<double> volatilities;  // S_0..S_{n-1}; empty unless StochVol
};

/// Stationary path of length n built from an innovation window of length M+n
/// (no warm-up needed: the truncated model is a finite filter).
SimulatedPath simulate_path(const ProcessSpec& spec, std::size_t n, std::uint64_t seed, unsigned threads = 1);

/// Linear-only convenience wrapper returning just the values.
std::vector<double> simulate_linear(const ProcessSpec& spec, std::size_t n, std::uint64_t seed,
                                    unsigned threads = 1);

/// Paired realizations (X_i, X_i*) that share every innovation except the time-0 element.
struct CoupledDraws {
    std::vector<std::size_t> lags;
    std::size_t reps = 0;
    std::uint64_t seed = 0;
    std::vector<std::vector<double>> x;       // [lag index][replication]
    std::vector<std::vector<double>> x_star;  // [lag index][replication]
    std::vector<double> eps0;                 // time-0 innovation per replication
    std::vector<double> eps0_star;            // its independent copy
};

CoupledDraws simulate_coupled_pairs(const ProcessSpec& spec, std::span<const std::size_t> lags,
                                    std::size_t reps, std::uint64_t seed, unsigned threads = 1);
CoupledDraws simulate_stoch_vol_coupled(const ProcessSpec& spec, std::span<const std::size_t> lags,
                                        std::size_t reps, std::uint64_t seed, unsigned threads = 1);
CoupledDraws simulate_max_linear_coupled(const ProcessSpec& spec, std::span<const std::size_t> lags,
                                         std::size_t reps, std::uint64_t seed, unsigned threads = 1);
/// Dispatches on spec.kind and applies spec.transform to both members of each pair.
CoupledDraws simulate_coupled(const ProcessSpec& spec, std::span<const std::size_t> lags, std::size_t reps,
                              std::uint64_t seed, unsigned threads = 1);

std::vector<double> apply_monotone(std::span<const double> path, const MonotoneTransform& transform);
CoupledDraws apply_monotone(const CoupledDraws& draws, const MonotoneTransform& transform);

}  // namespace tailstab
