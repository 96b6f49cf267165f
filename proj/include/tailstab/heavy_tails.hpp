#pragma once

#include "tailstab/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tailstab {

/// Families of balanced regularly varying laws. Each has an asymptotically
/// constant slowly varying part, so x^nu * P(|eps| > x) has a finite limit.
enum class Family { Pareto, TwoSidedPareto, Frechet, StudentT, SymmetricStable };

std::string_view to_string(Family family);
Family family_from_string(std::string_view name);

enum class Side { Right, Left, Abs };

/// Validated, immutable law description. Construct through make_law().
struct TailLaw {
    Family family = Family::Pareto;
    double index = 1.0;    // tail exponent nu
    double balance = 1.0;  // right-tail fraction p
    double scale = 1.0;
    double location = 0.0;

    bool one_sided() const noexcept {
        return family == Family::Pareto || family == Family::Frechet;
    }
    bool operator==(const TailLaw&) const = default;
};

/// Throws Error(InvalidArgument) when the family invariants are violated:
/// nu <= 0, scale <= 0, p outside [0,1], p != 1 for one-sided families,
/// stable index outside (0,2) or p != 1/2 for symmetric families.
TailLaw make_law(Family family, double nu, double p = 1.0, double scale = 1.0, double location = 0.0);

/// P(eps > x), P(eps < -x) or P(|eps| > x).
double survival(const TailLaw& law, double x, Side side = Side::Right);
double cdf(const TailLaw& law, double x);
double density(const TailLaw& law, double x);

/// Inverse CDF: smallest x with F(x) >= u, for u in (0,1).
double quantile(const TailLaw& law, double u);
/// Inverse right survival: x with P(eps > x) = u, for u in (0,1).
/// Accurate for u near zero where quantile(1-u) would lose digits.
double upper_quantile(const TailLaw& law, double u);

/// lim x^nu P(|eps| > x).
double tail_constant(const TailLaw& law);

/// Map of one stream onto a draw. Pareto uses the inverse survival of one
/// uniform, Frechet the inverse CDF, two-sided Pareto adds a sign that is
/// positive with probability p, Student-t is a normal over a scaled
/// chi-square root and the symmetric stable law uses Chambers-Mallows-Stuck.
double draw(const TailLaw& law, rng::Stream& stream);

/// n i.i.d. draws; draw k uses its own substream (seed, IidSample, stream_id, k),
/// so output is identical for any worker count.
std::vector<double> sample_iid(const TailLaw& law, std::size_t n, std::uint64_t seed,
                               std::uint64_t stream_id, unsigned threads = 1);

/// E[Z^beta; Z <= z] for Z = |eps|. Closed forms exist for the Pareto and
/// Frechet families only; other families throw Unsupported.
double truncated_moment(const TailLaw& law, double beta, double z);

/// E[|eps|^beta]; throws InvalidArgument when beta >= nu (moment infinite).
double absolute_moment(const TailLaw& law, double beta);

/// E[(eps)_+^beta] and E[(eps)_-^beta].
struct SignedMoments {
    double positive = 0.0;
    double negative = 0.0;
};
SignedMoments signed_moments(const TailLaw& law, double beta);

namespace stable {
// Symmetric stable law with characteristic function exp(-|t|^alpha), unit scale.
double cdf(double alpha, double x);
double upper_tail(double alpha, double x);  // P(X > x)
double density(double alpha, double x);
double sample(double alpha, double u1, double u2);
}  // namespace stable

}  // namespace tailstab
