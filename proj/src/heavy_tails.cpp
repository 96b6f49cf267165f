#include "tailstab/heavy_tails.hpp"

#include "tailstab/errors.hpp"
#include "tailstab/parallel.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/expint.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace tailstab {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

// Pareto survival of the magnitude, support [s, inf).
double pareto_upper(double nu, double s, double x) { return x <= s ? 1.0 : std::pow(x / s, -nu); }

// Upper incomplete gamma Gamma(a, x) for any real a, x > 0.
// Uses Gamma(a, x) = (Gamma(a + 1, x) - x^a e^-x) / a to move a into (0, inf)
// and E1 for the a = 0 case.
double upper_incomplete_gamma(double a, double x) {
    if (a > 0.0) return boost::math::tgamma(a, x);
    if (a == 0.0) return boost::math::expint(1, x);
    return (upper_incomplete_gamma(a + 1.0, x) - std::pow(x, a) * std::exp(-x)) / a;
}

double student_scale_moment(double nu, double beta) {
    // E|T|^beta for Student-t with nu degrees of freedom, beta < nu.
    return std::pow(nu, beta / 2.0) *
           std::exp(std::lgamma((beta + 1.0) / 2.0) + std::lgamma((nu - beta) / 2.0) -
                    std::lgamma(nu / 2.0)) /
           std::sqrt(std::numbers::pi);
}

double stable_abs_moment(double alpha, double p) {
    // E|X|^p for the symmetric stable law with characteristic function exp(-|t|^alpha).
    return std::pow(2.0, p) *
           std::exp(std::lgamma((1.0 + p) / 2.0) + std::lgamma(1.0 - p / alpha) - std::lgamma(1.0 - p / 2.0)) /
           std::sqrt(std::numbers::pi);
}

// Standardized (location 0, unit scale) tail functions.
double std_upper(const TailLaw& law, double x) {
    const double nu = law.index;
    switch (law.family) {
        case Family::Pareto:
            return pareto_upper(nu, 1.0, x);
        case Family::TwoSidedPareto:
            if (x >= 0.0) return law.balance * pareto_upper(nu, 1.0, x);
            return 1.0 - (1.0 - law.balance) * pareto_upper(nu, 1.0, -x);
        case Family::Frechet:
            if (x <= 0.0) return 1.0;
            return -std::expm1(-std::pow(x, -nu));
        case Family::StudentT:
            return boost::math::cdf(boost::math::complement(boost::math::students_t_distribution<double>(nu), x));
        case Family::SymmetricStable:
            return stable::upper_tail(nu, x);
    }
    return 0.0;
}

double std_lower(const TailLaw& law, double x) {
    const double nu = law.index;
    switch (law.family) {
        case Family::Pareto:
            return x <= 1.0 ? 0.0 : -std::expm1(-nu * std::log(x));
        case Family::TwoSidedPareto:
            if (x < 0.0) return (1.0 - law.balance) * pareto_upper(nu, 1.0, -x);
            return 1.0 - law.balance * pareto_upper(nu, 1.0, x);
        case Family::Frechet:
            if (x <= 0.0) return 0.0;
            return std::exp(-std::pow(x, -nu));
        case Family::StudentT:
            return boost::math::cdf(boost::math::students_t_distribution<double>(nu), x);
        case Family::SymmetricStable:
            return stable::cdf(nu, x);
    }
    return 0.0;
}

double std_density(const TailLaw& law, double x) {
    const double nu = law.index;
    switch (law.family) {
        case Family::Pareto:
            return x < 1.0 ? 0.0 : nu * std::pow(x, -nu - 1.0);
        case Family::TwoSidedPareto: {
            const double ax = std::abs(x);
            if (ax < 1.0) return 0.0;
            return (x > 0.0 ? law.balance : 1.0 - law.balance) * nu * std::pow(ax, -nu - 1.0);
        }
        case Family::Frechet:
            if (x <= 0.0) return 0.0;
            return nu * std::pow(x, -nu - 1.0) * std::exp(-std::pow(x, -nu));
        case Family::StudentT:
            return boost::math::pdf(boost::math::students_t_distribution<double>(nu), x);
        case Family::SymmetricStable:
            return stable::density(nu, x);
    }
    return 0.0;
}

// Standardized inverse of the right survival, u in (0, 1).
double std_upper_quantile(const TailLaw& law, double u) {
    const double nu = law.index;
    switch (law.family) {
        case Family::Pareto:
            return std::pow(u, -1.0 / nu);
        case Family::TwoSidedPareto: {
            const double p = law.balance;
            if (u <= p) return std::pow(u / p, -1.0 / nu);
            // Left part: P(eps > x) = u with x <= -1, i.e. (1-p) (-x)^-nu = 1 - u.
            return -std::pow((1.0 - u) / (1.0 - p), -1.0 / nu);
        }
        case Family::Frechet:
            // 1 - exp(-x^-nu) = u  =>  x^-nu = -log1p(-u)
            return std::pow(-std::log1p(-u), -1.0 / nu);
        case Family::StudentT:
            return boost::math::quantile(
                boost::math::complement(boost::math::students_t_distribution<double>(nu), u));
        case Family::SymmetricStable: {
            if (u == 0.5) return 0.0;
            if (u > 0.5) return -std_upper_quantile(law, 1.0 - u);
            const double c = std::tgamma(nu) * std::sin(std::numbers::pi * nu / 2.0) / std::numbers::pi;
            double hi = std::max(1.0, std::pow(c / u, 1.0 / nu));
            while (stable::upper_tail(nu, hi) > u) hi *= 2.0;
            double lo = 0.0;
            auto f = [&](double x) { return std::log(stable::upper_tail(nu, x)) - std::log(u); };
            boost::math::tools::eps_tolerance<double> tol(50);
            std::uintmax_t iterations = 200;
            const auto bracket = boost::math::tools::toms748_solve(f, lo, hi, tol, iterations);
            return 0.5 * (bracket.first + bracket.second);
        }
    }
    return 0.0;
}

double std_quantile(const TailLaw& law, double u) {
    const double nu = law.index;
    switch (law.family) {
        case Family::Pareto:
            return std::pow(1.0 - u, -1.0 / nu);
        case Family::TwoSidedPareto: {
            const double p = law.balance;
            if (u <= 1.0 - p) {
                if (p == 1.0) return 1.0;
                return -std::pow(u / (1.0 - p), -1.0 / nu);
            }
            return std::pow((1.0 - u) / p, -1.0 / nu);
        }
        case Family::Frechet:
            return std::pow(-std::log(u), -1.0 / nu);
        case Family::StudentT:
            return boost::math::quantile(boost::math::students_t_distribution<double>(nu), u);
        case Family::SymmetricStable:
            return std_upper_quantile(law, 1.0 - u);
    }
    return 0.0;
}

}  // namespace

std::string_view to_string(Family family) {
    switch (family) {
        case Family::Pareto: return "pareto";
        case Family::TwoSidedPareto: return "two_sided_pareto";
        case Family::Frechet: return "frechet";
        case Family::StudentT: return "student_t";
        case Family::SymmetricStable: return "symmetric_stable";
    }
    return "unknown";
}

Family family_from_string(std::string_view name) {
    if (name == "pareto") return Family::Pareto;
    if (name == "two_sided_pareto") return Family::TwoSidedPareto;
    if (name == "frechet") return Family::Frechet;
    if (name == "student_t") return Family::StudentT;
    if (name == "symmetric_stable") return Family::SymmetricStable;
    fail(ErrorKind::InvalidArgument, "unknown law family '" + std::string(name) + "'");
}

TailLaw make_law(Family family, double nu, double p, double scale, double location) {
    require(std::isfinite(nu) && nu > 0.0, "tail index nu must be > 0, got " + fmt(nu));
    require(std::isfinite(scale) && scale > 0.0, "scale must be > 0, got " + fmt(scale));
    require(std::isfinite(location), "location must be finite");
    require(p >= 0.0 && p <= 1.0, "tail balance p must lie in [0,1], got " + fmt(p));
    switch (family) {
        case Family::Pareto:
        case Family::Frechet:
            require(p == 1.0, std::string(to_string(family)) + " is one-sided: balance p must be 1, got " + fmt(p));
            break;
        case Family::SymmetricStable:
            require(nu < 2.0, "symmetric stable index must lie in (0,2), got " + fmt(nu));
            [[fallthrough]];
        case Family::StudentT:
            require(p == 0.5, std::string(to_string(family)) + " is symmetric: balance p must be 0.5, got " + fmt(p));
            break;
        case Family::TwoSidedPareto:
            break;
    }
    return TailLaw{family, nu, p, scale, location};
}

double survival(const TailLaw& law, double x, Side side) {
    const double t = (x - law.location) / law.scale;
    switch (side) {
        case Side::Right:
            return std_upper(law, t);
        case Side::Left:
            // P(eps < -x); every family is continuous, so < and <= agree.
            return std_lower(law, (-x - law.location) / law.scale);
        case Side::Abs:
            if (x < 0.0) return 1.0;
            return std_upper(law, t) + std_lower(law, (-x - law.location) / law.scale);
    }
    return 0.0;
}

double cdf(const TailLaw& law, double x) { return std_lower(law, (x - law.location) / law.scale); }

double density(const TailLaw& law, double x) {
    return std_density(law, (x - law.location) / law.scale) / law.scale;
}

double quantile(const TailLaw& law, double u) {
    require(u > 0.0 && u < 1.0, "quantile level must lie in (0,1), got " + fmt(u));
    return law.location + law.scale * std_quantile(law, u);
}

double upper_quantile(const TailLaw& law, double u) {
    require(u > 0.0 && u < 1.0, "survival level must lie in (0,1), got " + fmt(u));
    return law.location + law.scale * std_upper_quantile(law, u);
}

double tail_constant(const TailLaw& law) {
    const double nu = law.index;
    const double s = std::pow(law.scale, nu);
    switch (law.family) {
        case Family::Pareto:
        case Family::TwoSidedPareto:
        case Family::Frechet:
            return s;
        case Family::StudentT:
            return s * 2.0 * std::exp(std::lgamma((nu + 1.0) / 2.0) - std::lgamma(nu / 2.0)) *
                   std::pow(nu, nu / 2.0 - 1.0) / std::sqrt(std::numbers::pi);
        case Family::SymmetricStable:
            return s * 2.0 * std::tgamma(nu) * std::sin(std::numbers::pi * nu / 2.0) / std::numbers::pi;
    }
    return 0.0;
}

double draw(const TailLaw& law, rng::Stream& stream) {
    const double nu = law.index;
    double z = 0.0;
    switch (law.family) {
        case Family::Pareto:
            z = std::pow(stream.uniform(), -1.0 / nu);
            break;
        case Family::TwoSidedPareto: {
            const double magnitude = std::pow(stream.uniform(), -1.0 / nu);
            z = stream.uniform() < law.balance ? magnitude : -magnitude;
            break;
        }
        case Family::Frechet:
            z = std::pow(-std::log(stream.uniform()), -1.0 / nu);
            break;
        case Family::StudentT: {
            std::normal_distribution<double> normal(0.0, 1.0);
            std::chi_squared_distribution<double> chi2(nu);
            const double numerator = normal(stream);
            z = numerator / std::sqrt(chi2(stream) / nu);
            break;
        }
        case Family::SymmetricStable: {
            const double u1 = stream.uniform();
            const double u2 = stream.uniform();
            z = stable::sample(nu, u1, u2);
            break;
        }
    }
    return law.location + law.scale * z;
}

std::vector<double> sample_iid(const TailLaw& law, std::size_t n, std::uint64_t seed,
                               std::uint64_t stream_id, unsigned threads) {
    require(n >= 1, "sample size must be >= 1");
    std::vector<double> out(n);
    parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) {
            rng::Stream stream(seed, rng::Tag::IidSample, {stream_id, k});
            out[k] = draw(law, stream);
        }
    });
    return out;
}

double truncated_moment(const TailLaw& law, double beta, double z) {
    require(z > 0.0, "truncation point z must be > 0, got " + fmt(z));
    require(beta >= 0.0, "moment order beta must be >= 0, got " + fmt(beta));
    require(law.location == 0.0, "truncated moments are defined for location 0 only");
    const double nu = law.index;
    const double s = law.scale;
    switch (law.family) {
        case Family::Pareto:
        case Family::TwoSidedPareto: {
            if (z <= s) return 0.0;
            // integral_s^z x^beta nu s^nu x^{-nu-1} dx
            if (beta == nu) return nu * std::pow(s, nu) * std::log(z / s);
            return nu * std::pow(s, nu) * (std::pow(z, beta - nu) - std::pow(s, beta - nu)) / (beta - nu);
        }
        case Family::Frechet: {
            // Substituting t = (x/s)^-nu gives s^beta Gamma(1 - beta/nu, (z/s)^-nu).
            return std::pow(s, beta) * upper_incomplete_gamma(1.0 - beta / nu, std::pow(z / s, -nu));
        }
        case Family::StudentT:
        case Family::SymmetricStable:
            break;
    }
    fail(ErrorKind::Unsupported,
         "truncated_moment has closed forms for pareto, two_sided_pareto and frechet only, got " +
             std::string(to_string(law.family)));
}

double absolute_moment(const TailLaw& law, double beta) {
    require(beta >= 0.0, "moment order beta must be >= 0, got " + fmt(beta));
    require(beta < law.index, "E|eps|^beta is infinite for beta >= nu (beta=" + fmt(beta) +
                                  ", nu=" + fmt(law.index) + ")");
    require(law.location == 0.0, "moments are defined for location 0 only");
    const double nu = law.index;
    const double sb = std::pow(law.scale, beta);
    switch (law.family) {
        case Family::Pareto:
        case Family::TwoSidedPareto:
            return sb * nu / (nu - beta);
        case Family::Frechet:
            return sb * std::tgamma(1.0 - beta / nu);
        case Family::StudentT:
            return sb * student_scale_moment(nu, beta);
        case Family::SymmetricStable:
            return sb * stable_abs_moment(nu, beta);
    }
    return 0.0;
}

SignedMoments signed_moments(const TailLaw& law, double beta) {
    const double m = absolute_moment(law, beta);
    switch (law.family) {
        case Family::Pareto:
        case Family::Frechet:
            return {m, 0.0};
        case Family::TwoSidedPareto:
            return {law.balance * m, (1.0 - law.balance) * m};
        case Family::StudentT:
        case Family::SymmetricStable:
            return {0.5 * m, 0.5 * m};
    }
    return {};
}

}  // namespace tailstab
