#include "tailstab/tas.hpp"

#include "tailstab/errors.hpp"
#include "tailstab/parallel.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace tailstab {

namespace {

double normal_upper_quantile(double level) {
    return boost::math::quantile(boost::math::complement(boost::math::normal_distribution<double>(), level));
}

}  // namespace

std::vector<std::size_t> ThetaEstimate::lags() const {
    std::vector<std::size_t> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.lag);
    return out;
}

std::vector<double> ThetaEstimate::theta_hat() const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.theta_hat);
    return out;
}

double wilson_upper(std::size_t hits, std::size_t n, double zq) {
    require(n > 0, "Wilson bound needs n > 0");
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(hits) / nn;
    const double z2 = zq * zq;
    const double centre = p + z2 / (2.0 * nn);
    const double half = zq * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
    return std::min(1.0, (centre + half) / (1.0 + z2 / nn));
}

std::vector<double> theta_grid(std::span<const double> x, double y, const GridPolicy& policy) {
    require(policy.size >= 1, "grid size must be >= 1");
    require(policy.min_exceed >= 1, "min_exceed must be >= 1");
    std::vector<double> exceed;
    for (double v : x) {
        if (v > y) exceed.push_back(v);
    }
    const std::size_t n = exceed.size();
    if (n < policy.min_exceed) return {};
    std::sort(exceed.begin(), exceed.end());

    auto count_above = [&](double z) {
        return static_cast<std::size_t>(exceed.end() - std::upper_bound(exceed.begin(), exceed.end(), z));
    };

    std::vector<double> grid{y};
    const double ratio = static_cast<double>(policy.min_exceed) / static_cast<double>(n);
    for (std::size_t k = 1; k < policy.size; ++k) {
        const double frac = std::pow(ratio, static_cast<double>(k) / static_cast<double>(policy.size - 1));
        const auto target = static_cast<std::size_t>(std::llround(frac * static_cast<double>(n)));
        if (target >= n) continue;
        const double z = exceed[n - 1 - target];
        if (count_above(z) >= policy.min_exceed) grid.push_back(z);
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

std::vector<ZPoint> conditional_exceedance(std::span<const double> x, std::span<const double> x_star,
                                           std::span<const double> grid, double z_quantile) {
    require(x.size() == x_star.size(), "x and x_star differ in length");
    std::vector<ZPoint> out;
    if (grid.empty()) return out;
    const double lowest = *std::min_element(grid.begin(), grid.end());
    std::vector<std::pair<double, double>> pairs;
    for (std::size_t r = 0; r < x.size(); ++r) {
        if (x[r] > lowest) pairs.emplace_back(x[r], x_star[r]);
    }
    out.reserve(grid.size());
    for (double z : grid) {
        ZPoint pt;
        pt.z = z;
        for (const auto& [a, b] : pairs) {
            if (a > z) {
                ++pt.n_exceed;
                if (b <= z) ++pt.n_hit;
            }
        }
        if (pt.n_exceed > 0) {
            const double n = static_cast<double>(pt.n_exceed);
            pt.p_hat = static_cast<double>(pt.n_hit) / n;
            pt.se = std::sqrt(pt.p_hat * (1.0 - pt.p_hat) / n);
            pt.upper = wilson_upper(pt.n_hit, pt.n_exceed, z_quantile);
        }
        out.push_back(pt);
    }
    return out;
}

ThetaEstimate estimate_theta_curve(const CoupledDraws& draws, double y, const GridPolicy& policy,
                                   unsigned threads) {
    require(policy.alpha > 0.0 && policy.alpha < 1.0, "grid alpha must lie in (0,1)");
    require(std::isfinite(y), "threshold y must be finite");
    ThetaEstimate est;
    est.y = y;
    est.policy = policy;
    est.rows.resize(draws.lags.size());

    for (std::size_t li = 0; li < draws.lags.size(); ++li) {
        const auto& x = draws.x[li];
        const auto n_y = static_cast<std::size_t>(std::count_if(x.begin(), x.end(), [y](double v) { return v > y; }));
        if (n_y < policy.min_exceed) {
            fail(ErrorKind::InsufficientData, "lag " + std::to_string(draws.lags[li]) + ": only " +
                                                  std::to_string(n_y) + " exceedances of y (need " +
                                                  std::to_string(policy.min_exceed) + ")");
        }
    }

    parallel_for(draws.lags.size(), resolve_threads(threads), [&](std::size_t begin, std::size_t end) {
        for (std::size_t li = begin; li < end; ++li) {
            const auto& x = draws.x[li];
            const auto& xs = draws.x_star[li];
            LagTheta row;
            row.lag = draws.lags[li];
            row.degenerate = std::equal(x.begin(), x.end(), xs.begin());
            const auto grid = theta_grid(x, y, policy);
            if (grid.empty()) {
                fail(ErrorKind::InsufficientData,
                     "lag " + std::to_string(row.lag) + ": empty threshold grid after min_exceed filtering");
            }
            const double zq = normal_upper_quantile(policy.alpha / static_cast<double>(grid.size()));
            row.per_z = conditional_exceedance(x, xs, grid, zq);
            row.n_exceed_at_y = row.per_z.front().n_exceed;
            std::size_t best = 0;
            for (std::size_t k = 0; k < row.per_z.size(); ++k) {
                const auto& pt = row.per_z[k];
                if (pt.p_hat > row.per_z[best].p_hat) best = k;
                row.upper_conf = std::max(row.upper_conf, pt.upper);
            }
            row.theta_hat = row.per_z[best].p_hat;
            row.se = row.per_z[best].se;
            row.z_argmax = row.per_z[best].z;
            if (row.degenerate) row.upper_conf = 0.0;
            row.se_sup = std::max(row.upper_conf - row.theta_hat, 0.0) / zq;
            est.rows[li] = std::move(row);
        }
    });
    return est;
}

DecayFit fit_decay_exponent(std::span<const std::size_t> lags, std::span<const double> theta,
                            const CoefficientSeq& coeffs, double target, double tolerance) {
    require(lags.size() == theta.size(), "lags and theta differ in length");
    DecayFit fit;
    fit.target = target;
    fit.tolerance = tolerance;
    std::vector<double> lx;
    std::vector<double> ly;
    for (std::size_t k = 0; k < lags.size(); ++k) {
        const double a = std::abs(coeffs.at(lags[k]));
        if (theta[k] > 0.0 && a > 0.0) {
            fit.used_lags.push_back(lags[k]);
            lx.push_back(std::log(a));
            ly.push_back(std::log(theta[k]));
        } else {
            fit.excluded_lags.push_back(lags[k]);
        }
    }
    if (lx.size() < 4) {
        std::string census = "decay fit needs >= 4 usable lags (theta > 0, a_i != 0); usable:";
        for (auto l : fit.used_lags) census += " " + std::to_string(l);
        census += "; excluded:";
        for (auto l : fit.excluded_lags) census += " " + std::to_string(l);
        fail(ErrorKind::InsufficientData, census);
    }
    fit.lag_lo = *std::min_element(fit.used_lags.begin(), fit.used_lags.end());
    fit.lag_hi = *std::max_element(fit.used_lags.begin(), fit.used_lags.end());

    const double n = static_cast<double>(lx.size());
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
        sxx += (lx[k] - mx) * (lx[k] - mx);
        sxy += (lx[k] - mx) * (ly[k] - my);
        syy += (ly[k] - my) * (ly[k] - my);
    }
    if (sxx <= 0.0) fail(ErrorKind::InsufficientData, "decay fit needs at least two distinct |a_i|");
    fit.eta_hat = sxy / sxx;
    fit.c_hat = std::exp(my - fit.eta_hat * mx);
    fit.r_squared = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
    fit.pass = fit.eta_hat >= target - tolerance;
    return fit;
}

DecayFit fit_decay_exponent(const ThetaEstimate& est, const CoefficientSeq& coeffs, double target,
                            double tolerance) {
    const auto lags = est.lags();
    const auto theta = est.theta_hat();
    return fit_decay_exponent(lags, theta, coeffs, target, tolerance);
}

ThetaSum aggregate_theta_sum(std::span<const std::size_t> lags, std::span<const double> theta, double q,
                             const DecayFit* fit, const CoefficientSeq* coeffs) {
    require(q > 0.0, "q must be > 0");
    require(lags.size() == theta.size() && !lags.empty(), "lags and theta must be non-empty and equal length");
    for (std::size_t k = 0; k < lags.size(); ++k) {
        require(lags[k] == k, "aggregate_theta_sum needs contiguous lags 0..i_max");
    }
    ThetaSum out;
    out.max_lag = lags.back();
    for (double t : theta) {
        require(t >= 0.0 && t <= 1.0, "theta values must lie in [0,1]");
        if (t > 0.0) out.value += std::pow(t, 1.0 / q);
    }
    if (fit != nullptr && coeffs != nullptr) {
        const double e = fit->eta_hat / q;
        if (e <= 0.0) {
            out.remainder_bound = std::numeric_limits<double>::infinity();
        } else {
            double rest = 0.0;
            for (std::size_t i = out.max_lag + 1; i < coeffs->values.size(); ++i) {
                rest += std::pow(std::abs(coeffs->values[i]), e);
            }
            rest += coeffs->tail_bound(e);
            out.remainder_bound = std::pow(fit->c_hat, 1.0 / q) * rest;
        }
    }
    return out;
}

ThetaSum aggregate_theta_sum(const ThetaEstimate& est, double q, const DecayFit* fit,
                             const CoefficientSeq* coeffs) {
    const auto lags = est.lags();
    const auto theta = est.theta_hat();
    return aggregate_theta_sum(lags, theta, q, fit, coeffs);
}

double sufficiency_exponent(double nu, double q, double eps, InnovationClass cls) {
    require(nu > 0.0 && std::isfinite(nu), "nu must be > 0");
    require(q > 0.0 && std::isfinite(q), "q must be > 0");
    require(eps >= 0.0, "epsilon must be >= 0");
    auto minus_eps = [&](double base, const char* which) {
        require(eps > 0.0, std::string("epsilon must be > 0 in case ") + which);
        const double v = base - eps;
        require(v > 0.0, std::string("epsilon too large: exponent non-positive in case ") + which);
        return v;
    };
    if (cls == InnovationClass::SymmetricStable) {
        require(nu < 2.0, "symmetric stable index must lie in (0,2)");
        if (nu > 1.0) return 1.0 / q;
        if (nu == 1.0) return minus_eps(1.0 / q, "nu = 1");
        return nu / q;
    }
    const double r = nu / (nu + 2.0);
    if (nu > 1.0) {
        if (r > 1.0 / q) return 1.0 / q;
        return minus_eps(r, "nu > 1, nu/(nu+2) <= 1/q");
    }
    if (nu < q - 2.0) return minus_eps(nu / q, "nu <= 1, nu < q-2");
    return minus_eps(r, "nu <= 1, nu >= q-2");
}

}  // namespace tailstab
