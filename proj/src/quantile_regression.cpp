// Check-function minimization. The design case walks vertices of the
// piecewise-linear objective: a vertex is fixed by p observations with zero
// residual, edges leave it by releasing one of them, and each edge is searched
// exactly over its breakpoints.

#include "tailstab/tailstats.hpp"

#include "tailstab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace tailstab {

double check_loss(double u, double alpha) { return u > 0.0 ? (1.0 - alpha) * u : -alpha * u; }

double check_objective(std::span<const double> responses, const Eigen::MatrixXd* design, const Eigen::VectorXd& beta,
                       double alpha) {
    double sum = 0.0;
    for (std::size_t i = 0; i < responses.size(); ++i) {
        const double fitted = design ? design->row(static_cast<Eigen::Index>(i)).dot(beta) : beta(0);
        sum += check_loss(responses[i] - fitted, alpha);
    }
    return sum;
}

namespace {

QuantileFit intercept_only(std::span<const double> responses, double alpha) {
    const std::size_t n = responses.size();
    double pos = static_cast<double>(n) * (1.0 - alpha);
    auto k = static_cast<std::size_t>(std::ceil(pos - 1e-9 * std::max(1.0, pos)));
    k = std::clamp<std::size_t>(k, 1, n);
    std::vector<double> sorted(responses.begin(), responses.end());
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1), sorted.end());
    QuantileFit fit;
    fit.beta = Eigen::VectorXd::Constant(1, sorted[k - 1]);
    fit.order_index = k;
    fit.objective = check_objective(responses, nullptr, fit.beta, alpha);
    return fit;
}

// Slope of the objective at t = 0+ along residual directions r + t s.
double right_slope(const Eigen::VectorXd& r, const Eigen::VectorXd& s, double alpha) {
    double g = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        const double si = s(i);
        if (si == 0.0) continue;
        const bool up = r(i) > 0.0 || (r(i) == 0.0 && si > 0.0);
        g += up ? (1.0 - alpha) * si : -alpha * si;
    }
    return g;
}

}  // namespace

QuantileFit high_quantile_fit(std::span<const double> responses, const Eigen::MatrixXd* design, double alpha) {
    const std::size_t n = responses.size();
    require(n >= 1, "quantile regression needs at least one response");
    require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0,1)");
    if (static_cast<double>(n) * alpha < 1.0 - 1e-9) {
        fail(ErrorKind::InsufficientData, "n * alpha = " + std::to_string(static_cast<double>(n) * alpha) +
                                              " < 1: no tail observations");
    }
    for (double u : responses) require(std::isfinite(u), "responses must be finite");
    if (design == nullptr) return intercept_only(responses, alpha);

    const Eigen::MatrixXd& w = *design;
    require(static_cast<std::size_t>(w.rows()) == n, "design rows must match the number of responses");
    const Eigen::Index p = w.cols();
    require(p >= 1, "design must have at least one column");
    require(w.allFinite(), "design must be finite");
    const Eigen::Map<const Eigen::VectorXd> u(responses.data(), static_cast<Eigen::Index>(n));

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(w.transpose());
    if (qr.rank() < p) fail(ErrorKind::InvalidArgument, "design matrix is rank deficient");
    std::vector<Eigen::Index> basis(static_cast<std::size_t>(p));
    for (Eigen::Index k = 0; k < p; ++k) basis[static_cast<std::size_t>(k)] = qr.colsPermutation().indices()(k);

    const Eigen::VectorXd cbar = w.colwise().mean().transpose();
    const std::size_t max_iter = 100 * n + 1000;
    QuantileFit fit;

    for (std::size_t iter = 0;; ++iter) {
        if (iter > max_iter) fail(ErrorKind::Numerical, "quantile regression vertex descent did not terminate");
        Eigen::MatrixXd wh(p, p);
        Eigen::VectorXd uh(p);
        for (Eigen::Index k = 0; k < p; ++k) {
            wh.row(k) = w.row(basis[static_cast<std::size_t>(k)]);
            uh(k) = u(basis[static_cast<std::size_t>(k)]);
        }
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(wh);
        const Eigen::MatrixXd inv = lu.inverse();
        const Eigen::VectorXd beta = inv * uh;
        Eigen::VectorXd r = u - w * beta;
        for (Eigen::Index k = 0; k < p; ++k) r(basis[static_cast<std::size_t>(k)]) = 0.0;

        // Best edge under the order (objective slope, secondary slope).
        double best_g = 0.0;
        double best_h = 0.0;
        Eigen::VectorXd best_d;
        Eigen::VectorXd best_s;
        for (Eigen::Index k = 0; k < p; ++k) {
            for (double sign : {1.0, -1.0}) {
                const Eigen::VectorXd d = sign * inv.col(k);
                const Eigen::VectorXd s = -(w * d);
                const double g = right_slope(r, s, alpha);
                const double scale = s.cwiseAbs().sum();
                const double tol = 1e-11 * std::max(scale, 1.0);
                const double h = cbar.dot(d);
                const bool better_primary = g < -tol && g < best_g;
                const bool tie_secondary = std::abs(g) <= tol && best_g >= -tol && h < best_h - 1e-14;
                if (better_primary || tie_secondary) {
                    best_g = std::abs(g) <= tol ? 0.0 : g;
                    best_h = h;
                    best_d = d;
                    best_s = s;
                }
            }
        }
        if (best_d.size() == 0) {
            fit.beta = beta;
            fit.iterations = iter;
            break;
        }

        // Exact line search: slope rises by |s_i| at each breakpoint t_i = -r_i / s_i > 0.
        std::vector<std::pair<double, Eigen::Index>> breaks;
        for (Eigen::Index i = 0; i < r.size(); ++i) {
            if (best_s(i) == 0.0 || r(i) == 0.0) continue;
            const double t = -r(i) / best_s(i);
            if (t > 0.0) breaks.emplace_back(t, i);
        }
        if (breaks.empty()) fail(ErrorKind::Numerical, "check objective unbounded along a descent edge");
        std::sort(breaks.begin(), breaks.end());
        double slope = best_g;
        Eigen::Index entering = breaks.front().second;
        for (const auto& [t, i] : breaks) {
            slope += std::abs(best_s(i));
            entering = i;
            if (slope >= 0.0) break;
        }
        // The released basis member is the one whose coordinate d moves.
        const Eigen::VectorXd v = wh * best_d;
        Eigen::Index leaving = 0;
        v.cwiseAbs().maxCoeff(&leaving);
        basis[static_cast<std::size_t>(leaving)] = entering;
    }
    fit.objective = check_objective(responses, design, fit.beta, alpha);
    return fit;
}

}  // namespace tailstab
