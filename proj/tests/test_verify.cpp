#include "doctest.h"

#include "tailstab/errors.hpp"
#include "tailstab/heavy_tails.hpp"
#include "tailstab/processes.hpp"
#include "tailstab/verify.hpp"

#include <cmath>

using namespace tailstab;

namespace {

ProcessSpec linear(TailLaw law, std::vector<double> a) {
    ProcessSpec s;
    s.innovation = law;
    s.coeffs = make_coefficients(Explicit{std::move(a)}, 1.0, 0.0);
    return s;
}

}  // namespace

TEST_CASE("tail balance sums") {
    const auto pos = make_coefficients(Explicit{{1.0, 0.5, 0.25}}, 1.0, 0.0);
    const auto [a1, a2] = tail_balance_sums(pos, 2.0, 1.0);
    CHECK(a1 == doctest::Approx(1.0 + 0.25 + 0.0625));
    CHECK(a2 == 0.0);
    const auto mixed = make_coefficients(Explicit{{1.0, -1.0}}, 1.0, 0.0);
    const auto [b1, b2] = tail_balance_sums(mixed, 2.0, 0.5);
    CHECK(b1 == doctest::Approx(1.0));
    CHECK(b2 == doctest::Approx(1.0));
}

TEST_CASE("tail constants by case") {
    auto spec = linear(make_law(Family::Pareto, 2.0), {1.0, 0.5});
    CHECK(tail_constants(spec, TailCase::LinearOnly).constant == doctest::Approx(1.25));
    spec.kind = ProcessKind::StochVol;
    spec.volatility = make_discrete_law({1.0}, {1.0});
    CHECK(tail_constants(spec, TailCase::StochVolCaseI).constant == doctest::Approx(1.25));
    spec.volatility = make_discrete_law({0.5, 1.5}, {0.5, 0.5});
    CHECK(tail_constants(spec, TailCase::StochVolCaseI).constant == doctest::Approx(1.25 * 1.25));
    spec.volatility = make_discrete_law({-1.0, 2.0}, {0.5, 0.5});
    // negative volatility flips the sign: A2 E[S_-^nu] with A2 = 0 contributes nothing
    CHECK(tail_constants(spec, TailCase::StochVolCaseI).constant == doctest::Approx(1.25 * 2.0));
    try {
        tail_constants(spec, TailCase::StochVolCaseIII);
        FAIL("expected Unsupported");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Unsupported);
    }
}

TEST_CASE("case II tail constant: Monte Carlo moment of the linear part") {
    auto spec = linear(make_law(Family::Pareto, 3.0), {1.0});
    spec.kind = ProcessKind::StochVol;
    spec.volatility = make_law(Family::Pareto, 1.5);
    const auto tc = tail_constants(spec, TailCase::StochVolCaseII, 400000, 3);
    // E[eps^1.5] = 3 / (3 - 1.5) = 2
    CHECK(tc.monte_carlo);
    CHECK(tc.reference == "volatility");
    CHECK(std::abs(tc.constant - 2.0) < 4.0 * tc.mc_se);
}

TEST_CASE("frechet max-linear cdf") {
    const std::vector<double> a{1.0, 0.5};
    CHECK(frechet_maxlinear_cdf(a, 1.0, 1.0) == doctest::Approx(0.223130).epsilon(1e-6));
    const std::vector<double> one{1.0};
    for (double x : {0.5, 2.0}) CHECK(frechet_maxlinear_cdf(one, 1.7, x) == doctest::Approx(std::exp(-std::pow(x, -1.7))));
    const double x = 1e3;
    const double ratio = (1.0 - frechet_maxlinear_cdf(a, 1.0, x)) / (1.0 - std::exp(-1.0 / x));
    CHECK(ratio == doctest::Approx(1.5).epsilon(1e-3));
    CHECK(frechet_maxlinear_upper_quantile(a, 1.0, 1.0 - 0.223130160148) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("bivariate max-linear cdf") {
    const std::vector<double> a{1.0, 0.5, 0.25};
    const double f = frechet_maxlinear_cdf(a, 1.0, 2.0);
    // beyond the coefficient span the two coordinates are independent
    CHECK(frechet_maxlinear_cdf2(a, 1.0, 2.0, 2.0, 5) == doctest::Approx(f * f));
    CHECK(frechet_maxlinear_cdf2(a, 1.0, 2.0, 2.0, 1) > f * f);
    CHECK(frechet_maxlinear_cdf2(a, 1.0, 2.0, 2.0, 1) <= f);
    CHECK(frechet_maxlinear_cdf2(a, 1.0, 2.0, 1e12, 1) == doctest::Approx(f));
    CHECK(frechet_maxlinear_cdf2(a, 1.0, 2.0, 2.0, 0) == doctest::Approx(f));
}

TEST_CASE("frechet exact theta") {
    const std::vector<double> a{1.0, 0.5};
    CHECK(frechet_theta_at(a, 1.0, 1, 1.0) == doctest::Approx(0.11301).epsilon(1e-4));
    const std::vector<double> z{1.0, 2.0, 4.0};
    const auto ex = frechet_theta_exact(a, 1.0, 1, z);
    CHECK(ex.values.size() == 3);
    CHECK(ex.sup == *std::max_element(ex.values.begin(), ex.values.end()));
    const std::vector<double> zero{1.0, 0.0, 0.5};
    CHECK(frechet_theta_at(zero, 1.0, 1, 3.0) == 0.0);
    const std::vector<double> tiny{1.0, 1e-9};
    CHECK(frechet_theta_at(tiny, 1.0, 1, 3.0) < 1e-8);
}

TEST_CASE("stable marginal scale") {
    const std::vector<double> a{1.0, 1.0, 1.0};
    CHECK(stable_marginal_scale(a, 1.0, 1) == doctest::Approx(2.0));
    const std::vector<double> one{1.0};
    CHECK(stable_marginal_scale(one, 0.7) == doctest::Approx(1.0));
    const std::vector<double> b{3.0, 4.0};
    CHECK(stable_marginal_scale(b, 1.5) == doctest::Approx(std::pow(std::pow(3.0, 1.5) + 8.0, 1.0 / 1.5)));
}

TEST_CASE("hill estimator") {
    const std::size_t n = 100000;
    std::vector<double> grid(n);
    for (std::size_t j = 0; j < n; ++j) grid[j] = std::pow((static_cast<double>(j) + 0.5) / static_cast<double>(n), -0.5);
    CHECK(hill_estimate(grid, n / 10).nu == doctest::Approx(2.0).epsilon(0.05));
    const auto mc = sample_iid(make_law(Family::Pareto, 1.7), 1000000, 2, 1);
    const auto h = hill_estimate(mc, 1000);
    CHECK(std::abs(h.nu - 1.7) < 3.0 * h.se);
    CHECK(h.k == 1000);
    const std::vector<double> ties(100, 2.0);
    CHECK_THROWS_AS(hill_estimate(ties, 10), Error);
    CHECK(default_hill_k(1000) == 10);
    CHECK(default_hill_k(100000) == 1000);
    CHECK(default_hill_k(10000000) == 10000);
}

TEST_CASE("truncated moment ratio limit") {
    CHECK(truncated_moment_ratio(make_law(Family::Pareto, 1.0), 2.0, 1e4) == doctest::Approx(1.0).epsilon(0.02));
    CHECK(truncated_moment_ratio(make_law(Family::Frechet, 1.5), 3.0, 1e4) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("kolmogorov distribution") {
    CHECK(kolmogorov_survival(0.0) == 1.0);
    CHECK(kolmogorov_survival(1.36) == doctest::Approx(0.0494).epsilon(0.01));
    CHECK(kolmogorov_survival(1.63) == doctest::Approx(0.0098).epsilon(0.02));
    const std::vector<double> a{1, 2, 3, 4};
    const std::vector<double> b{5, 6, 7, 8};
    CHECK(ks_two_sample(a, b).statistic == 1.0);
    CHECK(ks_two_sample(a, a).statistic == 0.0);
}

TEST_CASE("density envelope holds for symmetric stable sums") {
    ProcessSpec spec;
    spec.innovation = make_law(Family::SymmetricStable, 1.5, 0.5);
    spec.coeffs = make_coefficients(Explicit{{1.0, 0.5, 0.25, 0.125}}, 1.0, 0.0);
    const std::vector<std::size_t> lags{1, 2};
    const auto d = simulate_coupled(spec, lags, 200000, 3);
    // Y_i = X_i - a_i eps_0
    std::vector<std::vector<double>> y(2, std::vector<double>(d.reps));
    for (std::size_t li = 0; li < 2; ++li) {
        for (std::size_t r = 0; r < d.reps; ++r) y[li][r] = d.x[li][r] - spec.coeffs.values[lags[li]] * d.eps0[r];
    }
    const auto chk = density_envelope_check(y, 1.5, 0.05);
    CHECK(chk.pass);
    CHECK(chk.c_hat > 0.0);
    CHECK(chk.lags.size() == 2);
}
