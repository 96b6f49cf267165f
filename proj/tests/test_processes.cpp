#include "doctest.h"

#include "tailstab/errors.hpp"
#include "tailstab/processes.hpp"
#include "tailstab/verify.hpp"

#include <algorithm>
#include <cmath>

using namespace tailstab;

namespace {

ProcessSpec linear(TailLaw law, std::vector<double> a) {
    ProcessSpec s;
    s.kind = ProcessKind::Linear;
    s.innovation = law;
    s.coeffs = make_coefficients(Explicit{std::move(a)}, 1.0, 0.0);
    return s;
}

ProcessSpec max_linear(std::vector<double> a, double nu = 1.0) {
    auto s = linear(make_law(Family::Frechet, nu), std::move(a));
    s.kind = ProcessKind::MaxLinear;
    return s;
}

}  // namespace

TEST_CASE("power decay zeta=3, kappa=1, tol=1e-6 truncates at M=707") {
    const auto c = make_coefficients(PowerDecay{3.0, 1.0}, 1.0, 1e-6);
    CHECK(c.truncation() == 707);
    CHECK(c.values[0] == 1.0);
    CHECK(c.values[2] == doctest::Approx(0.125));
    CHECK(c.tail_bound(1.0) < 1e-6);
}

TEST_CASE("geometric r=0.5 truncates at M=20") {
    const auto c = make_coefficients(Geometric{0.5, 1.0}, 1.0, 1e-6);
    CHECK(c.truncation() == 20);
    CHECK(c.values[20] == doctest::Approx(std::pow(0.5, 20)));
}

TEST_CASE("divergent and invalid coefficient families are rejected") {
    CHECK_THROWS_AS(make_coefficients(PowerDecay{1.0, 1.0}, 1.0, 1e-6), Error);
    CHECK_THROWS_AS(make_coefficients(PowerDecay{3.0, 1.0}, 0.3, 1e-6), Error);  // zeta*kappa = 0.9
    CHECK_THROWS_AS(make_coefficients(PowerDecay{3.0, 1.0}, 1.5, 1e-6), Error);
    CHECK_THROWS_AS(make_coefficients(Geometric{1.0, 1.0}, 1.0, 1e-6), Error);
    CHECK_THROWS_AS(make_coefficients(Explicit{{}}, 1.0, 0.0), Error);
    CHECK_THROWS_AS(make_coefficients(Explicit{{0.0, 0.0}}, 1.0, 0.0), Error);
}

TEST_CASE("the chosen truncation is the smallest meeting the budget") {
    for (double zeta : {2.0, 2.5, 4.0}) {
        for (double tol : {1e-2, 1e-4}) {
            const auto c = make_coefficients(PowerDecay{zeta, 1.0}, 1.0, tol);
            CAPTURE(zeta);
            CAPTURE(tol);
            CHECK(c.tail_bound(1.0) < tol);
            // the bound evaluated one step earlier must exceed the budget
            const double s = zeta;
            const double m = static_cast<double>(c.truncation()) - 1.0;
            CHECK(std::pow(m + 0.5, 1.0 - s) / (s - 1.0) >= tol);
        }
    }
}

TEST_CASE("identity filter reproduces the innovation stream") {
    const auto spec = linear(make_law(Family::Pareto, 2.0), {1.0});
    const auto p = simulate_path(spec, 1000, 3);
    CHECK(std::equal(p.values.begin(), p.values.end(), p.innovations.begin()));
}

TEST_CASE("paths are prefix-consistent and thread-invariant") {
    ProcessSpec spec;
    spec.innovation = make_law(Family::TwoSidedPareto, 1.5, 0.4);
    spec.coeffs = make_coefficients(PowerDecay{2.0, 1.0}, 1.0, 1e-3);
    const auto a = simulate_path(spec, 5000, 11, 1).values;
    const auto b = simulate_path(spec, 5000, 11, 3).values;
    const auto c = simulate_path(spec, 1234, 11, 2).values;
    CHECK(a == b);
    CHECK(std::equal(c.begin(), c.end(), a.begin()));
}

TEST_CASE("path is the truncated convolution of the logged innovations") {
    const std::vector<double> a{1.0, -0.5, 0.25};
    const auto spec = linear(make_law(Family::StudentT, 3.0, 0.5), a);
    const auto p = simulate_path(spec, 50, 4);
    for (std::size_t t = 0; t < 50; ++t) {
        const double expect = a[0] * p.innovations[t + 2] + a[1] * p.innovations[t + 1] + a[2] * p.innovations[t];
        CHECK(p.values[t] == doctest::Approx(expect).epsilon(1e-14));
    }
}

TEST_CASE("shift stationarity: two offsets of one path share a marginal") {
    ProcessSpec spec;
    spec.innovation = make_law(Family::Pareto, 2.5);
    spec.coeffs = make_coefficients(PowerDecay{2.0, 1.0}, 1.0, 1e-3);
    const auto x = simulate_path(spec, 200000, 5).values;
    const std::span<const double> all(x);
    const auto ks = ks_two_sample(all.subspan(0, 100000), all.subspan(100000));
    CHECK(ks.p_value > 0.001);
}

TEST_CASE("coupling identity for linear processes") {
    const std::vector<double> a{1.0, 0.7, 0.0, -0.3};
    const auto spec = linear(make_law(Family::TwoSidedPareto, 1.0, 0.5), a);
    const std::vector<std::size_t> lags{0, 1, 2, 3};
    const auto d = simulate_coupled(spec, lags, 2000, 8);
    for (std::size_t li = 0; li < lags.size(); ++li) {
        for (std::size_t r = 0; r < d.reps; ++r) {
            const double expect = a[lags[li]] * (d.eps0_star[r] - d.eps0[r]);
            CHECK(d.x_star[li][r] - d.x[li][r] == doctest::Approx(expect).scale(std::abs(d.x[li][r]) + 1.0).epsilon(1e-12));
        }
    }
    // a_2 = 0: pairs are identical, not merely close
    CHECK(d.x[2] == d.x_star[2]);
}

TEST_CASE("coupled draws are thread-invariant") {
    ProcessSpec spec;
    spec.innovation = make_law(Family::Pareto, 3.0);
    spec.coeffs = make_coefficients(PowerDecay{3.0, 1.0}, 1.0, 1e-4);
    const std::vector<std::size_t> lags{0, 3, 7};
    const auto a = simulate_coupled(spec, lags, 3001, 2, 1);
    const auto b = simulate_coupled(spec, lags, 3001, 2, 4);
    CHECK(a.x == b.x);
    CHECK(a.x_star == b.x_star);
}

TEST_CASE("lag beyond the truncation is rejected") {
    const auto spec = linear(make_law(Family::Pareto, 2.0), {1.0, 0.5});
    const std::vector<std::size_t> lags{2};
    CHECK_THROWS_AS(simulate_coupled(spec, lags, 10, 1), Error);
}

TEST_CASE("stochastic volatility with S = 1 reduces to the linear process") {
    auto lin = linear(make_law(Family::Pareto, 2.0), {1.0, 0.5, 0.25});
    auto sv = lin;
    sv.kind = ProcessKind::StochVol;
    sv.volatility = make_discrete_law({1.0}, {1.0});
    const std::vector<std::size_t> lags{0, 1, 2};
    const auto a = simulate_coupled(lin, lags, 1000, 6);
    const auto b = simulate_coupled(sv, lags, 1000, 6);
    CHECK(a.x == b.x);
    CHECK(a.x_star == b.x_star);
    CHECK(simulate_path(lin, 300, 6).values == simulate_path(sv, 300, 6).values);
}

TEST_CASE("stochastic volatility: zero coefficient gives exact pair equality") {
    auto sv = linear(make_law(Family::Pareto, 2.0), {1.0, 0.0, 0.25});
    sv.kind = ProcessKind::StochVol;
    sv.volatility = make_discrete_law({0.5, 1.5}, {0.5, 0.5});
    const std::vector<std::size_t> lags{0, 1};
    const auto d = simulate_coupled(sv, lags, 1000, 6);
    CHECK(d.x[1] == d.x_star[1]);
    CHECK(d.x[0] != d.x_star[0]);
}

TEST_CASE("stochastic volatility needs a volatility law and vice versa") {
    auto sv = linear(make_law(Family::Pareto, 2.0), {1.0});
    sv.kind = ProcessKind::StochVol;
    CHECK_THROWS_AS(validate(sv), Error);
    auto lin = linear(make_law(Family::Pareto, 2.0), {1.0});
    lin.volatility = make_discrete_law({1.0}, {1.0});
    CHECK_THROWS_AS(validate(lin), Error);
}

TEST_CASE("max-linear needs non-negative innovations and coefficients") {
    auto bad = max_linear({1.0, -0.5});
    CHECK_THROWS_AS(validate(bad), Error);
    auto bad2 = linear(make_law(Family::TwoSidedPareto, 1.0, 0.5), {1.0});
    bad2.kind = ProcessKind::MaxLinear;
    CHECK_THROWS_AS(validate(bad2), Error);
}

TEST_CASE("max-linear coupled conditional probability matches the closed form") {
    const auto spec = max_linear({1.0, 0.5});
    const std::vector<std::size_t> lags{1};
    const auto d = simulate_coupled(spec, lags, 200000, 21);
    std::size_t n = 0, hit = 0;
    for (std::size_t r = 0; r < d.reps; ++r) {
        if (d.x[0][r] > 1.0) {
            ++n;
            if (d.x_star[0][r] <= 1.0) ++hit;
        }
    }
    const double p = static_cast<double>(hit) / static_cast<double>(n);
    const double exact = std::exp(-1.5) * (1.0 - std::exp(-0.5)) / (1.0 - std::exp(-1.5));
    CHECK(exact == doctest::Approx(0.11301).epsilon(1e-4));
    const double se = std::sqrt(exact * (1.0 - exact) / static_cast<double>(n));
    CHECK(std::abs(p - exact) < 4.0 * se);
}

TEST_CASE("max-linear marginal at x = 1 is exp(-1.5)") {
    const auto spec = max_linear({1.0, 0.5});
    const auto x = simulate_path(spec, 200000, 9).values;
    const double below = static_cast<double>(std::count_if(x.begin(), x.end(), [](double v) { return v <= 1.0; })) /
                         static_cast<double>(x.size());
    const double exact = 0.22313016014842982;
    CHECK(std::abs(below - exact) < 4.0 * std::sqrt(exact * (1.0 - exact) / 200000.0));
}

TEST_CASE("monotone transforms") {
    const std::vector<double> path{2.7, -0.2, 5.0};
    CHECK(apply_monotone(path, FloorTransform{}) == std::vector<double>{2.0, -1.0, 5.0});
    CHECK(apply_monotone(path, make_affine(1.0, 0.0)) == path);
    CHECK(apply(make_affine(2.0, 1.0), 3.0) == 7.0);
    const auto table = make_table({0.0, 1.0, 2.0}, {0.0, 10.0, 10.0});
    CHECK(apply(table, 0.5) == doctest::Approx(5.0));
    CHECK(apply(table, 1.5) == doctest::Approx(10.0));
    CHECK_THROWS_AS(make_table({0.0, 1.0}, {1.0, 0.0}), Error);
    CHECK_THROWS_AS(make_affine(-1.0, 0.0), Error);
}

TEST_CASE("matched thresholds invert the transform on exceedance events") {
    // {K(x) > z} = {x > matched_threshold(z)} for every x
    const MonotoneTransform transforms[] = {FloorTransform{}, make_affine(2.0, -1.0),
                                            make_table({0.0, 1.0, 3.0}, {0.0, 2.0, 2.5})};
    rng::Stream s(3, rng::Tag::IidSample, {99});
    for (const auto& t : transforms) {
        for (double z : {0.0, 0.7, 1.0, 2.2}) {
            const double b = matched_threshold(t, z);
            for (int k = 0; k < 500; ++k) {
                const double x = -1.0 + 5.0 * s.uniform();
                CHECK((apply(t, x) > z) == (x > b));
            }
        }
    }
}

TEST_CASE("random monotone tables preserve elementwise order") {
    rng::Stream s(17, rng::Tag::IidSample, {5});
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> kx{0.0}, ky{0.0};
        for (int k = 0; k < 6; ++k) {
            kx.push_back(kx.back() + 0.1 + s.uniform());
            ky.push_back(ky.back() + (s.uniform() < 0.3 ? 0.0 : s.uniform()));
        }
        const auto t = make_table(kx, ky);
        std::vector<double> path(200);
        for (double& v : path) v = -1.0 + 8.0 * s.uniform();
        const auto out = apply_monotone(path, t);
        for (std::size_t i = 0; i < path.size(); ++i) {
            for (std::size_t j = 0; j < path.size(); ++j) {
                if (path[i] <= path[j]) REQUIRE(out[i] <= out[j]);
            }
        }
    }
}

TEST_CASE("discrete volatility law") {
    const auto law = make_discrete_law({0.5, 1.5}, {0.25, 0.75});
    rng::Stream s(1, rng::Tag::Volatility, {0});
    int high = 0;
    for (int i = 0; i < 40000; ++i) high += draw(law, s) == 1.5;
    CHECK(high / 40000.0 == doctest::Approx(0.75).epsilon(0.02));
    CHECK_THROWS_AS(make_discrete_law({1.0}, {0.5}), Error);
}
