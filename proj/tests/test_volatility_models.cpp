#include "tvvol/volatility_models.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

using namespace tvvol;
using tvvol::testing::random_params;

TEST_CASE("softmax weights") {
    const std::vector<double> d2{0.0, 0.0};
    CHECK(softmax_weights(d2)[0] == doctest::Approx(0.5));

    const std::vector<double> d3{0.0, 0.0, 0.0};
    const auto m3 = softmax_weights(d3);
    CHECK(m3[0] == doctest::Approx(1.0 / 3));
    CHECK(m3[1] == doctest::Approx(1.0 / 3));

    const std::vector<double> big{0.0, 20.0};
    const double m = softmax_weights(big)[0];
    CHECK(m == doctest::Approx(1.0 / (1.0 + std::exp(-20.0))).epsilon(1e-15));
    CHECK(m < 1.0);

    // Overflow-safe.
    const std::vector<double> huge{800.0, 801.0};
    CHECK(softmax_weights(huge)[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
}

TEST_CASE("spec validation") {
    CHECK_THROWS_AS((ModelSpec{ModelKind::TvArch, 1, 1, 8, 8, 8}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((ModelSpec{ModelKind::TvGarch, 1, 0, 8, 8, 8}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((ModelSpec{ModelKind::TvGarch, 1, 1, 3, 8, 8}.validate()), std::invalid_argument);
    CHECK_NOTHROW((ModelSpec{ModelKind::TvIGarch, 1, 1, 4, 4, 4}.validate()));
    CHECK(parse_model_kind("garch") == ModelKind::TvGarch);
    CHECK(parse_model_kind("tviGARCH") == ModelKind::TvIGarch);
    CHECK_THROWS_AS(parse_model_kind("egarch"), std::invalid_argument);
}

TEST_CASE("parameter layout") {
    const ModelSpec igarch1 = make_spec(ModelKind::TvIGarch, 1, 1, 4);
    const ParamLayout l(igarch1);
    CHECK(igarch1.free_garch_curves() == 0);
    CHECK(l.eta == l.delta);  // no eta block at all
    CHECK(l.size == 8 + 8 + 2 + 1);

    const ModelSpec garch = make_spec(ModelKind::TvGarch, 2, 1, 4);
    const ParamLayout g(garch);
    CHECK(g.size == 8 + 16 + 8 + 4 + 1);
    CHECK(g.is_bounded(g.theta));
    CHECK(!g.is_bounded(g.delta));

    std::mt19937_64 rng(5);
    const auto p = random_params(garch, rng);
    const auto back = from_coordinates(garch, to_coordinates(garch, p));
    CHECK(back.beta == p.beta);
    CHECK(back.eta == p.eta);
    CHECK(back.sigma0_sq == doctest::Approx(p.sigma0_sq).epsilon(1e-14));
}

TEST_CASE("build_curves examples") {
    const ModelSpec spec = make_spec(ModelKind::TvArch, 1, 0, 4);
    const BasisSet bases = make_bases(spec);
    ParamVector p;
    p.beta.assign(spec.k1, 0.0);
    p.theta.assign(spec.k2, 1.0);
    p.delta = {0.0, 0.0};
    const auto c = build_curves(spec, p, bases, 50);
    for (int i = 0; i < 50; ++i) {
        CHECK(c.mu[i] == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(c.a[0][i] == doctest::Approx(0.5).epsilon(1e-13));
        CHECK(c.grid[i] == doctest::Approx((i + 1) / 50.0));
    }

    ParamVector bad = p;
    bad.theta.pop_back();
    CHECK_THROWS_AS(build_curves(spec, bad, bases, 50), std::invalid_argument);
}

TEST_CASE("integrated model sums to one regardless of parameters") {
    const ModelSpec spec = make_spec(ModelKind::TvIGarch, 1, 1, 4);
    const BasisSet bases = make_bases(spec);
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const auto p = random_params(spec, rng, 3.0);
        const auto c = build_curves(spec, p, bases, 300);
        for (int i = 0; i < 300; ++i) CHECK(std::abs(c.a[0][i] + c.b[0][i] - 1.0) < 1e-12);
    }
}

TEST_CASE("constraint support holds for random parameters") {
    std::mt19937_64 rng(99);
    for (auto kind : {ModelKind::TvArch, ModelKind::TvGarch, ModelKind::TvIGarch}) {
        const int q = kind == ModelKind::TvArch ? 0 : 2;
        const ModelSpec spec = make_spec(kind, 2, q, 3);
        const BasisSet bases = make_bases(spec);
        int violations = 0;
        for (int trial = 0; trial < 200; ++trial) {
            const auto p = random_params(spec, rng, 10.0);
            violations += satisfies_constraints(spec, build_curves(spec, p, bases, 400)) ? 0 : 1;
        }
        CHECK(violations == 0);
    }
}

TEST_CASE("scaling exp(beta) scales mu") {
    const ModelSpec spec = make_spec(ModelKind::TvGarch, 1, 1, 5);
    const BasisSet bases = make_bases(spec);
    std::mt19937_64 rng(1);
    auto p = random_params(spec, rng);
    const auto c0 = build_curves(spec, p, bases, 100);
    const double scale = 3.7;
    for (auto& b : p.beta) b += std::log(scale);
    const auto c1 = build_curves(spec, p, bases, 100);
    for (int i = 0; i < 100; ++i) CHECK(c1.mu[i] == doctest::Approx(scale * c0.mu[i]).epsilon(1e-12));
}

namespace {

CoefficientCurves constant_curves(int n, double mu, std::vector<double> a, std::vector<double> b) {
    CoefficientCurves c;
    c.grid.resize(n);
    c.mu.assign(n, mu);
    for (double v : a) c.a.emplace_back(n, v);
    for (double v : b) c.b.emplace_back(n, v);
    for (int i = 0; i < n; ++i) c.grid[i] = (i + 1.0) / n;
    return c;
}

}  // namespace

TEST_CASE("variance recursion examples") {
    const std::vector<double> x = tvvol::testing::white_noise(40, 1.0, 3);

    const ModelSpec arch = make_spec(ModelKind::TvArch, 1, 0, 0);
    const auto v1 = variance_recursion(arch, constant_curves(40, 1.0, {0.0}, {}), x, 0.0);
    for (double v : v1) CHECK(v == 1.0);

    const std::vector<double> ones(40, 1.0);
    const auto v2 = variance_recursion(arch, constant_curves(40, 0.5, {0.5}, {}), ones, 0.0);
    CHECK(v2[0] == 0.5);  // X_0^2 = 0 before the sample
    for (std::size_t i = 1; i < v2.size(); ++i) CHECK(v2[i] == 1.0);

    // sigma_i^2 = 1 + 0.5 sigma_{i-1}^2 from sigma_0^2 = 2 stays at the fixed point 2.
    const ModelSpec garch = make_spec(ModelKind::TvGarch, 1, 1, 0);
    const auto v3 = variance_recursion(garch, constant_curves(40, 1.0, {0.0}, {0.5}), x, 2.0);
    for (double v : v3) CHECK(v == doctest::Approx(2.0));
    // From sigma_0^2 = 10 the closed form is 2 + 8 * 0.5^i.
    const auto v4 = variance_recursion(garch, constant_curves(40, 1.0, {0.0}, {0.5}), x, 10.0);
    for (std::size_t i = 0; i < v4.size(); ++i) {
        CHECK(v4[i] == doctest::Approx(2.0 + 8.0 * std::pow(0.5, i + 1)).epsilon(1e-14));
    }

    CHECK_THROWS_AS(variance_recursion(arch, constant_curves(40, 0.0, {0.0}, {}), x, 0.0),
                    std::logic_error);
    CHECK_THROWS_AS(variance_recursion(arch, constant_curves(10, 1.0, {0.0}, {}), x, 0.0),
                    std::invalid_argument);
}

TEST_CASE("variance is bounded below by the intercept curve") {
    std::mt19937_64 rng(12);
    const auto x = tvvol::testing::white_noise(200, 2.0, 8);
    for (auto kind : {ModelKind::TvArch, ModelKind::TvGarch, ModelKind::TvIGarch}) {
        const ModelSpec spec = make_spec(kind, 1, kind == ModelKind::TvArch ? 0 : 1, 4);
        const BasisSet bases = make_bases(spec);
        for (int trial = 0; trial < 20; ++trial) {
            const auto p = random_params(spec, rng, 2.0);
            const auto c = build_curves(spec, p, bases, 200);
            const auto v = variance_recursion(spec, c, x, p.sigma0_sq);
            const double floor = *std::min_element(c.mu.begin(), c.mu.end());
            for (std::size_t i = 0; i < v.size(); ++i) {
                CHECK(v[i] >= c.mu[i]);
                CHECK(v[i] >= floor);
            }
        }
    }
}
