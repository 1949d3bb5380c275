#include "tvvol/likelihood.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

using namespace tvvol;
using tvvol::testing::random_params;
using tvvol::testing::random_spec;

namespace {

// Independent evaluation: curves from dense basis values, variances by a
// direct loop, and Gaussian log densities summed term by term.
double direct_log_likelihood(const ModelSpec& spec, const ParamVector& prm,
                             const std::vector<double>& x) {
    const int n = static_cast<int>(x.size());
    const BasisSet bases = make_bases(spec);
    std::vector<double> m(prm.delta.size());
    double total = 0.0;
    for (std::size_t l = 0; l < m.size(); ++l) total += std::exp(prm.delta[l]);
    for (std::size_t l = 0; l < m.size(); ++l) m[l] = std::exp(prm.delta[l]) / total;

    std::vector<double> var(n);
    double ll = 0.0;
    for (int t = 1; t <= n; ++t) {
        const double u = static_cast<double>(t) / n;
        const auto b1 = bases.mu.eval(u);
        const auto b2 = bases.a.eval(u);
        const auto b3 = bases.b.eval(u);
        double s = 0.0;
        for (int j = 0; j < spec.k1; ++j) s += std::exp(prm.beta[j]) * b1[j];
        double used = 0.0;
        for (int k = 1; k <= spec.p; ++k) {
            double a = 0.0;
            for (int j = 0; j < spec.k2; ++j) a += prm.theta[(k - 1) * spec.k2 + j] * b2[j];
            a *= m[k];
            used += a;
            s += a * (t - k >= 1 ? x[t - k - 1] * x[t - k - 1] : 0.0);
        }
        for (int r = 1; r <= spec.q; ++r) {
            double b = 0.0;
            if (r <= spec.free_garch_curves()) {
                for (int j = 0; j < spec.k3; ++j) b += prm.eta[(r - 1) * spec.k3 + j] * b3[j];
                b *= m[spec.p + r];
                used += b;
            } else {
                b = 1.0 - used;
            }
            const int lag = t - r;
            s += b * (lag >= 1 ? var[lag - 1] : (lag == 0 ? prm.sigma0_sq : 0.0));
        }
        var[t - 1] = s;
        if (t >= spec.first_likelihood_index()) {
            ll += -0.5 * std::log(2.0 * std::numbers::pi * s) - 0.5 * x[t - 1] * x[t - 1] / s;
        }
    }
    return ll;
}

std::vector<double> garch_like_data(const ModelSpec& spec, const ParamVector& prm, int n,
                                    std::mt19937_64& rng) {
    // Simulate from the parameters themselves so the variance stays tame.
    const BasisSet bases = make_bases(spec);
    const auto curves = build_curves(spec, prm, bases, n);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> x(n, 0.0);
    std::vector<double> var(n);
    for (int i = 0; i < n; ++i) {
        std::vector<double> prefix(x.begin(), x.begin() + i + 1);
        var = variance_recursion(spec, curves, prefix, prm.sigma0_sq);
        x[i] = std::sqrt(var[i]) * normal(rng);
    }
    return x;
}

bool close(double analytic, double numeric) {
    return std::abs(analytic - numeric) <= std::max(1e-6, 1e-4 * std::abs(numeric));
}

}  // namespace

TEST_CASE("log-likelihood agrees with direct density evaluation") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 30; ++trial) {
        const ModelSpec spec = random_spec(rng);
        const auto prm = random_params(spec, rng, 1.0);
        const auto x = garch_like_data(spec, prm, 50, rng);
        const PosteriorModel model(spec, x, PriorHyper{});
        const double ll = model.log_likelihood(to_coordinates(spec, prm));
        CHECK(std::abs(ll - direct_log_likelihood(spec, prm, x)) < 1e-10 * std::max(1.0, std::abs(ll)));
    }
}

TEST_CASE("data term examples") {
    const ModelSpec spec = make_spec(ModelKind::TvArch, 1, 0, 4);
    ParamVector prm;
    prm.beta.assign(spec.k1, 0.0);   // mu = 1
    prm.theta.assign(spec.k2, 0.0);  // a = 0
    prm.delta = {0.0, 0.0};
    const auto c = to_coordinates(spec, prm);

    const std::vector<double> zeros(30, 0.0);
    CHECK(PosteriorModel(spec, zeros, PriorHyper{}).data_term(c) == doctest::Approx(0.0));

    const std::vector<double> ones(30, 1.0);
    CHECK(PosteriorModel(spec, ones, PriorHyper{}).data_term(c) == doctest::Approx(29 * 0.5));

    // Priors add beta^2/(2 c2) + delta^2/(2 c1).
    prm.beta.assign(spec.k1, 1.0);
    prm.delta = {2.0, -1.0};
    const auto c2 = to_coordinates(spec, prm);
    const PosteriorModel model(spec, ones, PriorHyper{4.0, 8.0, 2.0});
    CHECK(model.potential(c2) - model.data_term(c2) ==
          doctest::Approx(spec.k1 * 1.0 / 16.0 + 5.0 / 8.0));

    const std::vector<double> bad{1.0, std::nan(""), 2.0};
    CHECK_THROWS_AS(PosteriorModel(spec, bad, PriorHyper{}), std::invalid_argument);
    CHECK_THROWS_AS((PriorHyper{0.0, 1.0, 1.0}.validate()), std::invalid_argument);
}

TEST_CASE("analytic gradient matches central differences") {
    std::mt19937_64 rng(2718);
    const double h = 1e-5;
    int failures = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const ModelSpec spec = random_spec(rng);
        const auto prm = random_params(spec, rng, 1.0, 0.3);
        const auto x = garch_like_data(spec, prm, 80, rng);
        const PosteriorModel model(spec, x, PriorHyper{});
        auto c = to_coordinates(spec, prm);
        std::vector<double> g(model.dimension());
        model.potential_and_gradient(c, g);
        for (int i = 0; i < model.dimension(); ++i) {
            const double keep = c[i];
            c[i] = keep + h;
            const double up = model.potential(c);
            c[i] = keep - h;
            const double down = model.potential(c);
            c[i] = keep;
            const double fd = (up - down) / (2.0 * h);
            if (!close(g[i], fd)) {
                ++failures;
                MESSAGE("trial " << trial << " " << to_string(spec.kind) << " coord " << i
                                 << " analytic " << g[i] << " fd " << fd);
            }
        }
    }
    CHECK(failures == 0);
}

TEST_CASE("gradient-only path agrees with the full evaluation") {
    std::mt19937_64 rng(3);
    const ModelSpec spec = make_spec(ModelKind::TvGarch, 2, 2, 2);
    const auto prm = random_params(spec, rng);
    const auto x = garch_like_data(spec, prm, 120, rng);
    const PosteriorModel model(spec, x, PriorHyper{});
    const auto c = to_coordinates(spec, prm);
    std::vector<double> g1(model.dimension()), g2(model.dimension());
    model.potential_and_gradient(c, g1);
    CHECK(model.gradient(c, g2));
    CHECK(g1 == g2);
}

TEST_CASE("constant-variance MLE is stationary along the intercept") {
    const auto x = tvvol::testing::white_noise(400, 1.7, 17);
    const ModelSpec spec = make_spec(ModelKind::TvArch, 1, 0, 4);
    double mean_sq = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) mean_sq += x[i] * x[i];
    mean_sq /= static_cast<double>(x.size() - 1);
    ParamVector prm;
    prm.beta.assign(spec.k1, std::log(mean_sq));
    prm.theta.assign(spec.k2, 0.0);
    prm.delta = {0.0, 0.0};
    const PosteriorModel model(spec, x, PriorHyper{});
    std::vector<double> g(model.dimension());
    model.data_term_and_gradient(to_coordinates(spec, prm), g);
    const double along_shift = std::accumulate(g.begin(), g.begin() + spec.k1, 0.0);
    CHECK(std::abs(along_shift) < 1e-9);
}

TEST_CASE("basis functions without data support get prior-only gradient") {
    // 10 interior knots: B_1 lives on [0, 1/11); grid points start at 1/8.
    const ModelSpec spec{ModelKind::TvArch, 1, 0, 14, 14, 14};
    const std::vector<double> x{0.3, -1.2, 0.8, 2.0, -0.1, 0.4, 1.1, -0.7};
    std::mt19937_64 rng(1);
    const auto prm = random_params(spec, rng);
    const PosteriorModel model(spec, x, PriorHyper{});
    std::vector<double> g(model.dimension());
    model.potential_and_gradient(to_coordinates(spec, prm), g);
    const ParamLayout l(spec);
    CHECK(g[l.theta] == 0.0);
    CHECK(g[l.beta] == doctest::Approx(prm.beta[0] / 100.0).epsilon(1e-12));

    // A prefix fit on a longer horizon leaves the tail basis functions unconstrained by data.
    const PosteriorModel prefix(spec, x, PriorHyper{}, 40);
    prefix.potential_and_gradient(to_coordinates(spec, prm), g);
    CHECK(g[l.theta + spec.k2 - 1] == 0.0);
}

TEST_CASE("shifting all logits leaves the data term unchanged") {
    std::mt19937_64 rng(8);
    for (auto kind : {ModelKind::TvArch, ModelKind::TvGarch, ModelKind::TvIGarch}) {
        const ModelSpec spec = make_spec(kind, 1, kind == ModelKind::TvArch ? 0 : 2, 3);
        auto prm = random_params(spec, rng);
        const auto x = garch_like_data(spec, prm, 100, rng);
        const PosteriorModel model(spec, x, PriorHyper{});
        std::vector<double> g0(model.dimension()), g1(model.dimension());
        const double v0 = model.data_term_and_gradient(to_coordinates(spec, prm), g0);
        for (auto& d : prm.delta) d += 2.5;
        const double v1 = model.data_term_and_gradient(to_coordinates(spec, prm), g1);
        CHECK(v1 == doctest::Approx(v0).epsilon(1e-12));
        for (int i = 0; i < model.dimension(); ++i) CHECK(std::abs(g1[i] - g0[i]) < 1e-8 * (1 + std::abs(g0[i])));
        // The data gradient is orthogonal to the shift direction.
        const ParamLayout l(spec);
        const double along = std::accumulate(g0.begin() + l.delta, g0.begin() + l.delta + spec.num_weights() + 1, 0.0);
        CHECK(std::abs(along) < 1e-9 * (1 + std::abs(v0)));
    }
}

TEST_CASE("GARCH gradient without feedback reduces to the ARCH form") {
    // With eta = 0 every b_j vanishes, so the adjoint recursion collapses to
    // sum_i w_i d(sigma_i^2)/d(coordinate) with no lagged variance terms.
    const ModelSpec spec = make_spec(ModelKind::TvGarch, 1, 1, 3);
    std::mt19937_64 rng(21);
    auto prm = random_params(spec, rng);
    std::fill(prm.eta.begin(), prm.eta.end(), 0.0);
    const auto x = tvvol::testing::white_noise(150, 1.3, 4);
    const PosteriorModel model(spec, x, PriorHyper{});
    std::vector<double> g(model.dimension());
    model.data_term_and_gradient(to_coordinates(spec, prm), g);

    const BasisSet bases = make_bases(spec);
    const auto curves = build_curves(spec, prm, bases, 150);
    const auto m = softmax_weights(prm.delta);
    const int n = 150;
    std::vector<double> g_beta(spec.k1, 0.0), g_theta(spec.k2, 0.0);
    for (int t = 1; t <= n; ++t) {
        const double x2 = t >= 2 ? x[t - 2] * x[t - 2] : 0.0;
        const double var = curves.mu[t - 1] + curves.a[0][t - 1] * x2;
        const double w = 0.5 * (1.0 - x[t - 1] * x[t - 1] / var) / var;
        const auto b1 = bases.mu.eval(t / static_cast<double>(n));
        const auto b2 = bases.a.eval(t / static_cast<double>(n));
        for (int j = 0; j < spec.k1; ++j) g_beta[j] += w * std::exp(prm.beta[j]) * b1[j];
        for (int j = 0; j < spec.k2; ++j) g_theta[j] += w * m[0] * b2[j] * x2;
    }
    const ParamLayout l(spec);
    for (int j = 0; j < spec.k1; ++j) CHECK(g[l.beta + j] == doctest::Approx(g_beta[j]).epsilon(1e-10));
    for (int j = 0; j < spec.k2; ++j) CHECK(g[l.theta + j] == doctest::Approx(g_theta[j]).epsilon(1e-10));
    CHECK(g[l.log_sigma0] == 0.0);
}

TEST_CASE("invalid variances give an infinite potential") {
    const ModelSpec spec = make_spec(ModelKind::TvArch, 1, 0, 0);
    const auto x = tvvol::testing::white_noise(30, 1.0, 2);
    const PosteriorModel model(spec, x, PriorHyper{});
    ParamVector prm;
    prm.beta.assign(4, -50.0);
    prm.theta.assign(4, -1e6);  // outside the support, as during a leapfrog trajectory
    prm.delta = {0.0, 0.0};
    std::vector<double> g(model.dimension());
    CHECK(std::isinf(model.potential(to_coordinates(spec, prm))));
    CHECK_FALSE(model.gradient(to_coordinates(spec, prm), g));
}

TEST_CASE("gradient evaluation cost at n=1000" * doctest::skip(false)) {
    const ModelSpec spec = make_spec(ModelKind::TvGarch, 1, 1, 6);
    std::mt19937_64 rng(1);
    const auto prm = random_params(spec, rng);
    const auto x = tvvol::testing::white_noise(1000, 1.0, 1);
    const PosteriorModel model(spec, x, PriorHyper{});
    const auto c = to_coordinates(spec, prm);
    std::vector<double> g(model.dimension());
    const auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < 2000; ++r) model.gradient(c, g);
    const double us = std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0).count() / 2000;
    MESSAGE("gradient evaluation: " << us << " us");
    CHECK(us > 0.0);
}
