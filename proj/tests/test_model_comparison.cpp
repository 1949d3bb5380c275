#include "doctest.h"

#include "test_support.hpp"
#include "tvvol/model_comparison.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

using namespace tvvol;

namespace {

PosteriorSamples samples_of(const ModelSpec& spec, int horizon, std::vector<ParamVector> draws) {
    PosteriorSamples s;
    s.spec = spec;
    s.horizon = horizon;
    s.draws = std::move(draws);
    return s;
}

/// mu = 1, a = 0: unit conditional variances everywhere.
ParamVector unit_variance(const ModelSpec& spec) {
    ParamVector p;
    p.beta.assign(spec.k1, 0.0);
    p.theta.assign(spec.p * spec.k2, 0.0);
    p.eta.assign(spec.free_garch_curves() * spec.k3, 0.0);
    p.delta.assign(spec.num_weights() + 1, 0.0);
    return p;
}

}  // namespace

TEST_CASE("Kass-Raftery labels") {
    CHECK(kass_raftery(0.0) == Evidence::NotWorth);
    CHECK(kass_raftery(1.99) == Evidence::NotWorth);
    CHECK(kass_raftery(2.0) == Evidence::Positive);
    CHECK(kass_raftery(-3.0) == Evidence::Positive);
    CHECK(kass_raftery(6.0) == Evidence::Strong);
    CHECK(kass_raftery(10.0) == Evidence::Strong);
    CHECK(kass_raftery(10.01) == Evidence::VeryStrong);
    CHECK(kass_raftery(-24.14) == Evidence::VeryStrong);
    CHECK(to_string(Evidence::Positive) == "positive");
}

TEST_CASE("harmonic-mean identity") {
    const std::vector<double> same(50, -123.5);
    CHECK(log_harmonic_mean(same) == doctest::Approx(-123.5).epsilon(1e-15));
    const std::vector<double> two{0.0, std::log(2.0)};
    CHECK(log_harmonic_mean(two) == doctest::Approx(std::log(4.0 / 3.0)).epsilon(1e-14));
    // Large magnitudes must not overflow.
    const std::vector<double> big{-5000.0, -5001.0, -4999.0};
    CHECK(std::isfinite(log_harmonic_mean(big)));

    std::vector<double> random = testing::white_noise(500, 30.0, 2);
    const double base = log_harmonic_mean(random);
    std::mt19937_64 rng(1);
    for (int k = 0; k < 5; ++k) {
        std::shuffle(random.begin(), random.end(), rng);
        CHECK(log_harmonic_mean(random) == base);
    }
}

TEST_CASE("marginal estimates from samples") {
    const ModelSpec spec = make_spec(ModelKind::TvGarch, 1, 1, 4);
    const auto data = testing::scenario_path("garch11", 150, 3);
    std::mt19937_64 rng(2);
    std::vector<ParamVector> draws;
    for (int d = 0; d < 120; ++d) draws.push_back(testing::random_params(spec, rng, 0.5, 0.5));
    const auto samples = samples_of(spec, 150, draws);
    const MarginalEstimate m = log_marginal_harmonic(samples, data);
    CHECK(std::isfinite(m.log_marginal));
    CHECK(m.draws == 120);
    CHECK(m.neg_loglik_iqr >= 0.0);

    const ComparisonReport self = make_report("garch", m, "garch", m);
    CHECK(self.two_log_bf == 0.0);
    CHECK(self.label == Evidence::NotWorth);

    auto shuffled = draws;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(log_marginal_harmonic(samples_of(spec, 150, shuffled), data).log_marginal == m.log_marginal);

    draws.resize(99);
    CHECK_THROWS_AS(log_marginal_harmonic(samples_of(spec, 150, draws), data), std::invalid_argument);
}

TEST_CASE("predictive log-likelihood") {
    const ModelSpec spec = make_spec(ModelKind::TvArch, 1, 0, 4);
    const auto samples = samples_of(spec, 40, {unit_variance(spec)});
    std::vector<double> data = testing::white_noise(40, 1.0, 6);
    std::fill(data.end() - 5, data.end(), 0.0);
    const double expected = -0.5 * std::log(2.0 * std::numbers::pi);
    const PredictiveScore s = predictive_loglik(samples, data, 5);
    CHECK(s.value == doctest::Approx(expected).epsilon(1e-14));
    CHECK(s.value == doctest::Approx(-0.9189385).epsilon(1e-7));
    CHECK(s.flagged == 0);

    data.back() = 1.5;
    const PredictiveScore one = predictive_loglik(samples, data, 1);
    CHECK(one.value == doctest::Approx(0.5 * (-2.25 - std::log(2.0 * std::numbers::pi))).epsilon(1e-14));

    data.back() = 12.0;
    CHECK(predictive_loglik(samples, data, 1).flagged == 1);

    CHECK_THROWS_AS(predictive_loglik(samples, data, 40), std::invalid_argument);
    CHECK_THROWS_AS(predictive_loglik(samples, data, 0), std::invalid_argument);
    const auto short_horizon = samples_of(spec, 39, {unit_variance(spec)});
    CHECK_THROWS_AS(predictive_loglik(short_horizon, data, 5), std::invalid_argument);
}

TEST_CASE("corrupting the fit lowers the predictive score") {
    // Posterior fits on a prefix, then one common noise vector added to beta
    // in every draw. The noise is centred on the exp scale so that it changes
    // the shape of mu without inflating its level on average.
    const ModelSpec spec = make_spec(ModelKind::TvArch, 1, 0, 4);
    const int n = 200, m = 20;
    double clean = 0.0, noisy = 0.0;
    for (int seed = 1; seed <= 8; ++seed) {
        const auto data = testing::scenario_path("arch1", n, 40 + seed);
        HmcConfig cfg;
        cfg.total_iters = 3000;
        cfg.burn_in = 1500;
        cfg.initial_step_size = 0.02;
        cfg.seed = seed;
        const auto prefix = std::span<const double>(data).first(n - m);
        PosteriorSamples fit = run_chain(spec, prefix, PriorHyper{}, cfg, std::nullopt, n);
        clean += predictive_loglik(fit, data, m).value;
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> noise(-0.5, 1.0);
        std::vector<double> shift(spec.k1);
        for (double& v : shift) v = noise(rng);
        for (auto& d : fit.draws) {
            for (int j = 0; j < spec.k1; ++j) d.beta[j] += shift[j];
        }
        noisy += predictive_loglik(fit, data, m).value;
    }
    CHECK(noisy < clean);
}

TEST_CASE("one-step forecast MSE") {
    const ModelSpec spec = make_spec(ModelKind::TvGarch, 1, 1, 4);
    std::mt19937_64 rng(8);
    const ParamVector p = testing::random_params(spec, rng);
    const auto data = testing::white_noise(60, 1.0, 3);
    const auto one = samples_of(spec, 60, {p, p});
    const auto curves = build_curves(spec, p, make_bases(spec), 60);
    const auto var = variance_recursion(spec, curves, data, p.sigma0_sq);
    const double err = data[59] * data[59] - var[59];
    CHECK(one_step_forecast_mse(one, data) == doctest::Approx(err * err).epsilon(1e-13));

    std::vector<double> zero_last = data;
    zero_last.back() = 0.0;
    const ParamVector q = testing::random_params(spec, rng);
    const auto two = samples_of(spec, 60, {p, q});
    const auto vq = variance_recursion(spec, build_curves(spec, q, make_bases(spec), 60), zero_last,
                                       q.sigma0_sq);
    const auto vp = variance_recursion(spec, curves, zero_last, p.sigma0_sq);
    CHECK(one_step_forecast_mse(two, zero_last) ==
          doctest::Approx(0.5 * (vp[59] * vp[59] + vq[59] * vq[59])).epsilon(1e-13));

    const auto short_horizon = samples_of(spec, 59, {p});
    CHECK_THROWS_AS(one_step_forecast_mse(short_horizon, data), std::invalid_argument);
}

TEST_CASE("forecast cut points") {
    const auto cuts = forecast_cut_points(200, 15, 4);
    REQUIRE(cuts.size() == 15);
    CHECK(std::is_sorted(cuts.begin(), cuts.end()));
    CHECK(std::adjacent_find(cuts.begin(), cuts.end()) == cuts.end());
    for (int c : cuts) {
        CHECK(c >= 20);
        CHECK(c <= 180);
    }
    CHECK(forecast_cut_points(200, 15, 4) == cuts);
    CHECK(forecast_cut_points(200, 15, 5) != cuts);
    CHECK_THROWS_AS(forecast_cut_points(10, 15, 1), std::invalid_argument);
}
