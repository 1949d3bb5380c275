#include "tvvol/model_comparison.hpp"

#include "tvvol/inference_summaries.hpp"
#include "tvvol/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

namespace tvvol {

std::string to_string(Evidence evidence) {
    switch (evidence) {
        case Evidence::NotWorth: return "not worth more than a bare mention";
        case Evidence::Positive: return "positive";
        case Evidence::Strong: return "strong";
        case Evidence::VeryStrong: return "very strong";
    }
    return "unknown";
}

Evidence kass_raftery(double two_log_bf) {
    const double v = std::abs(two_log_bf);
    if (std::isnan(v)) throw std::invalid_argument("Bayes factor is NaN");
    if (v < 2.0) return Evidence::NotWorth;
    if (v < 6.0) return Evidence::Positive;
    if (v <= 10.0) return Evidence::Strong;
    return Evidence::VeryStrong;
}

double log_harmonic_mean(std::span<const double> loglik) {
    if (loglik.empty()) throw std::invalid_argument("harmonic mean of no draws");
    // Sorted summation makes the estimate exactly invariant to draw order.
    std::vector<double> neg(loglik.size());
    std::transform(loglik.begin(), loglik.end(), neg.begin(), [](double l) { return -l; });
    std::sort(neg.begin(), neg.end());
    const double top = neg.back();
    double sum = 0.0;
    for (double v : neg) sum += std::exp(v - top);
    return std::log(static_cast<double>(loglik.size())) - (top + std::log(sum));
}

MarginalEstimate log_marginal_harmonic(const PosteriorSamples& samples, std::span<const double> data,
                                       const PriorHyper& hyper) {
    if (samples.draws.size() < 100) {
        throw std::invalid_argument("harmonic-mean estimate needs at least 100 draws");
    }
    const PosteriorModel model(samples.spec, data, hyper, samples.horizon);
    std::vector<double> loglik(samples.draws.size());
    parallel_for(samples.draws.size(), [&](std::size_t d) {
        loglik[d] = model.log_likelihood(to_coordinates(samples.spec, samples.draws[d]));
    });
    MarginalEstimate e;
    e.log_marginal = log_harmonic_mean(loglik);
    e.draws = loglik.size();
    std::vector<double> neg(loglik.size());
    std::transform(loglik.begin(), loglik.end(), neg.begin(), [](double l) { return -l; });
    std::sort(neg.begin(), neg.end());
    e.neg_loglik_iqr = nearest_rank(neg, 0.75) - nearest_rank(neg, 0.25);
    return e;
}

MeanFit posterior_mean_fit(const PosteriorSamples& samples, int n) {
    if (samples.draws.empty()) throw std::invalid_argument("no posterior draws");
    if (n < 1 || n > samples.horizon) throw std::invalid_argument("grid exceeds the fitted horizon");
    const ModelSpec& spec = samples.spec;
    const CurveDesigns designs = make_designs(make_bases(spec), n, samples.horizon);
    MeanFit fit;
    fit.curves.grid = designs.grid;
    fit.curves.mu.assign(n, 0.0);
    fit.curves.a.assign(spec.p, std::vector<double>(n, 0.0));
    fit.curves.b.assign(spec.q, std::vector<double>(n, 0.0));
    const double w = 1.0 / static_cast<double>(samples.draws.size());
    for (const ParamVector& d : samples.draws) {
        const CoefficientCurves c = build_curves(spec, d, designs);
        for (int i = 0; i < n; ++i) {
            fit.curves.mu[i] += w * c.mu[i];
            for (int k = 0; k < spec.p; ++k) fit.curves.a[k][i] += w * c.a[k][i];
            for (int j = 0; j < spec.q; ++j) fit.curves.b[j][i] += w * c.b[j][i];
        }
        if (spec.has_garch_terms()) fit.sigma0_sq += w * d.sigma0_sq;
    }
    return fit;
}

PredictiveScore predictive_loglik(const PosteriorSamples& samples, std::span<const double> data,
                                  int m) {
    const int n = static_cast<int>(data.size());
    if (m <= 0 || m >= n) throw std::invalid_argument("holdout size must satisfy 0 < m < n");
    if (samples.horizon != n) {
        throw std::invalid_argument("predictive fit must use the full series length as horizon");
    }
    const MeanFit fit = posterior_mean_fit(samples, n);
    const std::vector<double> var = variance_recursion(samples.spec, fit.curves, data, fit.sigma0_sq);
    PredictiveScore score;
    for (int i = n - m; i < n; ++i) {
        // Literal form of the score: the log term uses the standard deviation.
        const double term = 0.5 * (-data[i] * data[i] / var[i] - 0.5 * std::log(var[i]) -
                                   std::log(2.0 * std::numbers::pi));
        score.per_point.push_back(term);
        if (term < -50.0) ++score.flagged;
    }
    score.value = std::accumulate(score.per_point.begin(), score.per_point.end(), 0.0) / m;
    return score;
}

double one_step_forecast_mse(const PosteriorSamples& samples, std::span<const double> data) {
    const ModelSpec& spec = samples.spec;
    const int n = static_cast<int>(data.size());
    if (n < spec.p + 2) throw std::invalid_argument("forecast needs at least p + 2 observations");
    if (samples.draws.empty()) throw std::invalid_argument("no posterior draws");
    if (samples.horizon < n) throw std::invalid_argument("fitted horizon does not reach the forecast point");
    const CurveDesigns designs = make_designs(make_bases(spec), n, samples.horizon);
    std::vector<double> err(samples.draws.size());
    const double target = data[n - 1] * data[n - 1];
    parallel_for(samples.draws.size(), [&](std::size_t d) {
        const CoefficientCurves c = build_curves(spec, samples.draws[d], designs);
        const std::vector<double> var = variance_recursion(spec, c, data, samples.draws[d].sigma0_sq);
        err[d] = (target - var[n - 1]) * (target - var[n - 1]);
    });
    return std::accumulate(err.begin(), err.end(), 0.0) / static_cast<double>(err.size());
}

std::vector<int> forecast_cut_points(int n, int count, std::uint64_t seed) {
    const int lo = static_cast<int>(std::ceil(0.1 * n));
    const int hi = static_cast<int>(std::floor(0.9 * n));
    if (count < 1 || hi - lo + 1 < count) {
        throw std::invalid_argument("not enough cut points in the middle 80% of the series");
    }
    std::vector<int> pool(hi - lo + 1);
    std::iota(pool.begin(), pool.end(), lo);
    std::mt19937_64 rng(seed);
    // Partial Fisher-Yates: the first `count` slots end up a uniform sample.
    for (int i = 0; i < count; ++i) {
        std::uniform_int_distribution<int> pick(i, static_cast<int>(pool.size()) - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    std::vector<int> cuts(pool.begin(), pool.begin() + count);
    std::sort(cuts.begin(), cuts.end());
    return cuts;
}

ComparisonReport make_report(std::string model1, const MarginalEstimate& m1, std::string model2,
                             const MarginalEstimate& m2) {
    ComparisonReport r;
    r.model1 = std::move(model1);
    r.model2 = std::move(model2);
    r.marginal1 = m1;
    r.marginal2 = m2;
    r.two_log_bf = 2.0 * (m1.log_marginal - m2.log_marginal);
    r.label = kass_raftery(r.two_log_bf);
    return r;
}

}  // namespace tvvol
