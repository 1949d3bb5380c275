#pragma once

#include "tvvol/hmc.hpp"
#include "tvvol/likelihood.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace tvvol {

enum class Evidence { NotWorth, Positive, Strong, VeryStrong };

[[nodiscard]] std::string to_string(Evidence evidence);

/// Kass-Raftery category of |2 log B|: below 2, 2 to 6, 6 to 10, above 10.
[[nodiscard]] Evidence kass_raftery(double two_log_bf);

/// log N - logsumexp(-loglik): the harmonic-mean identity in log space.
[[nodiscard]] double log_harmonic_mean(std::span<const double> loglik);

struct MarginalEstimate {
    double log_marginal = 0.0;
    std::size_t draws = 0;
    /// Interquartile range of -loglik across draws; large values mean the
    /// harmonic mean is dominated by a few draws.
    double neg_loglik_iqr = 0.0;
};

/// Harmonic-mean log marginal likelihood of `data` (the series the samples
/// were fitted on). Needs at least 100 draws.
[[nodiscard]] MarginalEstimate log_marginal_harmonic(const PosteriorSamples& samples,
                                                     std::span<const double> data,
                                                     const PriorHyper& hyper = {});

/// Posterior-mean curves on i / samples.horizon, i = 1..n, and the mean sigma_0^2.
struct MeanFit {
    CoefficientCurves curves;
    double sigma0_sq = 0.0;
};

[[nodiscard]] MeanFit posterior_mean_fit(const PosteriorSamples& samples, int n);

struct PredictiveScore {
    double value = 0.0;
    std::vector<double> per_point;
    /// Holdout points whose log-density term fell below -50.
    std::size_t flagged = 0;
};

/**
 * Average predictive log-likelihood of the last m points,
 * (1/m) sum 1/2 (-X_i^2/s_i - log sqrt(s_i) - log 2 pi), with s_i from the
 * posterior-mean curves run through the whole series. The samples must come
 * from a fit on the first n - m points with horizon n.
 */
[[nodiscard]] PredictiveScore predictive_loglik(const PosteriorSamples& samples,
                                                std::span<const double> data, int m);

/**
 * Posterior mean of (X_n^2 - s_n)^2 where s_n comes from each draw's curves
 * and the recursion on the first n - 1 observations. The samples must come
 * from a fit on those n - 1 points with horizon at least n.
 */
[[nodiscard]] double one_step_forecast_mse(const PosteriorSamples& samples,
                                           std::span<const double> data);

/// Distinct cut points drawn uniformly from the middle 80% of 1..n, sorted.
[[nodiscard]] std::vector<int> forecast_cut_points(int n, int count, std::uint64_t seed);

struct ComparisonReport {
    std::string model1;
    std::string model2;
    MarginalEstimate marginal1;
    MarginalEstimate marginal2;
    double two_log_bf = 0.0;
    Evidence label = Evidence::NotWorth;
    /// Holdout size -> average predictive log-likelihood for each model.
    std::map<int, std::pair<PredictiveScore, PredictiveScore>> predictive;
    bool has_forecast = false;
    double one_step_mse1 = 0.0;
    double one_step_mse2 = 0.0;
};

/// Fills the Bayes factor fields from two marginal estimates.
[[nodiscard]] ComparisonReport make_report(std::string model1, const MarginalEstimate& m1,
                                           std::string model2, const MarginalEstimate& m2);

}  // namespace tvvol
