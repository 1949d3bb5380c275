#pragma once

#include "tvvol/hmc.hpp"
#include "tvvol/volatility_models.hpp"

#include <span>
#include <string>
#include <vector>

namespace tvvol {

/**
 * Pointwise posterior summary of every coefficient curve. Curves are indexed
 * in ModelSpec::curve_names() order: mu, a_1..a_p, b_1..b_q.
 */
struct CurveSummary {
    std::vector<double> grid;
    std::vector<std::string> names;
    std::vector<std::vector<double>> mean;
    std::vector<std::vector<double>> lower;
    std::vector<std::vector<double>> upper;
    double level = 0.95;
    int p = 1;
    double sigma0_sq_mean = 0.0;  // zero for tvARCH
    std::size_t draws = 0;

    /// Posterior-mean curves in the layout variance_recursion expects.
    [[nodiscard]] CoefficientCurves mean_curves() const;
};

/// Nearest-rank (type 1) quantile of sorted values: element ceil(prob * N).
[[nodiscard]] double nearest_rank(std::span<const double> sorted, double prob);

/**
 * Posterior mean and central `level` band of each curve on the grid
 * i / samples.horizon, i = 1..n. n = 0 means the full horizon.
 */
[[nodiscard]] CurveSummary summarize_curves(const PosteriorSamples& samples, int n = 0,
                                            double level = 0.95);

/// Plug-in variance recursion with the posterior-mean curves and sigma_0^2.
[[nodiscard]] std::vector<double> fitted_variances(const ModelSpec& spec,
                                                   const CurveSummary& summary,
                                                   std::span<const double> data);

/// Mean of (X_i^2 - fitted_i)^2 over i = first_index..n (1-based).
[[nodiscard]] double amse(std::span<const double> data, std::span<const double> fitted,
                          int first_index = 1);

/// Mean of log(AMSE) across runs; throws std::invalid_argument on a
/// nonpositive entry.
[[nodiscard]] double amse_star(std::span<const double> values);

/// Share of grid points where truth lies inside the band of `curve`.
[[nodiscard]] double band_coverage(const CurveSummary& summary, std::size_t curve,
                                   std::span<const double> truth);

/**
 * Mixing diagnostic: for draw pairs (0,1), (2,3), ... the root mean square
 * over the grid of the difference between the two curves. One series per
 * coefficient curve.
 */
[[nodiscard]] std::vector<std::vector<double>> l2_deviation_trace(const PosteriorSamples& samples,
                                                                  int n = 0);

}  // namespace tvvol
