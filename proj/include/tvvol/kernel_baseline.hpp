#pragma once

#include "tvvol/volatility_models.hpp"

#include <span>
#include <string>
#include <vector>

namespace tvvol {

/// 0.75 (1 - x^2) on |x| <= 1, zero elsewhere.
[[nodiscard]] double epanechnikov(double x) noexcept;

enum class FitStatus { Converged, Stalled, Failed };

[[nodiscard]] std::string to_string(FitStatus status);

/// Optimizer outcome at one evaluation point.
struct PointFit {
    FitStatus status = FitStatus::Converged;
    int iterations = 0;
    double objective = 0.0;
    double projected_gradient = 0.0;
};

/**
 * Constant-parameter model: mu, a_1..a_p, b_1..b_q and the pre-sample
 * variance. For the integrated model b_q is stored already resolved
 * (b_q = 1 - sum of the rest).
 */
struct ConstantParams {
    double mu = 1.0;
    std::vector<double> a;
    std::vector<double> b;
    double sigma0_sq = 1.0;
};

struct OptimizerOptions {
    int max_iterations = 200;
    double gradient_tolerance = 1e-8;
};

/**
 * Weighted Gaussian quasi-likelihood fit of a constant-parameter model.
 *
 * Minimizes sum_i w_i (log s_i + X_i^2 / s_i) / (2 sum_i w_i) over the
 * likelihood range of the model, where s_i follows the constant-parameter
 * recursion on the whole series. `weights` has one entry per observation;
 * an empty span means uniform weights.
 */
[[nodiscard]] ConstantParams weighted_fit(const ModelSpec& spec, std::span<const double> data,
                                          std::span<const double> weights,
                                          const ConstantParams& start, PointFit* report = nullptr,
                                          const OptimizerOptions& options = {});

/// The objective minimised by weighted_fit, evaluated at `params`.
[[nodiscard]] double weighted_objective(const ModelSpec& spec, std::span<const double> data,
                                        std::span<const double> weights,
                                        const ConstantParams& params);

/// Conditional variances of the constant model on the series.
[[nodiscard]] std::vector<double> constant_variances(const ModelSpec& spec,
                                                     const ConstantParams& params,
                                                     std::span<const double> data);

/// Time-constant Gaussian MLE. Throws std::invalid_argument when the series is
/// shorter than 10 (p + q + 1) and std::runtime_error when no start converges.
[[nodiscard]] ConstantParams constant_mle(const ModelSpec& spec, std::span<const double> data);

/// The constant MLE expanded to curves on the grid i/n, i = 1..n.
[[nodiscard]] CoefficientCurves constant_fit(const ModelSpec& spec, std::span<const double> data);

[[nodiscard]] CoefficientCurves constant_curves(const ModelSpec& spec, const ConstantParams& params,
                                                std::span<const double> grid);

struct KernelOptions {
    /// Replace the Epanechnikov taper by equal weights on every observation.
    bool uniform_kernel = false;
    OptimizerOptions optimizer;
};

struct KernelFit {
    std::vector<double> grid;
    CoefficientCurves curves;
    std::vector<double> sigma0_sq;  // local pre-sample variance per grid point
    double bandwidth = 0.0;
    std::vector<PointFit> objective_trace;

    /// Pre-sample variance for plug-in recursions: the local estimate at the
    /// earliest grid point.
    [[nodiscard]] double initial_variance() const { return sigma0_sq.front(); }
};

/// Kernel weights K((t - i/n) / h) for i = 1..n.
[[nodiscard]] std::vector<double> kernel_weights(double t, double bandwidth, int n);

/**
 * Local constant M-estimator at each grid point t, warm-started from the
 * time-constant fit. Points where the optimizer fails take the value of the
 * nearest converged neighbour and are reported through warn().
 */
[[nodiscard]] KernelFit kernel_fit(const ModelSpec& spec, std::span<const double> data,
                                   double bandwidth, std::span<const double> grid,
                                   const KernelOptions& options = {});

/// Grid {1/n, ..., 1}.
[[nodiscard]] std::vector<double> unit_grid(int n);

[[nodiscard]] std::vector<double> default_bandwidths();

/// Score of one bandwidth under leave-future-out cross validation: average
/// one-step Gaussian log density of the scored observations.
[[nodiscard]] double bandwidth_cv_score(const ModelSpec& spec, std::span<const double> data,
                                        double bandwidth, double max_bandwidth);

/// Candidate with the best leave-future-out score; ties go to the larger
/// bandwidth.
[[nodiscard]] double select_bandwidth(const ModelSpec& spec, std::span<const double> data,
                                      std::span<const double> candidates);

}  // namespace tvvol
