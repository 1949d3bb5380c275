#pragma once

#include "tvvol/likelihood.hpp"
#include "tvvol/volatility_models.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace tvvol {

/// How coordinates restricted to [0,1] are kept in range.
enum class BoundaryMode {
    /// Clamp the end-of-trajectory proposal to the nearest boundary.
    Clamp,
    /// Reflect position and negate momentum at every leapfrog step.
    Reflect,
};

struct HmcConfig {
    int leapfrog_steps = 30;
    double initial_step_size = 1e-3;
    int total_iters = 10000;
    int burn_in = 5000;
    int adapt_window = 100;
    double target_accept_low = 0.6;
    double target_accept_high = 0.8;
    double adapt_factor = 1.1;
    std::uint64_t seed = 1;
    BoundaryMode boundary = BoundaryMode::Clamp;
    bool adapt = true;

    void validate() const;
};

/// A differentiable potential (negative log density) over R^d. Coordinates
/// flagged in `bounded` live in [0,1]. Both callbacks return +inf / false
/// when the position is outside the support of the density.
struct HmcTarget {
    int dimension = 0;
    std::function<double(std::span<const double>, std::span<double>)> value_and_gradient;
    std::function<bool(std::span<const double>, std::span<double>)> gradient;
    std::vector<char> bounded;
};

[[nodiscard]] HmcTarget make_target(const PosteriorModel& model);

/// Raw chain output in flat coordinates.
struct ChainResult {
    std::vector<std::vector<double>> draws;
    std::vector<double> accept_rate_trace;
    std::vector<double> step_size_trace;
    double accept_rate = 0.0;  // over retained iterations
    double final_step_size = 0.0;
    std::uint64_t seed = 0;
};

/**
 * Runs `steps` leapfrog steps in place. `grad` must hold the gradient at the
 * starting position and is left holding the gradient at the end position.
 * Returns false if the trajectory left the support of the potential.
 * In Clamp mode the position is not modified here; the caller clamps the
 * final proposal.
 */
bool leapfrog(const HmcTarget& target, std::span<double> position, std::span<double> momentum,
              std::span<double> grad, double step_size, int steps, BoundaryMode mode);

/// Generic HMC with identity mass matrix and windowed step-size adaptation
/// during burn-in. Throws std::runtime_error if the potential is not finite
/// at `init`.
[[nodiscard]] ChainResult run_hmc(const HmcTarget& target, std::vector<double> init,
                                  const HmcConfig& config);

struct PosteriorSamples {
    ModelSpec spec;
    int horizon = 0;  // curves are evaluated on i/horizon
    std::vector<ParamVector> draws;
    std::vector<double> accept_rate_trace;
    std::vector<double> step_size_trace;
    double accept_rate = 0.0;
    std::uint64_t seed = 0;
};

/// beta = log(0.5 * var(X)), theta = eta = 0.5, delta = 0, sigma0^2 = var(X).
/// The sample variance is floored at 1e-8 (with a warning).
[[nodiscard]] ParamVector default_init(const ModelSpec& spec, std::span<const double> data);

/// Posterior sampling for a model on `data`. A horizon larger than the data
/// length fits the prefix on the time scale of the longer series.
[[nodiscard]] PosteriorSamples run_chain(const ModelSpec& spec, std::span<const double> data,
                                         const PriorHyper& hyper, const HmcConfig& config,
                                         const std::optional<ParamVector>& init = std::nullopt,
                                         int horizon = 0);

/// Independent chains with seeds config.seed + c, run in parallel.
[[nodiscard]] std::vector<PosteriorSamples> run_chains(const ModelSpec& spec,
                                                       std::span<const double> data,
                                                       const PriorHyper& hyper,
                                                       const HmcConfig& config, int chains,
                                                       int horizon = 0);

/// Concatenates the draws of several chains (for summaries only).
[[nodiscard]] PosteriorSamples pool_chains(const std::vector<PosteriorSamples>& chains);

}  // namespace tvvol
