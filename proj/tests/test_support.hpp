#pragma once

#include "tvvol/simulator.hpp"
#include "tvvol/volatility_models.hpp"

#include <random>
#include <vector>

namespace tvvol::testing {

/// Random parameters inside the support of the prior. `logit_sd` controls how
/// extreme the softmax logits are.
inline ParamVector random_params(const ModelSpec& spec, std::mt19937_64& rng,
                                 double logit_sd = 1.0, double beta_mean = 0.0) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    ParamVector p;
    for (int j = 0; j < spec.k1; ++j) p.beta.push_back(beta_mean + 0.5 * normal(rng));
    for (int j = 0; j < spec.p * spec.k2; ++j) p.theta.push_back(unit(rng));
    for (int j = 0; j < spec.free_garch_curves() * spec.k3; ++j) p.eta.push_back(unit(rng));
    for (int l = 0; l <= spec.num_weights(); ++l) p.delta.push_back(logit_sd * normal(rng));
    p.sigma0_sq = std::exp(normal(rng));
    return p;
}

inline std::vector<double> white_noise(std::size_t n, double sd, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, sd);
    std::vector<double> x(n);
    for (auto& v : x) v = normal(rng);
    return x;
}

/// Simulated path of a built-in scenario as an owning vector.
inline std::vector<double> scenario_path(const std::string& name, int n, std::uint64_t seed) {
    const SeriesData sim = simulate(builtin_scenario(name, n, seed));
    return {sim.values().begin(), sim.values().end()};
}

inline ModelSpec random_spec(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> kind(0, 2);
    std::uniform_int_distribution<int> lag(1, 2);
    std::uniform_int_distribution<int> knots(0, 3);
    const auto k = static_cast<ModelKind>(kind(rng));
    const int p = lag(rng);
    const int q = k == ModelKind::TvArch ? 0 : lag(rng);
    ModelSpec spec{k, p, q, 4 + knots(rng), 4 + knots(rng), 4 + knots(rng)};
    spec.validate();
    return spec;
}

}  // namespace tvvol::testing
