#pragma once

#include "tvvol/series.hpp"
#include "tvvol/volatility_models.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace tvvol {

/// Pre-sample convention for simulated GARCH paths.
enum class SimulationInit {
    /// sigma_0^2 = mu(0) / (1 - a(0) - b(0)); mu(0) for the integrated model.
    Stationary,
    /// sigma_0^2 = 0, the convention used by the likelihood's pre-sample.
    ZeroHistory,
};

/// True coefficient functions for a lag-one model. `b10` is ignored for
/// tvARCH and replaced by 1 - a10 for tviGARCH.
struct Scenario {
    std::string name;
    ModelKind kind = ModelKind::TvArch;
    std::function<double(double)> mu0;
    std::function<double(double)> a10;
    std::function<double(double)> b10;
    int n = 1000;
    std::uint64_t seed = 1;
    SimulationInit init = SimulationInit::Stationary;

    /// Checks the kind-specific constraint set on a 1001-point grid with
    /// 1e-9 slack. Throws std::invalid_argument on violation.
    void validate() const;

    [[nodiscard]] double b_at(double x) const;
    /// Truth on the grid i/n, i = 1..n, as coefficient curves.
    [[nodiscard]] CoefficientCurves true_curves() const;
};

/// Built-in scenarios: "arch1", "garch11", "igarch11".
[[nodiscard]] Scenario builtin_scenario(const std::string& name, int n, std::uint64_t seed);
[[nodiscard]] std::vector<std::string> builtin_scenario_names();

/// X_i = sigma_i * zeta_i with iid standard normal zeta, deterministic in the seed.
[[nodiscard]] SeriesData simulate(const Scenario& scenario);

}  // namespace tvvol
