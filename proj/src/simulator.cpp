#include "tvvol/simulator.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace tvvol {

double Scenario::b_at(double x) const {
    switch (kind) {
        case ModelKind::TvArch: return 0.0;
        case ModelKind::TvGarch: return b10(x);
        case ModelKind::TvIGarch: return 1.0 - a10(x);
    }
    return 0.0;
}

void Scenario::validate() const {
    if (n < static_cast<int>(SeriesData::kMinLength)) {
        throw std::invalid_argument("scenario length must be at least 20");
    }
    if (!mu0 || !a10 || (kind == ModelKind::TvGarch && !b10)) {
        throw std::invalid_argument("scenario '" + name + "' is missing a coefficient function");
    }
    constexpr double kSlack = 1e-9;
    constexpr int kGrid = 1000;
    for (int i = 0; i <= kGrid; ++i) {
        const double x = static_cast<double>(i) / kGrid;
        const double mu = mu0(x);
        const double a = a10(x);
        const double b = b_at(x);
        bool ok = mu >= -kSlack && a >= -kSlack && a <= 1.0 + kSlack && b >= -kSlack;
        if (kind == ModelKind::TvIGarch) {
            ok = ok && std::abs(a + b - 1.0) <= kSlack;
        } else {
            ok = ok && a + b < 1.0 + kSlack;
        }
        if (!ok) {
            throw std::invalid_argument("scenario '" + name + "' violates the " + to_string(kind) +
                                        " constraints at x=" + std::to_string(x));
        }
    }
}

CoefficientCurves Scenario::true_curves() const {
    CoefficientCurves c;
    c.grid.resize(n);
    c.mu.resize(n);
    c.a.assign(1, std::vector<double>(n));
    if (kind != ModelKind::TvArch) c.b.assign(1, std::vector<double>(n));
    for (int i = 0; i < n; ++i) {
        const double x = static_cast<double>(i + 1) / n;
        c.grid[i] = x;
        c.mu[i] = mu0(x);
        c.a[0][i] = a10(x);
        if (kind != ModelKind::TvArch) c.b[0][i] = b_at(x);
    }
    return c;
}

Scenario builtin_scenario(const std::string& name, int n, std::uint64_t seed) {
    using std::numbers::pi;
    Scenario s;
    s.name = name;
    s.n = n;
    s.seed = seed;
    if (name == "arch1") {
        s.kind = ModelKind::TvArch;
        s.mu0 = [](double x) { return 10.0 * std::exp(-(x - 0.5) * (x - 0.5) / 0.1); };
        s.a10 = [](double x) { return 0.4 * (x - 0.15) * (x - 0.15) + 0.1; };
    } else if (name == "garch11") {
        s.kind = ModelKind::TvGarch;
        s.mu0 = [](double x) { return 1.0 - 0.8 * std::sin(pi * x / 2.0); };
        s.a10 = [](double x) { return 0.5 - (x - 0.3) * (x - 0.3); };
        s.b10 = [](double x) { return 0.4 - 0.5 * (x - 0.4) * (x - 0.4); };
    } else if (name == "igarch11") {
        s.kind = ModelKind::TvIGarch;
        s.mu0 = [](double x) { return std::exp(-(x - 0.5) * (x - 0.5) / 0.1); };
        s.a10 = [](double x) { return 0.4 * (x - 1.0) * (x - 1.0) + 0.1; };
    } else {
        throw std::invalid_argument("unknown scenario '" + name +
                                    "' (expected arch1, garch11 or igarch11)");
    }
    s.validate();
    return s;
}

std::vector<std::string> builtin_scenario_names() { return {"arch1", "garch11", "igarch11"}; }

SeriesData simulate(const Scenario& scenario) {
    scenario.validate();
    std::mt19937_64 rng(scenario.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    double prev_var = 0.0;
    if (scenario.kind != ModelKind::TvArch && scenario.init == SimulationInit::Stationary) {
        const double persistence = scenario.a10(0.0) + scenario.b_at(0.0);
        prev_var = scenario.kind == ModelKind::TvIGarch ? scenario.mu0(0.0)
                                                        : scenario.mu0(0.0) / (1.0 - persistence);
    }
    double prev_sq = 0.0;
    std::vector<double> x(scenario.n);
    for (int i = 0; i < scenario.n; ++i) {
        const double t = static_cast<double>(i + 1) / scenario.n;
        const double var =
            scenario.mu0(t) + scenario.a10(t) * prev_sq + scenario.b_at(t) * prev_var;
        x[i] = std::sqrt(var) * normal(rng);
        prev_sq = x[i] * x[i];
        prev_var = var;
    }
    return SeriesData(std::move(x), SeriesSource::Simulated, 1.0,
                      {{"scenario", scenario.name},
                       {"n", std::to_string(scenario.n)},
                       {"seed", std::to_string(scenario.seed)}});
}

}  // namespace tvvol
