#pragma once

#include "tvvol/volatility_models.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace tvvol {

enum class SuiteLevel { Fast, Full };

[[nodiscard]] SuiteLevel parse_suite_level(const std::string& name);
[[nodiscard]] std::string to_string(SuiteLevel level);

/// One acceptance check. `status` is "pass", "fail" or "skipped".
struct CheckResult {
    int criterion = 0;
    std::string name;
    std::string status;
    double value = 0.0;
    double tolerance = 0.0;
    std::uint64_t seed = 0;
    std::string detail;

    [[nodiscard]] bool passed() const { return status != "fail"; }
};

/// Contains no timings, so repeated runs with the same (level, seed) produce
/// the same JSON.
struct SuiteReport {
    SuiteLevel level = SuiteLevel::Fast;
    std::uint64_t seed = 1;
    std::vector<CheckResult> checks;

    [[nodiscard]] bool passed() const;
    [[nodiscard]] std::string to_json() const;
};

struct SuiteOptions {
    /// Path of the tvvol executable. Empty runs the pipeline checks through
    /// cli_dispatch in this process.
    std::string cli_path;
    /// Scratch directory for the pipeline checks; empty means a fresh
    /// directory under the system temp path.
    std::string work_dir;
    /// Called after each check with its result and wall time in seconds.
    std::function<void(const CheckResult&, double)> on_check;
};

[[nodiscard]] SuiteReport run_suite(SuiteLevel level, std::uint64_t seed,
                                    const SuiteOptions& options = {});

/// Deliberate defects for testing that the checks can fail.
enum class GradientMutation { None, FlipDeltaSign };

struct GradientCheck {
    int trials = 0;
    int coordinates = 0;
    int failures = 0;
    /// Largest |analytic - fd| / max(1e-6, 1e-4 |fd|); passing needs <= 1.
    double worst_ratio = 0.0;
    std::string worst;
};

/**
 * Analytic gradient against central differences (step 1e-5) on random
 * (model, params, data) triples with n observations. Trials cycle through
 * the model kinds unless `kind` is given. Data are drawn from the model
 * itself so the variances stay in a realistic range.
 */
[[nodiscard]] GradientCheck gradient_check(std::optional<ModelKind> kind, int n, int trials,
                                           std::uint64_t seed,
                                           GradientMutation mutation = GradientMutation::None);

/// Acceptance criterion 1: 100 triples at n = 80, finishing within a minute.
[[nodiscard]] CheckResult gradient_correctness_check(std::uint64_t seed,
                                                     GradientMutation mutation = GradientMutation::None);

}  // namespace tvvol
