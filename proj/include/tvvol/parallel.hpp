#pragma once

#include <cstddef>
#include <functional>
#include <string>

namespace tvvol {

/// Worker count: hardware concurrency, capped by the TVVOL_THREADS
/// environment variable when set.
[[nodiscard]] unsigned worker_count();

/// Runs body(i) for i in [0, count) on up to worker_count() threads. Each
/// index runs exactly once; the first exception thrown is rethrown after all
/// workers finish.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

/// Diagnostic sink for non-fatal conditions (stderr by default).
void warn(const std::string& message);
void set_warnings_enabled(bool enabled);

}  // namespace tvvol
