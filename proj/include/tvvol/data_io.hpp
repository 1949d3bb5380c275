#pragma once

#include "tvvol/hmc.hpp"
#include "tvvol/likelihood.hpp"
#include "tvvol/series.hpp"
#include "tvvol/volatility_models.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tvvol {

/// Unreadable input: missing file, bad schema, unparsable or invalid values.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A CSV file with a required header row. Cells are kept as text.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Index of a header column, or -1.
    [[nodiscard]] int find_column(std::string_view name) const;
};

/// Comma-separated, optional surrounding whitespace, no quoting. Rows must
/// have as many cells as the header. Blank lines are skipped.
[[nodiscard]] CsvTable read_csv(const std::string& path);

/// Shortest decimal form that parses back to the same double.
[[nodiscard]] std::string format_double(double value);
/// Strict parse of a whole cell; throws DataError naming `where`.
[[nodiscard]] double parse_double(std::string_view text, const std::string& where);

/**
 * Log returns of a price column, Y_i = log P_i - log P_{i-1}, times `scale`.
 * With last_n only the most recent last_n returns are kept.
 */
[[nodiscard]] SeriesData load_prices(const std::string& path, const std::string& column = "close",
                                     std::optional<std::size_t> last_n = std::nullopt,
                                     double scale = 100.0);

/// A return column used as is (times `scale`).
[[nodiscard]] SeriesData load_returns(const std::string& path, const std::string& column = "return",
                                      std::optional<std::size_t> last_n = std::nullopt,
                                      double scale = 1.0);

/// Where a series comes from and how to read it.
struct DataOptions {
    std::string path;
    /// "auto" picks prices when a `close` column exists, returns otherwise.
    std::string format = "auto";
    /// Empty means the format's default column.
    std::string column;
    std::optional<std::size_t> last_n;
    /// Unset means 100 for prices and 1 for returns.
    std::optional<double> scale;
};

[[nodiscard]] SeriesData load_series(const DataOptions& options);

/// Two columns `index,return` with index 1..n, full round-trip precision.
void write_series_csv(const std::string& path, std::span<const double> values);

/**
 * Everything a run needs besides the data. Knot counts left unset resolve
 * to auto_interior_knots(n); q unset means 0 for tvARCH and 1 otherwise.
 */
struct RunConfig {
    ModelKind kind = ModelKind::TvArch;
    int p = 1;
    std::optional<int> q;
    std::optional<int> knots;
    std::optional<int> knots_mu;
    std::optional<int> knots_a;
    std::optional<int> knots_b;
    HmcConfig hmc;
    PriorHyper hyper;
    DataOptions data;
    std::string method = "bayes";
    /// Unset means cross-validated over default_bandwidths().
    std::optional<double> bandwidth;
    double level = 0.95;
    int chains = 1;

    /// Model spec for a series of length n.
    [[nodiscard]] ModelSpec resolve_spec(int n) const;
};

/// Pretty-printed JSON of the whole config, keys in a fixed order.
[[nodiscard]] std::string config_to_json(const RunConfig& config);

/// Overlays the keys present in a JSON document onto `base`. Unknown keys
/// are rejected with std::invalid_argument.
[[nodiscard]] RunConfig config_from_json(const std::string& text, RunConfig base = {});

[[nodiscard]] RunConfig load_config(const std::string& path, RunConfig base = {});

/// Posterior draws as CSV: one row per draw, columns named after ParamLayout
/// blocks (beta_j, theta_k_j, eta_k_j, delta_l, sigma0_sq).
void write_draws_csv(const std::string& path, const ModelSpec& spec,
                     const std::vector<ParamVector>& draws);
[[nodiscard]] std::vector<ParamVector> read_draws_csv(const std::string& path, const ModelSpec& spec);

void write_text_file(const std::string& path, const std::string& text);
[[nodiscard]] std::string read_text_file(const std::string& path);

/**
 * Command-line entry point. Exit codes: 0 success, 1 data or I/O error,
 * 2 usage error, 3 numerical failure, 4 a requested check failed.
 * Errors are reported on stderr as a one-line JSON object.
 */
int cli_dispatch(int argc, const char* const* argv);

}  // namespace tvvol
