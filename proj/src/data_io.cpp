#include "tvvol/data_io.hpp"

#include "tvvol/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace tvvol {

using nlohmann::ordered_json;

namespace {

std::string_view trim(std::string_view s) {
    const auto not_space = [](char c) { return c != ' ' && c != '\t' && c != '\r'; };
    while (!s.empty() && !not_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && !not_space(s.back())) s.remove_suffix(1);
    return s;
}

std::vector<std::string> split_row(std::string_view line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        const auto cell = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
        cells.emplace_back(trim(cell));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

std::vector<double> column_values(const CsvTable& table, int column, const std::string& path) {
    std::vector<double> v;
    v.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        // Row numbers count the header as row 1, as in a spreadsheet.
        v.push_back(parse_double(table.rows[r][column],
                                 path + " row " + std::to_string(r + 2) + " column '" +
                                     table.header[column] + "'"));
    }
    return v;
}

int require_column(const CsvTable& table, const std::string& name, const std::string& path) {
    const int c = table.find_column(name);
    if (c < 0) {
        std::string have;
        for (const auto& h : table.header) have += (have.empty() ? "" : ", ") + h;
        throw DataError(path + ": missing column '" + name + "' (header: " + have + ")");
    }
    return c;
}

SeriesData make_series(std::vector<double> values, SeriesSource source, double scale,
                       std::map<std::string, std::string> meta) {
    try {
        return SeriesData(std::move(values), source, scale, std::move(meta));
    } catch (const std::invalid_argument& e) {
        throw DataError(e.what());
    }
}

void warn_if_flat(const SeriesData& s, const std::string& path) {
    const auto v = s.values();
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());
    if (var < 1e-12) warn(path + ": returns have near-zero variance (" + format_double(var) + ")");
}

void check_scale(double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw std::invalid_argument("scale must be positive");
}

}  // namespace

int CsvTable::find_column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto cells = split_row(line);
        if (table.header.empty()) {
            for (const auto& c : cells) {
                if (c.empty()) throw DataError(path + ": empty name in header row");
            }
            table.header = std::move(cells);
            continue;
        }
        if (cells.size() != table.header.size()) {
            throw DataError(path + " line " + std::to_string(line_no) + ": expected " +
                            std::to_string(table.header.size()) + " cells, found " +
                            std::to_string(cells.size()));
        }
        table.rows.push_back(std::move(cells));
    }
    if (table.header.empty()) throw DataError(path + ": no header row");
    return table;
}

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    if (res.ec != std::errc{}) throw std::runtime_error("cannot format a double");
    return {buf, res.ptr};
}

double parse_double(std::string_view text, const std::string& where) {
    text = trim(text);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw DataError(where + ": cannot parse '" + std::string(text) + "' as a number");
    }
    if (!std::isfinite(v)) throw DataError(where + ": value is not finite");
    return v;
}

SeriesData load_prices(const std::string& path, const std::string& column,
                       std::optional<std::size_t> last_n, double scale) {
    check_scale(scale);
    const CsvTable table = read_csv(path);
    const int c = require_column(table, column, path);
    const std::vector<double> prices = column_values(table, c, path);
    for (std::size_t r = 0; r < prices.size(); ++r) {
        if (!(prices[r] > 0.0)) {
            throw DataError(path + " row " + std::to_string(r + 2) + ": price " +
                            table.rows[r][c] + " is not positive");
        }
    }
    if (prices.size() < 2) throw DataError(path + ": need at least two prices");
    std::vector<double> returns(prices.size() - 1);
    for (std::size_t i = 1; i < prices.size(); ++i) {
        returns[i - 1] = scale * (std::log(prices[i]) - std::log(prices[i - 1]));
    }
    if (last_n) {
        if (*last_n == 0) throw std::invalid_argument("last_n must be positive");
        if (*last_n < returns.size()) returns.erase(returns.begin(), returns.end() - *last_n);
    }
    std::map<std::string, std::string> meta{{"file", path}, {"column", column}};
    if (last_n) meta["last_n"] = std::to_string(*last_n);
    const int date = table.find_column("date");
    if (date >= 0 && !table.rows.empty()) {
        const std::size_t first = table.rows.size() - returns.size();
        meta["date_range"] = table.rows[first][date] + ".." + table.rows.back()[date];
    }
    SeriesData s = make_series(std::move(returns), SeriesSource::RawPrices, scale, std::move(meta));
    warn_if_flat(s, path);
    return s;
}

SeriesData load_returns(const std::string& path, const std::string& column,
                        std::optional<std::size_t> last_n, double scale) {
    check_scale(scale);
    const CsvTable table = read_csv(path);
    std::vector<double> values = column_values(table, require_column(table, column, path), path);
    for (double& v : values) v *= scale;
    if (last_n) {
        if (*last_n == 0) throw std::invalid_argument("last_n must be positive");
        if (*last_n < values.size()) values.erase(values.begin(), values.end() - *last_n);
    }
    std::map<std::string, std::string> meta{{"file", path}, {"column", column}};
    if (last_n) meta["last_n"] = std::to_string(*last_n);
    SeriesData s = make_series(std::move(values), SeriesSource::Returns, scale, std::move(meta));
    warn_if_flat(s, path);
    return s;
}

SeriesData load_series(const DataOptions& o) {
    if (o.path.empty()) throw std::invalid_argument("no data file given");
    std::string format = o.format;
    if (format == "auto") {
        const CsvTable table = read_csv(o.path);
        const bool prices = o.column.empty() ? table.find_column("close") >= 0
                                             : o.column == "close";
        format = prices ? "prices" : "returns";
    }
    if (format == "prices") {
        return load_prices(o.path, o.column.empty() ? "close" : o.column, o.last_n,
                           o.scale.value_or(100.0));
    }
    if (format == "returns") {
        return load_returns(o.path, o.column.empty() ? "return" : o.column, o.last_n,
                            o.scale.value_or(1.0));
    }
    throw std::invalid_argument("data format must be auto, prices or returns, got '" + format + "'");
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << text;
    if (!out) throw DataError("write to '" + path + "' failed");
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_series_csv(const std::string& path, std::span<const double> values) {
    std::string out = "index,return\n";
    for (std::size_t i = 0; i < values.size(); ++i) {
        out += std::to_string(i + 1) + ',' + format_double(values[i]) + '\n';
    }
    write_text_file(path, out);
}

ModelSpec RunConfig::resolve_spec(int n) const {
    const int k = knots.value_or(auto_interior_knots(n));
    ModelSpec spec;
    spec.kind = kind;
    spec.p = p;
    spec.q = q.value_or(kind == ModelKind::TvArch ? 0 : 1);
    spec.k1 = knots_mu.value_or(k) + 4;
    spec.k2 = knots_a.value_or(k) + 4;
    spec.k3 = knots_b.value_or(k) + 4;
    spec.validate();
    return spec;
}

namespace {

template <class T>
ordered_json optional_json(const std::optional<T>& v, const char* unset) {
    return v ? ordered_json(*v) : ordered_json(unset);
}

/// Reads an optional value where a string (e.g. "auto") means unset.
template <class T>
std::optional<T> read_optional(const ordered_json& j) {
    if (j.is_string() || j.is_null()) return std::nullopt;
    return j.get<T>();
}

void reject_unknown(const ordered_json& j, std::initializer_list<const char*> keys, const char* where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; })) {
            throw std::invalid_argument(std::string("unknown config key '") + it.key() + "' in " + where);
        }
    }
}

template <class T>
void take(const ordered_json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

std::string config_to_json(const RunConfig& c) {
    ordered_json j;
    j["model"] = {{"kind", to_string(c.kind)},
                  {"p", c.p},
                  {"q", optional_json(c.q, "auto")},
                  {"knots", optional_json(c.knots, "auto")},
                  {"knots_mu", optional_json(c.knots_mu, "auto")},
                  {"knots_a", optional_json(c.knots_a, "auto")},
                  {"knots_b", optional_json(c.knots_b, "auto")}};
    j["method"] = c.method;
    j["hmc"] = {{"leapfrog_steps", c.hmc.leapfrog_steps},
                {"initial_step_size", c.hmc.initial_step_size},
                {"total_iters", c.hmc.total_iters},
                {"burn_in", c.hmc.burn_in},
                {"adapt_window", c.hmc.adapt_window},
                {"target_accept_low", c.hmc.target_accept_low},
                {"target_accept_high", c.hmc.target_accept_high},
                {"adapt_factor", c.hmc.adapt_factor},
                {"seed", c.hmc.seed},
                {"boundary", c.hmc.boundary == BoundaryMode::Clamp ? "clamp" : "reflect"},
                {"adapt", c.hmc.adapt},
                {"chains", c.chains}};
    j["hyper"] = {{"c1", c.hyper.c1}, {"c2", c.hyper.c2}, {"d1", c.hyper.d1}};
    j["data"] = {{"path", c.data.path},
                 {"format", c.data.format},
                 {"column", c.data.column},
                 {"last_n", optional_json(c.data.last_n, "all")},
                 {"scale", optional_json(c.data.scale, "auto")}};
    j["kernel"] = {{"bandwidth", optional_json(c.bandwidth, "auto")}};
    j["summary"] = {{"level", c.level}};
    return j.dump(2) + "\n";
}

RunConfig config_from_json(const std::string& text, RunConfig c) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const ordered_json::exception& e) {
        throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
    try {
        reject_unknown(j, {"model", "method", "hmc", "hyper", "data", "kernel", "summary"}, "config");
        if (j.contains("model")) {
            const auto& m = j.at("model");
            reject_unknown(m, {"kind", "p", "q", "knots", "knots_mu", "knots_a", "knots_b"}, "model");
            if (m.contains("kind")) c.kind = parse_model_kind(m.at("kind").get<std::string>());
            take(m, "p", c.p);
            if (m.contains("q")) c.q = read_optional<int>(m.at("q"));
            if (m.contains("knots")) c.knots = read_optional<int>(m.at("knots"));
            if (m.contains("knots_mu")) c.knots_mu = read_optional<int>(m.at("knots_mu"));
            if (m.contains("knots_a")) c.knots_a = read_optional<int>(m.at("knots_a"));
            if (m.contains("knots_b")) c.knots_b = read_optional<int>(m.at("knots_b"));
        }
        take(j, "method", c.method);
        if (j.contains("hmc")) {
            const auto& h = j.at("hmc");
            reject_unknown(h, {"leapfrog_steps", "initial_step_size", "total_iters", "burn_in",
                               "adapt_window", "target_accept_low", "target_accept_high",
                               "adapt_factor", "seed", "boundary", "adapt", "chains"},
                           "hmc");
            take(h, "leapfrog_steps", c.hmc.leapfrog_steps);
            take(h, "initial_step_size", c.hmc.initial_step_size);
            take(h, "total_iters", c.hmc.total_iters);
            take(h, "burn_in", c.hmc.burn_in);
            take(h, "adapt_window", c.hmc.adapt_window);
            take(h, "target_accept_low", c.hmc.target_accept_low);
            take(h, "target_accept_high", c.hmc.target_accept_high);
            take(h, "adapt_factor", c.hmc.adapt_factor);
            take(h, "seed", c.hmc.seed);
            take(h, "adapt", c.hmc.adapt);
            take(h, "chains", c.chains);
            if (h.contains("boundary")) {
                const auto b = h.at("boundary").get<std::string>();
                if (b == "clamp") {
                    c.hmc.boundary = BoundaryMode::Clamp;
                } else if (b == "reflect") {
                    c.hmc.boundary = BoundaryMode::Reflect;
                } else {
                    throw std::invalid_argument("boundary must be clamp or reflect");
                }
            }
        }
        if (j.contains("hyper")) {
            const auto& h = j.at("hyper");
            reject_unknown(h, {"c1", "c2", "d1"}, "hyper");
            take(h, "c1", c.hyper.c1);
            take(h, "c2", c.hyper.c2);
            take(h, "d1", c.hyper.d1);
        }
        if (j.contains("data")) {
            const auto& d = j.at("data");
            reject_unknown(d, {"path", "format", "column", "last_n", "scale"}, "data");
            take(d, "path", c.data.path);
            take(d, "format", c.data.format);
            take(d, "column", c.data.column);
            if (d.contains("last_n")) c.data.last_n = read_optional<std::size_t>(d.at("last_n"));
            if (d.contains("scale")) c.data.scale = read_optional<double>(d.at("scale"));
        }
        if (j.contains("kernel")) {
            const auto& k = j.at("kernel");
            reject_unknown(k, {"bandwidth"}, "kernel");
            if (k.contains("bandwidth")) c.bandwidth = read_optional<double>(k.at("bandwidth"));
        }
        if (j.contains("summary")) {
            const auto& s = j.at("summary");
            reject_unknown(s, {"level"}, "summary");
            take(s, "level", c.level);
        }
    } catch (const ordered_json::exception& e) {
        throw std::invalid_argument(std::string("config has a value of the wrong type: ") + e.what());
    }
    return c;
}

RunConfig load_config(const std::string& path, RunConfig base) {
    return config_from_json(read_text_file(path), std::move(base));
}

namespace {

std::vector<std::string> draw_columns(const ModelSpec& spec) {
    std::vector<std::string> cols;
    for (int j = 1; j <= spec.k1; ++j) cols.push_back("beta_" + std::to_string(j));
    for (int k = 1; k <= spec.p; ++k) {
        for (int j = 1; j <= spec.k2; ++j) {
            cols.push_back("theta_" + std::to_string(k) + "_" + std::to_string(j));
        }
    }
    for (int k = 1; k <= spec.free_garch_curves(); ++k) {
        for (int j = 1; j <= spec.k3; ++j) {
            cols.push_back("eta_" + std::to_string(k) + "_" + std::to_string(j));
        }
    }
    for (int l = 0; l <= spec.num_weights(); ++l) cols.push_back("delta_" + std::to_string(l));
    if (spec.has_garch_terms()) cols.push_back("sigma0_sq");
    return cols;
}

}  // namespace

void write_draws_csv(const std::string& path, const ModelSpec& spec,
                     const std::vector<ParamVector>& draws) {
    const auto cols = draw_columns(spec);
    std::string out;
    for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
    out += '\n';
    for (const ParamVector& d : draws) {
        // The draw is written on the natural scale; sigma0_sq replaces its log.
        std::vector<double> row = to_coordinates(spec, d);
        if (spec.has_garch_terms()) row.back() = d.sigma0_sq;
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + format_double(row[i]);
        out += '\n';
    }
    write_text_file(path, out);
}

std::vector<ParamVector> read_draws_csv(const std::string& path, const ModelSpec& spec) {
    const CsvTable table = read_csv(path);
    if (table.header != draw_columns(spec)) {
        throw DataError(path + ": draw columns do not match the model");
    }
    std::vector<ParamVector> draws;
    draws.reserve(table.rows.size());
    std::vector<double> row(table.header.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            row[c] = parse_double(table.rows[r][c], path + " row " + std::to_string(r + 2));
        }
        if (spec.has_garch_terms()) {
            if (!(row.back() > 0.0)) throw DataError(path + ": nonpositive sigma0_sq");
            row.back() = std::log(row.back());
        }
        ParamVector d = from_coordinates(spec, row);
        if (spec.has_garch_terms()) d.sigma0_sq = parse_double(table.rows[r].back(), path);
        draws.push_back(std::move(d));
    }
    return draws;
}

}  // namespace tvvol
