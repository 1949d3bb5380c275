#include "tvvol/data_io.hpp"

#include "tvvol/inference_summaries.hpp"
#include "tvvol/kernel_baseline.hpp"
#include "tvvol/model_comparison.hpp"
#include "tvvol/parallel.hpp"
#include "tvvol/property_suite.hpp"
#include "tvvol/simulator.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <numeric>

namespace tvvol {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

/// A requested check ran and did not pass.
class CheckFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

bool stdin_is_terminal() { return ::isatty(::fileno(stdin)) != 0; }

void write_json(const fs::path& path, const json& j) { write_text_file(path.string(), j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
    try {
        return json::parse(read_text_file(path.string()));
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

fs::path make_out_dir(const std::string& dir) {
    if (dir.empty()) throw std::invalid_argument("--out is required");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create '" + dir + "': " + ec.message());
    return fs::path(dir);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const std::size_t comma = s.find(',', start);
        const std::string item = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!item.empty()) out.push_back(item);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

/// "95" for 0.95, "97.5" for 0.975.
std::string level_label(double level) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", std::round(level * 1000.0) / 10.0);
    return buf;
}

/**
 * Flags shared by the commands that build a RunConfig. Values live here
 * until resolve() overlays the ones actually given on the command line.
 */
struct ConfigFlags {
    std::string config;
    std::string model = "arch";
    int p = 1;
    int q = 0;
    std::string knots = "auto";
    int knots_mu = 0, knots_a = 0, knots_b = 0;
    std::string data, format = "auto", column;
    std::size_t last_n = 0;
    double scale = 1.0;
    int iters = 10000, burnin = 5000, leapfrog = 30, chains = 1;
    double step = 1e-3;
    std::uint64_t seed = 1;
    std::string boundary = "clamp";
    bool no_adapt = false;
    double c1 = 100.0, c2 = 100.0, d1 = 2.0;
    std::string method = "bayes";
    double bandwidth = 0.0;
    double level = 0.95;

    std::map<std::string, CLI::Option*> opts;

    [[nodiscard]] bool given(const std::string& name) const {
        const auto it = opts.find(name);
        return it != opts.end() && it->second->count() > 0;
    }

    void add_model(CLI::App* cmd, bool with_model) {
        if (with_model) opts["model"] = cmd->add_option("--model", model, "arch, garch or igarch");
        opts["p"] = cmd->add_option("--p", p, "ARCH order")->check(CLI::PositiveNumber);
        if (with_model) opts["q"] = cmd->add_option("--q", q, "GARCH order (default 0 for arch, 1 otherwise)");
        opts["knots"] = cmd->add_option("--knots", knots, "interior knots, or auto");
        opts["knots-mu"] = cmd->add_option("--knots-mu", knots_mu, "interior knots of the intercept curve");
        opts["knots-a"] = cmd->add_option("--knots-a", knots_a, "interior knots of the ARCH curves");
        opts["knots-b"] = cmd->add_option("--knots-b", knots_b, "interior knots of the GARCH curves");
    }

    void add_data(CLI::App* cmd) {
        opts["data"] = cmd->add_option("--data", data, "input CSV");
        opts["format"] = cmd->add_option("--format", format, "auto, prices or returns");
        opts["column"] = cmd->add_option("--column", column, "column to read");
        opts["last-n"] = cmd->add_option("--last-n", last_n, "keep the most recent N returns")
                             ->check(CLI::PositiveNumber);
        opts["scale"] = cmd->add_option("--scale", scale, "multiplier (default 100 for prices)");
    }

    void add_hmc(CLI::App* cmd) {
        opts["iters"] = cmd->add_option("--iters", iters, "total HMC iterations");
        opts["burnin"] = cmd->add_option("--burnin", burnin, "burn-in iterations");
        opts["leapfrog"] = cmd->add_option("--leapfrog", leapfrog, "leapfrog steps per iteration");
        opts["step-size"] = cmd->add_option("--step-size", step, "initial leapfrog step size");
        opts["boundary"] = cmd->add_option("--boundary", boundary, "clamp or reflect");
        opts["no-adapt"] = cmd->add_flag("--no-adapt", no_adapt, "keep the step size fixed");
        opts["chains"] = cmd->add_option("--chains", chains, "independent chains, pooled");
        opts["c1"] = cmd->add_option("--c1", c1, "prior variance of delta");
        opts["c2"] = cmd->add_option("--c2", c2, "prior variance of beta");
        opts["d1"] = cmd->add_option("--d1", d1, "inverse-gamma shape and scale of sigma0^2");
    }

    void add_common(CLI::App* cmd) {
        opts["config"] = cmd->add_option("--config", config, "JSON config file");
        opts["seed"] = cmd->add_option("--seed", seed, "random seed");
    }

    /// Defaults, then the config file, then explicit flags.
    [[nodiscard]] RunConfig resolve() const {
        RunConfig c;
        if (given("config")) c = load_config(config, c);
        if (given("model")) c.kind = parse_model_kind(model);
        if (given("p")) c.p = p;
        if (given("q")) c.q = q;
        if (given("knots")) {
            if (knots == "auto") {
                c.knots.reset();
            } else {
                try {
                    c.knots = std::stoi(knots);
                } catch (const std::exception&) {
                    throw std::invalid_argument("--knots must be an integer or auto");
                }
            }
        }
        if (given("knots-mu")) c.knots_mu = knots_mu;
        if (given("knots-a")) c.knots_a = knots_a;
        if (given("knots-b")) c.knots_b = knots_b;
        if (given("data")) c.data.path = data;
        if (given("format")) c.data.format = format;
        if (given("column")) c.data.column = column;
        if (given("last-n")) c.data.last_n = last_n;
        if (given("scale")) c.data.scale = scale;
        if (given("iters")) c.hmc.total_iters = iters;
        if (given("burnin")) c.hmc.burn_in = burnin;
        if (given("leapfrog")) c.hmc.leapfrog_steps = leapfrog;
        if (given("step-size")) c.hmc.initial_step_size = step;
        if (given("seed")) c.hmc.seed = seed;
        if (given("boundary")) {
            if (boundary == "clamp") {
                c.hmc.boundary = BoundaryMode::Clamp;
            } else if (boundary == "reflect") {
                c.hmc.boundary = BoundaryMode::Reflect;
            } else {
                throw std::invalid_argument("--boundary must be clamp or reflect");
            }
        }
        if (given("no-adapt")) c.hmc.adapt = !no_adapt;
        if (given("chains")) c.chains = chains;
        if (given("c1")) c.hyper.c1 = c1;
        if (given("c2")) c.hyper.c2 = c2;
        if (given("d1")) c.hyper.d1 = d1;
        if (given("method")) c.method = method;
        if (given("bandwidth")) c.bandwidth = bandwidth;
        if (given("level")) c.level = level;

        c.hmc.validate();
        c.hyper.validate();
        if (c.chains < 1) throw std::invalid_argument("--chains must be at least 1");
        if (!(c.level > 0.0 && c.level < 1.0)) throw std::invalid_argument("--level must lie in (0, 1)");
        if (c.method != "bayes" && c.method != "kernel" && c.method != "constant") {
            throw std::invalid_argument("--method must be bayes, kernel or constant");
        }
        return c;
    }

    /// Scripted runs must be reproducible, so they have to name their seed.
    void require_seed(const std::string& command) const {
        if (given("seed") || stdin_is_terminal()) return;
        if (given("config")) {
            const json j = read_json(config);
            if (j.contains("hmc") && j["hmc"].contains("seed")) return;
        }
        throw std::invalid_argument(command + ": --seed is required when not run from a terminal");
    }
};

json spec_json(const ModelSpec& spec, int horizon) {
    return {{"kind", to_string(spec.kind)}, {"p", spec.p},   {"q", spec.q},
            {"k1", spec.k1},                {"k2", spec.k2}, {"k3", spec.k3},
            {"horizon", horizon}};
}

ModelSpec spec_from_json(const json& j) {
    ModelSpec s;
    s.kind = parse_model_kind(j.at("kind").get<std::string>());
    s.p = j.at("p").get<int>();
    s.q = j.at("q").get<int>();
    s.k1 = j.at("k1").get<int>();
    s.k2 = j.at("k2").get<int>();
    s.k3 = j.at("k3").get<int>();
    s.validate();
    return s;
}

/// Long-format curve table. Empty bands are written as empty cells.
void write_curves_csv(const fs::path& path, const std::vector<std::string>& names,
                      const std::vector<double>& grid, const std::vector<std::vector<double>>& mean,
                      const std::vector<std::vector<double>>* lower,
                      const std::vector<std::vector<double>>* upper, double level) {
    const std::string pct = level_label(level);
    std::string out = "t,coef,mean,lower" + pct + ",upper" + pct + "\n";
    for (std::size_t c = 0; c < names.size(); ++c) {
        for (std::size_t i = 0; i < grid.size(); ++i) {
            out += format_double(grid[i]) + ',' + names[c] + ',' + format_double(mean[c][i]) + ',';
            if (lower) out += format_double((*lower)[c][i]);
            out += ',';
            if (upper) out += format_double((*upper)[c][i]);
            out += '\n';
        }
    }
    write_text_file(path.string(), out);
}

std::vector<std::vector<double>> curve_rows(const ModelSpec& spec, const CoefficientCurves& c) {
    std::vector<std::vector<double>> rows{c.mu};
    for (int k = 0; k < spec.p; ++k) rows.push_back(c.a[k]);
    for (int j = 0; j < spec.q; ++j) rows.push_back(c.b[j]);
    return rows;
}

void write_variances_csv(const fs::path& path, std::span<const double> data,
                         const std::vector<double>& var) {
    std::string out = "index,return,variance\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        out += std::to_string(i + 1) + ',' + format_double(data[i]) + ',' + format_double(var[i]) + '\n';
    }
    write_text_file(path.string(), out);
}

// ---------------------------------------------------------------- simulate

int run_simulate(const std::string& scenario, int n, std::uint64_t seed, const std::string& init,
                 const std::string& out) {
    Scenario s = builtin_scenario(scenario, n, seed);
    if (init == "zero") {
        s.init = SimulationInit::ZeroHistory;
    } else if (init != "stationary") {
        throw std::invalid_argument("--init must be stationary or zero");
    }
    if (out.empty()) throw std::invalid_argument("--out is required");
    const SeriesData sim = simulate(s);
    write_series_csv(out, sim.values());
    return 0;
}

// ---------------------------------------------------------------- fit

int run_fit(const RunConfig& cfg, const std::string& out_dir, bool write_draws) {
    const SeriesData series = load_series(cfg.data);
    const auto x = series.values();
    const int n = static_cast<int>(x.size());
    const ModelSpec spec = cfg.resolve_spec(n);
    const fs::path out = make_out_dir(out_dir);
    write_text_file((out / "config.json").string(), config_to_json(cfg));
    write_series_csv((out / "series.csv").string(), x);

    json metrics;
    metrics["method"] = cfg.method;
    metrics["model"] = to_string(spec.kind);
    metrics["n"] = n;
    metrics["seed"] = cfg.hmc.seed;
    metrics["knots"] = {{"mu", spec.k1 - 4}, {"a", spec.k2 - 4}, {"b", spec.k3 - 4}};
    metrics["spec"] = spec_json(spec, n);
    metrics["amse_first_index"] = spec.first_likelihood_index();

    std::vector<double> var;
    const auto names = spec.curve_names();
    if (cfg.method == "bayes") {
        PosteriorSamples samples;
        if (cfg.chains == 1) {
            samples = run_chain(spec, x, cfg.hyper, cfg.hmc);
        } else {
            samples = pool_chains(run_chains(spec, x, cfg.hyper, cfg.hmc, cfg.chains));
        }
        const CurveSummary sum = summarize_curves(samples, n, cfg.level);
        var = fitted_variances(spec, sum, x);
        write_curves_csv(out / "curves.csv", names, sum.grid, sum.mean, &sum.lower, &sum.upper,
                         cfg.level);
        if (write_draws) write_draws_csv((out / "draws.csv").string(), spec, samples.draws);
        std::string trace = "window,accept_rate,step_size\n";
        for (std::size_t w = 0; w < samples.accept_rate_trace.size(); ++w) {
            trace += std::to_string(w + 1) + ',' + format_double(samples.accept_rate_trace[w]) + ',' +
                     format_double(samples.step_size_trace[w]) + '\n';
        }
        write_text_file((out / "adaptation.csv").string(), trace);
        metrics["accept_rate"] = samples.accept_rate;
        metrics["draws"] = samples.draws.size();
        metrics["chains"] = cfg.chains;
        if (spec.has_garch_terms()) metrics["sigma0_sq"] = sum.sigma0_sq_mean;
    } else if (cfg.method == "kernel") {
        const double h = cfg.bandwidth ? *cfg.bandwidth : select_bandwidth(spec, x, default_bandwidths());
        const KernelFit fit = kernel_fit(spec, x, h, unit_grid(n));
        var = variance_recursion(spec, fit.curves, x, fit.initial_variance());
        write_curves_csv(out / "curves.csv", names, fit.grid, curve_rows(spec, fit.curves), nullptr,
                         nullptr, cfg.level);
        std::size_t counts[3] = {0, 0, 0};
        for (const PointFit& p : fit.objective_trace) ++counts[static_cast<int>(p.status)];
        metrics["bandwidth"] = h;
        metrics["bandwidth_selected"] = !cfg.bandwidth.has_value();
        metrics["points"] = {{"converged", counts[0]}, {"stalled", counts[1]}, {"failed", counts[2]}};
        if (spec.has_garch_terms()) metrics["sigma0_sq"] = fit.initial_variance();
    } else {
        const ConstantParams c = constant_mle(spec, x);
        const std::vector<double> grid = unit_grid(n);
        const CoefficientCurves curves = constant_curves(spec, c, grid);
        var = constant_variances(spec, c, x);
        write_curves_csv(out / "curves.csv", names, grid, curve_rows(spec, curves), nullptr, nullptr,
                         cfg.level);
        metrics["estimate"] = {{"mu", c.mu}, {"a", c.a}, {"b", c.b}};
        if (spec.has_garch_terms()) metrics["sigma0_sq"] = c.sigma0_sq;
    }
    metrics["amse"] = amse(x, var, spec.first_likelihood_index());
    write_variances_csv(out / "variances.csv", x, var);
    write_json(out / "metrics.json", metrics);
    return 0;
}

// ---------------------------------------------------------------- summarize

int run_summarize(const std::vector<std::string>& fits, const RunConfig& cfg, const std::string& out_dir) {
    if (fits.empty()) throw std::invalid_argument("summarize needs at least one --fit directory");
    const fs::path out = make_out_dir(out_dir);
    write_text_file((out / "config.json").string(), config_to_json(cfg));
    json summary;
    summary["level"] = cfg.level;
    summary["fits"] = json::array();
    std::vector<double> amses;
    for (std::size_t f = 0; f < fits.size(); ++f) {
        const fs::path dir(fits[f]);
        const json metrics = read_json(dir / "metrics.json");
        const ModelSpec spec = spec_from_json(metrics.at("spec"));
        const int horizon = metrics.at("spec").at("horizon").get<int>();
        const std::string method = metrics.at("method").get<std::string>();
        const SeriesData series = load_returns((dir / "series.csv").string(), "return");
        const auto x = series.values();
        const fs::path sub = make_out_dir((out / ("fit_" + std::to_string(f + 1))).string());

        json entry{{"fit", fits[f]}, {"method", method}, {"model", to_string(spec.kind)}, {"n", x.size()}};
        double value = metrics.at("amse").get<double>();
        if (method == "bayes" && fs::exists(dir / "draws.csv")) {
            PosteriorSamples samples;
            samples.spec = spec;
            samples.horizon = horizon;
            samples.draws = read_draws_csv((dir / "draws.csv").string(), spec);
            const CurveSummary sum = summarize_curves(samples, static_cast<int>(x.size()), cfg.level);
            write_curves_csv(sub / "curves.csv", sum.names, sum.grid, sum.mean, &sum.lower, &sum.upper,
                             cfg.level);
            const auto trace = l2_deviation_trace(samples, static_cast<int>(x.size()));
            std::string t = "pair";
            for (const auto& name : sum.names) t += ',' + name;
            t += '\n';
            for (std::size_t i = 0; i < trace.front().size(); ++i) {
                t += std::to_string(i + 1);
                for (const auto& series_c : trace) t += ',' + format_double(series_c[i]);
                t += '\n';
            }
            write_text_file((sub / "trace.csv").string(), t);
            value = amse(x, fitted_variances(spec, sum, x), spec.first_likelihood_index());
            entry["draws"] = samples.draws.size();
        }
        entry["amse"] = value;
        json m = entry;
        write_json(sub / "metrics.json", m);
        summary["fits"].push_back(entry);
        amses.push_back(value);
    }
    summary["amse_star"] = amse_star(amses);
    write_json(out / "summary.json", summary);
    return 0;
}

// ---------------------------------------------------------------- compare and forecast

struct ModelRun {
    std::string name;
    ModelSpec spec;
};

std::vector<ModelRun> parse_models(const std::string& list, const RunConfig& cfg, int n) {
    std::vector<ModelRun> runs;
    for (const auto& name : split_list(list)) {
        RunConfig c = cfg;
        c.kind = parse_model_kind(name);
        if (c.kind == ModelKind::TvArch) c.q = 0;
        if (c.kind != ModelKind::TvArch && c.q.value_or(0) == 0) c.q = 1;
        runs.push_back({name, c.resolve_spec(n)});
    }
    return runs;
}

struct ForecastResult {
    std::vector<int> cuts;
    std::vector<std::vector<double>> per_cut;  // [model][cut]
    std::vector<double> mean;
};

/// One-step MSE at each cut c: fit on the first c - 1 points with the full
/// series as time horizon, score X_c.
ForecastResult forecast_models(const std::vector<ModelRun>& models, std::span<const double> x,
                               const RunConfig& cfg, int count) {
    const int n = static_cast<int>(x.size());
    ForecastResult r;
    r.cuts = forecast_cut_points(n, count, cfg.hmc.seed);
    r.per_cut.assign(models.size(), std::vector<double>(r.cuts.size()));
    parallel_for(models.size() * r.cuts.size(), [&](std::size_t job) {
        const std::size_t m = job / r.cuts.size(), k = job % r.cuts.size();
        const int c = r.cuts[k];
        const auto fit = run_chain(models[m].spec, x.first(c - 1), cfg.hyper, cfg.hmc, std::nullopt, n);
        r.per_cut[m][k] = one_step_forecast_mse(fit, x.first(c));
    });
    for (const auto& v : r.per_cut) {
        r.mean.push_back(std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()));
    }
    return r;
}

json forecast_json(const std::vector<ModelRun>& models, const ForecastResult& r) {
    json j;
    j["cuts"] = r.cuts;
    for (std::size_t m = 0; m < models.size(); ++m) {
        j["models"][models[m].name] = {{"mse", r.mean[m]}, {"per_cut", r.per_cut[m]}};
    }
    return j;
}

json marginal_json(const MarginalEstimate& m) {
    return {{"log_marginal", m.log_marginal}, {"draws", m.draws}, {"neg_loglik_iqr", m.neg_loglik_iqr}};
}

int run_compare(const RunConfig& cfg, const std::string& models_list, const std::string& holdouts,
                int forecast_cuts, const std::string& out_dir) {
    const SeriesData series = load_series(cfg.data);
    const auto x = series.values();
    const int n = static_cast<int>(x.size());
    const auto models = parse_models(models_list, cfg, n);
    if (models.size() != 2) throw std::invalid_argument("--models must name exactly two models");
    std::vector<int> ms;
    for (const auto& h : split_list(holdouts)) {
        int m = 0;
        try {
            m = std::stoi(h);
        } catch (const std::exception&) {
            throw std::invalid_argument("--holdouts must be a comma-separated list of integers");
        }
        if (m <= 0 || m >= n) throw std::invalid_argument("holdout sizes must satisfy 0 < m < n");
        ms.push_back(m);
    }
    const fs::path out = make_out_dir(out_dir);
    write_text_file((out / "config.json").string(), config_to_json(cfg));

    // Job 0 is the full-series fit; job 1 + h the fit without the last ms[h].
    const std::size_t per_model = 1 + ms.size();
    std::vector<MarginalEstimate> marginals(models.size());
    std::vector<std::vector<PredictiveScore>> scores(models.size(), std::vector<PredictiveScore>(ms.size()));
    parallel_for(models.size() * per_model, [&](std::size_t job) {
        const std::size_t m = job / per_model, k = job % per_model;
        if (k == 0) {
            const auto fit = run_chain(models[m].spec, x, cfg.hyper, cfg.hmc);
            marginals[m] = log_marginal_harmonic(fit, x, cfg.hyper);
        } else {
            const int hold = ms[k - 1];
            const auto fit = run_chain(models[m].spec, x.first(n - hold), cfg.hyper, cfg.hmc, std::nullopt, n);
            scores[m][k - 1] = predictive_loglik(fit, x, hold);
        }
    });

    ComparisonReport report = make_report(models[0].name, marginals[0], models[1].name, marginals[1]);
    for (std::size_t h = 0; h < ms.size(); ++h) report.predictive[ms[h]] = {scores[0][h], scores[1][h]};

    json j;
    j["models"] = {report.model1, report.model2};
    j["n"] = n;
    j["marginal"] = {{report.model1, marginal_json(report.marginal1)},
                     {report.model2, marginal_json(report.marginal2)}};
    j["two_log_bf"] = report.two_log_bf;
    j["evidence"] = to_string(report.label);
    j["favoured"] = report.two_log_bf >= 0.0 ? report.model1 : report.model2;
    j["predictive"] = json::array();
    for (const auto& [m, pair] : report.predictive) {
        j["predictive"].push_back({{"m", m},
                                   {report.model1, {{"value", pair.first.value}, {"flagged", pair.first.flagged}}},
                                   {report.model2, {{"value", pair.second.value}, {"flagged", pair.second.flagged}}}});
    }
    if (forecast_cuts > 0) {
        const ForecastResult f = forecast_models(models, x, cfg, forecast_cuts);
        report.has_forecast = true;
        report.one_step_mse1 = f.mean[0];
        report.one_step_mse2 = f.mean[1];
        j["forecast"] = forecast_json(models, f);
    }
    write_json(out / "report.json", j);
    return 0;
}

int run_forecast(const RunConfig& cfg, const std::string& models_list, int cuts, const std::string& out_dir) {
    const SeriesData series = load_series(cfg.data);
    const auto x = series.values();
    const auto models = parse_models(models_list, cfg, static_cast<int>(x.size()));
    if (models.empty()) throw std::invalid_argument("--models names no model");
    const fs::path out = make_out_dir(out_dir);
    write_text_file((out / "config.json").string(), config_to_json(cfg));
    write_json(out / "forecast.json", forecast_json(models, forecast_models(models, x, cfg, cuts)));
    return 0;
}

// ---------------------------------------------------------------- checks

int run_gradcheck(const std::string& model, int n, int trials, std::uint64_t seed, const std::string& out) {
    std::optional<ModelKind> kind;
    if (!model.empty() && model != "all") kind = parse_model_kind(model);
    const GradientCheck r = gradient_check(kind, n, trials, seed);
    const json j{{"model", model.empty() ? "all" : model},
                 {"n", n},
                 {"trials", r.trials},
                 {"coordinates", r.coordinates},
                 {"failures", r.failures},
                 {"worst_ratio", r.worst_ratio},
                 {"worst", r.worst},
                 {"status", r.failures == 0 ? "pass" : "fail"}};
    if (!out.empty()) write_json(out, j);
    std::cout << j.dump() << '\n';
    if (r.failures != 0) throw CheckFailure(std::to_string(r.failures) + " gradient coordinates out of tolerance");
    return 0;
}

int run_selftest(const std::string& level, std::uint64_t seed, const std::string& out,
                 const std::string& work_dir) {
    SuiteOptions options;
    options.work_dir = work_dir;
    std::error_code ec;
    const fs::path self = fs::read_symlink("/proc/self/exe", ec);
    if (!ec) options.cli_path = self.string();
    options.on_check = [](const CheckResult& c, double seconds) {
        std::cerr << "[" << c.criterion << "] " << c.name << ": " << c.status << " (" << seconds << " s)\n";
    };
    const SuiteReport report = run_suite(parse_suite_level(level), seed, options);
    if (!out.empty()) write_text_file(out, report.to_json());
    for (const CheckResult& c : report.checks) {
        std::cout << (c.status == "fail" ? "FAIL" : c.status == "pass" ? "PASS" : "SKIP") << ' '
                  << c.criterion << ' ' << c.name << ": " << c.detail << '\n';
    }
    if (!report.passed()) throw CheckFailure("self-test failed");
    return 0;
}

void report_error(const std::string& kind, const std::string& message, int code) {
    const json j{{"error", kind}, {"message", message}, {"exit_code", code}};
    std::cerr << j.dump() << std::endl;
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv) {
    CLI::App app{"Time-varying ARCH/GARCH volatility models with B-spline coefficients", "tvvol"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "simulate a built-in scenario");
    std::string scenario = "arch1", init = "stationary", sim_out;
    int sim_n = 1000;
    std::uint64_t sim_seed = 1;
    sim->add_option("--scenario", scenario, "arch1, garch11 or igarch11");
    sim->add_option("--n", sim_n, "series length");
    auto* sim_seed_opt = sim->add_option("--seed", sim_seed, "random seed");
    sim->add_option("--init", init, "stationary or zero pre-sample");
    sim->add_option("--out", sim_out, "output CSV")->required();

    // fit
    auto* fit = app.add_subcommand("fit", "fit one model to a series");
    ConfigFlags fit_flags;
    std::string fit_out;
    bool no_draws = false;
    fit_flags.add_common(fit);
    fit_flags.add_model(fit, true);
    fit_flags.add_data(fit);
    fit_flags.add_hmc(fit);
    fit_flags.opts["method"] = fit->add_option("--method", fit_flags.method, "bayes, kernel or constant");
    fit_flags.opts["bandwidth"] = fit->add_option("--bandwidth", fit_flags.bandwidth, "kernel bandwidth (default: cross-validated)");
    fit_flags.opts["level"] = fit->add_option("--level", fit_flags.level, "credible band level");
    fit->add_flag("--no-draws", no_draws, "do not write draws.csv");
    fit->add_option("--out", fit_out, "output directory")->required();

    // summarize
    auto* summ = app.add_subcommand("summarize", "recompute summaries from fit directories");
    ConfigFlags summ_flags;
    std::vector<std::string> summ_fits;
    std::string summ_out;
    summ_flags.opts["config"] = summ->add_option("--config", summ_flags.config, "JSON config file");
    summ_flags.opts["level"] = summ->add_option("--level", summ_flags.level, "credible band level");
    summ->add_option("--fit", summ_fits, "fit directory (repeatable)")->required();
    summ->add_option("--out", summ_out, "output directory")->required();

    // compare
    auto* cmp = app.add_subcommand("compare", "Bayes factor and predictive comparison of two models");
    ConfigFlags cmp_flags;
    std::string cmp_models = "garch,igarch", cmp_holdouts = "10,20,50", cmp_out;
    int cmp_cuts = 0;
    cmp_flags.add_common(cmp);
    cmp_flags.add_model(cmp, false);
    cmp_flags.add_data(cmp);
    cmp_flags.add_hmc(cmp);
    cmp->add_option("--models", cmp_models, "two comma-separated models");
    cmp->add_option("--holdouts", cmp_holdouts, "comma-separated holdout sizes");
    cmp->add_option("--forecast-cuts", cmp_cuts, "also average one-step MSE over this many cut points");
    cmp->add_option("--out", cmp_out, "output directory")->required();

    // forecast
    auto* fc = app.add_subcommand("forecast", "one-step-ahead forecast MSE at random cut points");
    ConfigFlags fc_flags;
    std::string fc_models = "garch,igarch", fc_out;
    int fc_cuts = 15;
    fc_flags.add_common(fc);
    fc_flags.add_model(fc, false);
    fc_flags.add_data(fc);
    fc_flags.add_hmc(fc);
    fc->add_option("--models", fc_models, "comma-separated models");
    fc->add_option("--cuts", fc_cuts, "number of cut points")->check(CLI::PositiveNumber);
    fc->add_option("--out", fc_out, "output directory")->required();

    // gradcheck
    auto* gc = app.add_subcommand("gradcheck", "analytic gradient against finite differences");
    std::string gc_model, gc_out;
    int gc_n = 80, gc_trials = 100;
    std::uint64_t gc_seed = 1;
    gc->add_option("--model", gc_model, "arch, garch or igarch (default: all kinds)");
    gc->add_option("--n", gc_n, "series length")->check(CLI::Range(20, 100000));
    gc->add_option("--trials", gc_trials, "random triples")->check(CLI::PositiveNumber);
    gc->add_option("--seed", gc_seed, "random seed");
    gc->add_option("--out", gc_out, "also write the result JSON here");

    // selftest
    auto* st = app.add_subcommand("selftest", "run the acceptance suite");
    std::string st_level = "fast", st_out, st_work;
    std::uint64_t st_seed = 1;
    st->add_option("--level", st_level, "fast or full");
    st->add_option("--seed", st_seed, "suite seed");
    st->add_option("--out", st_out, "report JSON");
    st->add_option("--work-dir", st_work, "scratch directory for pipeline checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        report_error("usage", e.what(), 2);
        return 2;
    }

    try {
        if (*sim) {
            if (!sim_seed_opt->count() && !stdin_is_terminal()) {
                throw std::invalid_argument("simulate: --seed is required when not run from a terminal");
            }
            return run_simulate(scenario, sim_n, sim_seed, init, sim_out);
        }
        if (*fit) {
            fit_flags.require_seed("fit");
            return run_fit(fit_flags.resolve(), fit_out, !no_draws);
        }
        if (*summ) return run_summarize(summ_fits, summ_flags.resolve(), summ_out);
        if (*cmp) return run_compare(cmp_flags.resolve(), cmp_models, cmp_holdouts, cmp_cuts, cmp_out);
        if (*fc) return run_forecast(fc_flags.resolve(), fc_models, fc_cuts, fc_out);
        if (*gc) return run_gradcheck(gc_model, gc_n, gc_trials, gc_seed, gc_out);
        if (*st) return run_selftest(st_level, st_seed, st_out, st_work);
    } catch (const DataError& e) {
        report_error("data", e.what(), 1);
        return 1;
    } catch (const CheckFailure& e) {
        report_error("check", e.what(), 4);
        return 4;
    } catch (const std::invalid_argument& e) {
        report_error("usage", e.what(), 2);
        return 2;
    } catch (const std::out_of_range& e) {
        report_error("usage", e.what(), 2);
        return 2;
    } catch (const json::exception& e) {
        report_error("data", e.what(), 1);
        return 1;
    } catch (const std::exception& e) {
        report_error("numerical", e.what(), 3);
        return 3;
    }
    return 2;
}

}  // namespace tvvol
