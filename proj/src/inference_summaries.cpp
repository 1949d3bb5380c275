#include "tvvol/inference_summaries.hpp"

#include "tvvol/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tvvol {

CoefficientCurves CurveSummary::mean_curves() const {
    if (mean.empty()) throw std::logic_error("empty curve summary");
    CoefficientCurves c;
    c.grid = grid;
    c.mu = mean[0];
    for (std::size_t k = 1; k < mean.size(); ++k) {
        if (static_cast<int>(k) <= p) {
            c.a.push_back(mean[k]);
        } else {
            c.b.push_back(mean[k]);
        }
    }
    return c;
}

double nearest_rank(std::span<const double> sorted, double prob) {
    if (sorted.empty()) throw std::invalid_argument("quantile of an empty sample");
    if (!(prob >= 0.0 && prob <= 1.0)) throw std::invalid_argument("quantile level outside [0, 1]");
    // The small offset keeps p * N from rounding up across an integer.
    const double rank = std::ceil(prob * static_cast<double>(sorted.size()) - 1e-9);
    const auto index = static_cast<std::size_t>(std::clamp(rank, 1.0, static_cast<double>(sorted.size())));
    return sorted[index - 1];
}

namespace {

int resolve_grid(const PosteriorSamples& samples, int n) {
    if (samples.horizon < 1) throw std::invalid_argument("posterior samples have no horizon");
    if (n == 0) n = samples.horizon;
    if (n < 1 || n > samples.horizon) throw std::invalid_argument("summary grid exceeds the horizon");
    return n;
}

}  // namespace

CurveSummary summarize_curves(const PosteriorSamples& samples, int n, double level) {
    if (samples.draws.empty()) throw std::invalid_argument("no posterior draws to summarize");
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("band level must lie in (0, 1)");
    const ModelSpec& spec = samples.spec;
    spec.validate();
    n = resolve_grid(samples, n);
    const std::size_t draws = samples.draws.size();
    const std::size_t curves = 1 + spec.p + spec.q;
    const BasisSet bases = make_bases(spec);

    CurveSummary s;
    s.names = spec.curve_names();
    s.level = level;
    s.p = spec.p;
    s.draws = draws;
    s.grid.resize(n);
    for (int i = 0; i < n; ++i) s.grid[i] = static_cast<double>(i + 1) / samples.horizon;
    s.mean.assign(curves, std::vector<double>(n));
    s.lower.assign(curves, std::vector<double>(n));
    s.upper.assign(curves, std::vector<double>(n));
    const double lo = 0.5 * (1.0 - level);
    const double hi = 1.0 - lo;

    // Grid rows are processed in chunks so the per-chunk buffer of all draws
    // stays around a million values.
    const std::size_t rows = std::clamp<std::size_t>(1'000'000 / (draws * curves), 1, n);
    const std::size_t chunks = (n + rows - 1) / rows;
    parallel_for(chunks, [&](std::size_t chunk) {
        const int first = static_cast<int>(chunk * rows);
        const int count = std::min<int>(static_cast<int>(rows), n - first);
        const CurveDesigns designs = make_designs(bases, count, samples.horizon, first);
        std::vector<double> buffer(curves * count * draws);
        const auto at = [&](std::size_t c, int r) { return buffer.data() + (c * count + r) * draws; };
        for (std::size_t d = 0; d < draws; ++d) {
            const CoefficientCurves cc = build_curves(spec, samples.draws[d], designs);
            for (int r = 0; r < count; ++r) {
                at(0, r)[d] = cc.mu[r];
                for (int k = 0; k < spec.p; ++k) at(1 + k, r)[d] = cc.a[k][r];
                for (int j = 0; j < spec.q; ++j) at(1 + spec.p + j, r)[d] = cc.b[j][r];
            }
        }
        for (std::size_t c = 0; c < curves; ++c) {
            for (int r = 0; r < count; ++r) {
                double* v = at(c, r);
                // Summing after the sort makes the mean independent of draw order.
                std::sort(v, v + draws);
                double sum = 0.0;
                for (std::size_t d = 0; d < draws; ++d) sum += v[d];
                const std::span<const double> sorted(v, draws);
                s.mean[c][first + r] = sum / static_cast<double>(draws);
                s.lower[c][first + r] = nearest_rank(sorted, lo);
                s.upper[c][first + r] = nearest_rank(sorted, hi);
            }
        }
    });

    if (spec.has_garch_terms()) {
        std::vector<double> s0;
        for (const ParamVector& d : samples.draws) s0.push_back(d.sigma0_sq);
        std::sort(s0.begin(), s0.end());
        double sum = 0.0;
        for (double v : s0) sum += v;
        s.sigma0_sq_mean = sum / static_cast<double>(draws);
    }
    return s;
}

std::vector<double> fitted_variances(const ModelSpec& spec, const CurveSummary& summary,
                                     std::span<const double> data) {
    if (summary.grid.size() < data.size()) {
        throw std::invalid_argument("summary grid does not cover the data");
    }
    return variance_recursion(spec, summary.mean_curves(), data, summary.sigma0_sq_mean);
}

double amse(std::span<const double> data, std::span<const double> fitted, int first_index) {
    if (data.size() != fitted.size()) throw std::invalid_argument("data and fitted variances differ in length");
    const int n = static_cast<int>(data.size());
    if (first_index < 1 || first_index > n) throw std::invalid_argument("AMSE range is empty");
    double sum = 0.0;
    for (int i = first_index; i <= n; ++i) {
        const double e = data[i - 1] * data[i - 1] - fitted[i - 1];
        sum += e * e;
    }
    return sum / (n - first_index + 1);
}

double amse_star(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("AMSE* of no values");
    double sum = 0.0;
    for (double v : values) {
        if (!(v > 0.0)) throw std::invalid_argument("AMSE* needs positive AMSE values");
        sum += std::log(v);
    }
    return sum / static_cast<double>(values.size());
}

double band_coverage(const CurveSummary& summary, std::size_t curve, std::span<const double> truth) {
    if (curve >= summary.mean.size()) throw std::out_of_range("curve index out of range");
    if (truth.size() != summary.grid.size()) throw std::invalid_argument("truth does not match the grid");
    std::size_t inside = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] >= summary.lower[curve][i] && truth[i] <= summary.upper[curve][i]) ++inside;
    }
    return static_cast<double>(inside) / static_cast<double>(truth.size());
}

std::vector<std::vector<double>> l2_deviation_trace(const PosteriorSamples& samples, int n) {
    if (samples.draws.size() < 2) throw std::invalid_argument("deviation trace needs two draws");
    const ModelSpec& spec = samples.spec;
    n = resolve_grid(samples, n);
    const CurveDesigns designs = make_designs(make_bases(spec), n, samples.horizon);
    const std::size_t pairs = samples.draws.size() / 2;
    const std::size_t curves = 1 + spec.p + spec.q;
    std::vector<std::vector<double>> trace(curves, std::vector<double>(pairs));
    const auto rms = [n](const std::vector<double>& x, const std::vector<double>& y) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
        return std::sqrt(s / n);
    };
    parallel_for(pairs, [&](std::size_t t) {
        const CoefficientCurves x = build_curves(spec, samples.draws[2 * t], designs);
        const CoefficientCurves y = build_curves(spec, samples.draws[2 * t + 1], designs);
        trace[0][t] = rms(x.mu, y.mu);
        for (int k = 0; k < spec.p; ++k) trace[1 + k][t] = rms(x.a[k], y.a[k]);
        for (int j = 0; j < spec.q; ++j) trace[1 + spec.p + j][t] = rms(x.b[j], y.b[j]);
    });
    return trace;
}

}  // namespace tvvol
