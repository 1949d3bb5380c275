#include "tvvol/kernel_baseline.hpp"

#include "tvvol/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace tvvol {

double epanechnikov(double x) noexcept {
    return std::abs(x) <= 1.0 ? 0.75 * (1.0 - x * x) : 0.0;
}

std::string to_string(FitStatus status) {
    switch (status) {
        case FitStatus::Converged: return "converged";
        case FitStatus::Stalled: return "stalled";
        case FitStatus::Failed: return "failed";
    }
    return "unknown";
}

namespace {

constexpr double kLogBound = 40.0;
// Strict stationarity margin for the non-integrated kinds.
constexpr double kStrictCap = 1.0 - 1e-6;

/// Euclidean projection onto {v >= 0, sum v <= cap}.
void project_capped_simplex(double* v, int len, double cap) {
    double total = 0.0;
    for (int i = 0; i < len; ++i) {
        v[i] = std::max(v[i], 0.0);
        total += v[i];
    }
    if (total <= cap) return;
    std::vector<double> sorted(v, v + len);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cumulative = 0.0;
    double shift = 0.0;
    for (int i = 0; i < len; ++i) {
        cumulative += sorted[i];
        const double candidate = (cumulative - cap) / (i + 1);
        if (i + 1 == len || sorted[i + 1] <= candidate) {
            shift = candidate;
            break;
        }
    }
    for (int i = 0; i < len; ++i) v[i] = std::max(v[i] - shift, 0.0);
}

/**
 * Local objective over z = (log mu, a_1..a_p, free b's, [log sigma0^2]).
 * Weights are normalised to sum to one over the likelihood range.
 */
class LocalObjective {
public:
    LocalObjective(const ModelSpec& spec, std::span<const double> data,
                   std::span<const double> weights)
        : spec_(spec), n_(static_cast<int>(data.size())), sq_(data.size()) {
        for (std::size_t i = 0; i < data.size(); ++i) sq_[i] = data[i] * data[i];
        free_b_ = spec.free_garch_curves();
        dim_ = 1 + spec.p + free_b_ + (spec.has_garch_terms() ? 1 : 0);
        w_.assign(data.size(), 0.0);
        const int first = spec.first_likelihood_index();
        double total = 0.0;
        lo_ = n_ + 1;
        hi_ = 0;
        for (int t = first; t <= n_; ++t) {
            const double w = weights.empty() ? 1.0 : weights[t - 1];
            if (w < 0.0 || !std::isfinite(w)) throw std::invalid_argument("invalid kernel weight");
            if (w > 0.0) {
                w_[t - 1] = w;
                total += w;
                lo_ = std::min(lo_, t);
                hi_ = t;
            }
        }
        if (!(total > 0.0)) throw std::invalid_argument("kernel weights vanish on the likelihood range");
        for (double& w : w_) w /= total;
        cap_ = spec.kind == ModelKind::TvIGarch ? 1.0 : kStrictCap;
    }

    [[nodiscard]] int dim() const noexcept { return dim_; }
    /// Coordinates [block_begin, block_end) live on the capped simplex.
    [[nodiscard]] int block_begin() const noexcept { return 1; }
    [[nodiscard]] int block_end() const noexcept { return 1 + spec_.p + free_b_; }
    [[nodiscard]] double cap() const noexcept { return cap_; }

    void project(std::vector<double>& z) const {
        z[0] = std::clamp(z[0], -kLogBound, kLogBound);
        project_capped_simplex(z.data() + 1, spec_.p + free_b_, cap_);
        if (spec_.has_garch_terms()) z[dim_ - 1] = std::clamp(z[dim_ - 1], -kLogBound, kLogBound);
    }

    [[nodiscard]] std::vector<double> pack(const ConstantParams& c) const {
        std::vector<double> z(dim_);
        z[0] = std::log(std::max(c.mu, 1e-300));
        for (int k = 0; k < spec_.p; ++k) z[1 + k] = c.a.at(k);
        for (int j = 0; j < free_b_; ++j) z[1 + spec_.p + j] = c.b.at(j);
        if (spec_.has_garch_terms()) z[dim_ - 1] = std::log(std::max(c.sigma0_sq, 1e-300));
        return z;
    }

    [[nodiscard]] ConstantParams unpack(std::span<const double> z) const {
        ConstantParams c;
        c.mu = std::exp(z[0]);
        c.a.assign(z.begin() + 1, z.begin() + 1 + spec_.p);
        c.b.assign(z.begin() + 1 + spec_.p, z.begin() + 1 + spec_.p + free_b_);
        if (spec_.kind == ModelKind::TvIGarch) {
            double rest = 1.0;
            for (double v : c.a) rest -= v;
            for (double v : c.b) rest -= v;
            c.b.push_back(std::max(rest, 0.0));
        }
        c.sigma0_sq = spec_.has_garch_terms() ? std::exp(z[dim_ - 1]) : 0.0;
        return c;
    }

    double operator()(std::span<const double> z, std::vector<double>& grad) const {
        const ConstantParams c = unpack(z);
        const int p = spec_.p;
        const int q = spec_.q;
        const bool integrated = spec_.kind == ModelKind::TvIGarch;
        grad.assign(dim_, 0.0);
        double f = 0.0;
        if (!spec_.has_garch_terms()) {
            for (int t = lo_; t <= hi_; ++t) {
                const double w = w_[t - 1];
                if (w == 0.0) continue;
                double v = c.mu;
                for (int k = 1; k <= p; ++k) v += c.a[k - 1] * sq_lag(t, k);
                f += 0.5 * w * (std::log(v) + sq_[t - 1] / v);
                const double dv = 0.5 * w * (1.0 / v - sq_[t - 1] / (v * v));
                grad[0] += dv * c.mu;
                for (int k = 1; k <= p; ++k) grad[k] += dv * sq_lag(t, k);
            }
            return f;
        }
        // Forward sensitivities of the variance recursion; row t holds
        // d sigma_t^2 / dz, row 0 is the pre-sample variance.
        var_.assign(hi_ + 1, 0.0);
        dvar_.assign(static_cast<std::size_t>(hi_ + 1) * dim_, 0.0);
        var_[0] = c.sigma0_sq;
        dvar_[dim_ - 1] = c.sigma0_sq;
        const auto var_lag = [&](int t, int lag) { return t - lag >= 0 ? var_[t - lag] : 0.0; };
        for (int t = 1; t <= hi_; ++t) {
            double v = c.mu;
            for (int k = 1; k <= p; ++k) v += c.a[k - 1] * sq_lag(t, k);
            for (int j = 1; j <= q; ++j) v += c.b[j - 1] * var_lag(t, j);
            var_[t] = v;
            double* row = &dvar_[static_cast<std::size_t>(t) * dim_];
            const double last = integrated ? var_lag(t, q) : 0.0;
            row[0] = c.mu;
            for (int k = 1; k <= p; ++k) row[k] = sq_lag(t, k) - last;
            for (int j = 1; j <= free_b_; ++j) row[p + j] = var_lag(t, j) - last;
            for (int j = 1; j <= q; ++j) {
                if (t - j < 0 || c.b[j - 1] == 0.0) continue;
                const double* prev = &dvar_[static_cast<std::size_t>(t - j) * dim_];
                for (int d = 0; d < dim_; ++d) row[d] += c.b[j - 1] * prev[d];
            }
            const double w = w_[t - 1];
            if (w == 0.0) continue;
            f += 0.5 * w * (std::log(v) + sq_[t - 1] / v);
            const double dv = 0.5 * w * (1.0 / v - sq_[t - 1] / (v * v));
            for (int d = 0; d < dim_; ++d) grad[d] += dv * row[d];
        }
        return f;
    }

private:
    [[nodiscard]] double sq_lag(int t, int lag) const { return t - lag >= 1 ? sq_[t - lag - 1] : 0.0; }

    ModelSpec spec_;
    int n_;
    std::vector<double> sq_;
    std::vector<double> w_;
    int free_b_ = 0;
    int dim_ = 0;
    int lo_ = 0;
    int hi_ = 0;
    double cap_ = 1.0;
    mutable std::vector<double> var_;
    mutable std::vector<double> dvar_;
};

double projected_gradient_norm(const LocalObjective& obj, const std::vector<double>& z,
                               const std::vector<double>& g) {
    std::vector<double> trial(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) trial[i] = z[i] - g[i];
    obj.project(trial);
    double norm = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) norm = std::max(norm, std::abs(trial[i] - z[i]));
    return norm;
}

/**
 * Projected BFGS. The quasi-Newton direction is restricted to the face of
 * the feasible set picked out by the currently binding constraints, and the
 * inverse Hessian is reset whenever that face changes. Steps use Armijo
 * backtracking along the projection arc.
 */
std::vector<double> minimize(const LocalObjective& obj, std::vector<double> z,
                             const OptimizerOptions& options, PointFit& report) {
    const int d = obj.dim();
    const int b0 = obj.block_begin();
    const int b1 = obj.block_end();
    obj.project(z);
    std::vector<double> g;
    double f = obj(z, g);
    if (!std::isfinite(f)) {
        report = {FitStatus::Failed, 0, f, INFINITY};
        return z;
    }

    // Binding constraints: coordinates held at zero, and the cap on the sum.
    std::vector<char> at_zero(d, 0);
    bool cap_active = false;
    const auto find_active = [&] {
        std::vector<char> zero(d, 0);
        double sum = 0.0;
        for (int i = b0; i < b1; ++i) {
            sum += z[i];
            zero[i] = z[i] <= 1e-12 && g[i] > 0.0;
        }
        bool cap = false;
        if (b1 > b0 && sum >= obj.cap() - 1e-10) {
            double mean = 0.0;
            int free = 0;
            for (int i = b0; i < b1; ++i) {
                if (!zero[i]) {
                    mean += g[i];
                    ++free;
                }
            }
            cap = free > 0 && mean / free < 0.0;
        }
        const bool changed = zero != at_zero || cap != cap_active;
        at_zero = std::move(zero);
        cap_active = cap;
        return changed;
    };
    const auto tangent = [&](std::vector<double>& v) {
        double mean = 0.0;
        int free = 0;
        for (int i = b0; i < b1; ++i) {
            if (at_zero[i]) {
                v[i] = 0.0;
            } else {
                mean += v[i];
                ++free;
            }
        }
        if (cap_active && free > 0) {
            mean /= free;
            for (int i = b0; i < b1; ++i) {
                if (!at_zero[i]) v[i] -= mean;
            }
        }
    };

    std::vector<double> h(static_cast<std::size_t>(d) * d, 0.0);
    bool identity = true;
    const auto reset = [&] {
        std::fill(h.begin(), h.end(), 0.0);
        for (int i = 0; i < d; ++i) h[static_cast<std::size_t>(i) * d + i] = 1.0;
        identity = true;
    };
    reset();
    find_active();

    int flat_steps = 0;
    int iter = 0;
    double pg = projected_gradient_norm(obj, z, g);
    std::vector<double> gt(d), dir(d), trial(d), step(d), g_trial, y(d), hy(d);
    for (; iter < options.max_iterations && pg >= options.gradient_tolerance; ++iter) {
        gt = g;
        tangent(gt);
        for (int i = 0; i < d; ++i) {
            double s = 0.0;
            for (int j = 0; j < d; ++j) s -= h[static_cast<std::size_t>(i) * d + j] * gt[j];
            dir[i] = s;
        }
        tangent(dir);
        bool accepted = false;
        double f_trial = f;
        double t = 1.0;
        const auto try_step = [&](double scale, std::vector<double>& point, std::vector<double>& grad,
                                  double& value) {
            for (int i = 0; i < d; ++i) point[i] = z[i] + scale * dir[i];
            obj.project(point);
            double slope = 0.0;
            for (int i = 0; i < d; ++i) slope += g[i] * (point[i] - z[i]);
            if (slope >= 0.0) return false;
            value = obj(point, grad);
            return std::isfinite(value) && value <= f + 1e-4 * slope;
        };
        for (; t > 1e-14; t *= 0.5) {
            if (try_step(t, trial, g_trial, f_trial)) {
                accepted = true;
                break;
            }
        }
        if (accepted && t == 1.0) {
            // Unit step accepted: keep doubling while the objective keeps
            // falling, which matters where the curvature is negative.
            std::vector<double> far(d), g_far;
            double f_far = f;
            for (int k = 0; k < 30 && try_step(2.0 * t, far, g_far, f_far) && f_far < f_trial; ++k) {
                t *= 2.0;
                trial = far;
                g_trial = g_far;
                f_trial = f_far;
            }
        }
        for (int i = 0; i < d; ++i) step[i] = trial[i] - z[i];
        if (!accepted) {
            if (identity) break;
            reset();
            continue;
        }
        const double improvement = f - f_trial;
        z = trial;
        f = f_trial;
        for (int i = 0; i < d; ++i) y[i] = g_trial[i] - g[i];
        g = g_trial;
        if (find_active()) {
            reset();
        } else {
            tangent(y);
            double sy = 0.0, yy = 0.0, ss = 0.0;
            for (int i = 0; i < d; ++i) {
                sy += step[i] * y[i];
                yy += y[i] * y[i];
                ss += step[i] * step[i];
            }
            if (sy > 1e-12 * std::sqrt(yy * ss)) {
                // Scale the initial inverse Hessian before the first update.
                if (identity) {
                    for (double& v : h) v *= sy / yy;
                }
                for (int i = 0; i < d; ++i) {
                    double s = 0.0;
                    for (int j = 0; j < d; ++j) s += h[static_cast<std::size_t>(i) * d + j] * y[j];
                    hy[i] = s;
                }
                const double yhy = std::inner_product(y.begin(), y.end(), hy.begin(), 0.0);
                const double rho = 1.0 / sy;
                for (int i = 0; i < d; ++i) {
                    for (int j = 0; j < d; ++j) {
                        h[static_cast<std::size_t>(i) * d + j] +=
                            (1.0 + yhy * rho) * rho * step[i] * step[j] -
                            rho * (hy[i] * step[j] + step[i] * hy[j]);
                    }
                }
                identity = false;
            } else {
                reset();
            }
        }
        pg = projected_gradient_norm(obj, z, g);
        flat_steps = improvement <= 1e-15 * (1.0 + std::abs(f)) ? flat_steps + 1 : 0;
        if (flat_steps >= 3) {
            ++iter;
            break;
        }
    }
    FitStatus status = FitStatus::Converged;
    if (pg >= options.gradient_tolerance) status = pg < 1e-4 ? FitStatus::Stalled : FitStatus::Failed;
    report = {status, iter, f, pg};
    return z;
}

ConstantParams resolve(const ModelSpec& spec, ConstantParams c) {
    if (spec.kind == ModelKind::TvIGarch) c.b.resize(spec.q - 1);
    return c;
}

double mean_square(std::span<const double> data) {
    double s = 0.0;
    for (double x : data) s += x * x;
    return std::max(s / static_cast<double>(data.size()), 1e-8);
}

std::vector<ConstantParams> starting_points(const ModelSpec& spec, std::span<const double> data) {
    const double m2 = mean_square(data);
    std::vector<ConstantParams> starts;
    const auto make = [&](double a_total, double b_total) {
        ConstantParams c;
        c.a.assign(spec.p, a_total / spec.p);
        if (spec.q > 0) c.b.assign(spec.q, b_total / spec.q);
        c.mu = spec.kind == ModelKind::TvIGarch ? 0.1 * m2 : m2 * (1.0 - a_total - b_total);
        c.sigma0_sq = spec.has_garch_terms() ? m2 : 0.0;
        starts.push_back(c);
    };
    switch (spec.kind) {
        case ModelKind::TvArch:
            make(0.1, 0.0);
            make(0.5, 0.0);
            break;
        case ModelKind::TvGarch:
            make(0.05, 0.9);
            make(0.2, 0.5);
            make(0.1, 0.1);
            break;
        case ModelKind::TvIGarch:
            make(0.1, 0.9);
            make(0.4, 0.6);
            break;
    }
    return starts;
}

}  // namespace

ConstantParams weighted_fit(const ModelSpec& spec, std::span<const double> data,
                            std::span<const double> weights, const ConstantParams& start,
                            PointFit* report, const OptimizerOptions& options) {
    spec.validate();
    if (!weights.empty() && weights.size() != data.size()) {
        throw std::invalid_argument("weights must match the series length");
    }
    if (data.size() <= static_cast<std::size_t>(spec.p)) {
        throw std::invalid_argument("series is too short for the lag order");
    }
    const LocalObjective obj(spec, data, weights);
    PointFit local;
    const std::vector<double> z = minimize(obj, obj.pack(resolve(spec, start)), options, local);
    if (report != nullptr) *report = local;
    return obj.unpack(z);
}

double weighted_objective(const ModelSpec& spec, std::span<const double> data,
                          std::span<const double> weights, const ConstantParams& params) {
    spec.validate();
    if (!weights.empty() && weights.size() != data.size()) {
        throw std::invalid_argument("weights must match the series length");
    }
    const LocalObjective obj(spec, data, weights);
    std::vector<double> grad;
    return obj(obj.pack(resolve(spec, params)), grad);
}

std::vector<double> constant_variances(const ModelSpec& spec, const ConstantParams& params,
                                       std::span<const double> data) {
    const int n = static_cast<int>(data.size());
    std::vector<double> var(n);
    for (int t = 1; t <= n; ++t) {
        double v = params.mu;
        for (int k = 1; k <= spec.p; ++k) {
            if (t - k >= 1) v += params.a[k - 1] * data[t - k - 1] * data[t - k - 1];
        }
        for (int j = 1; j <= spec.q; ++j) {
            const double prev = t - j >= 1 ? var[t - j - 1] : (t - j == 0 ? params.sigma0_sq : 0.0);
            v += params.b[j - 1] * prev;
        }
        var[t - 1] = v;
    }
    return var;
}

ConstantParams constant_mle(const ModelSpec& spec, std::span<const double> data) {
    spec.validate();
    const std::size_t min_len = 10 * static_cast<std::size_t>(spec.p + spec.q + 1);
    if (data.size() <= min_len) {
        throw std::invalid_argument("constant fit needs more than " + std::to_string(min_len) +
                                    " observations");
    }
    ConstantParams best;
    PointFit best_report{FitStatus::Failed, 0, INFINITY, INFINITY};
    std::string diagnostics;
    for (const ConstantParams& start : starting_points(spec, data)) {
        PointFit report;
        ConstantParams fit = weighted_fit(spec, data, {}, start, &report);
        diagnostics += " [" + to_string(report.status) + ", objective " +
                       std::to_string(report.objective) + ", projected gradient " +
                       std::to_string(report.projected_gradient) + "]";
        if (report.status == FitStatus::Failed) continue;
        if (best_report.status == FitStatus::Failed || report.objective < best_report.objective) {
            best = std::move(fit);
            best_report = report;
        }
    }
    if (best_report.status == FitStatus::Failed) {
        throw std::runtime_error("constant fit did not converge from any start:" + diagnostics);
    }
    return best;
}

CoefficientCurves constant_curves(const ModelSpec& spec, const ConstantParams& params,
                                  std::span<const double> grid) {
    CoefficientCurves c;
    const std::size_t n = grid.size();
    c.grid.assign(grid.begin(), grid.end());
    c.mu.assign(n, params.mu);
    for (int k = 0; k < spec.p; ++k) c.a.emplace_back(n, params.a.at(k));
    for (int j = 0; j < spec.q; ++j) c.b.emplace_back(n, params.b.at(j));
    return c;
}

CoefficientCurves constant_fit(const ModelSpec& spec, std::span<const double> data) {
    const ConstantParams params = constant_mle(spec, data);
    return constant_curves(spec, params, unit_grid(static_cast<int>(data.size())));
}

std::vector<double> unit_grid(int n) {
    if (n < 1) throw std::invalid_argument("grid size must be positive");
    std::vector<double> grid(n);
    for (int i = 0; i < n; ++i) grid[i] = static_cast<double>(i + 1) / n;
    return grid;
}

std::vector<double> kernel_weights(double t, double bandwidth, int n) {
    std::vector<double> w(n);
    for (int i = 1; i <= n; ++i) {
        const double u = (t - static_cast<double>(i) / n) / bandwidth;
        // Points at exactly one bandwidth get no weight.
        w[i - 1] = std::abs(u) >= 1.0 ? 0.0 : epanechnikov(u) / bandwidth;
    }
    return w;
}

KernelFit kernel_fit(const ModelSpec& spec, std::span<const double> data, double bandwidth,
                     std::span<const double> grid, const KernelOptions& options) {
    spec.validate();
    if (!(bandwidth > 0.0) || (!options.uniform_kernel && !(bandwidth < 1.0))) {
        throw std::invalid_argument("bandwidth must lie in (0, 1)");
    }
    if (grid.empty()) throw std::invalid_argument("kernel grid is empty");
    for (double t : grid) {
        if (!(t > 0.0 && t <= 1.0)) throw std::invalid_argument("kernel grid must lie in (0, 1]");
    }
    const int n = static_cast<int>(data.size());
    const ConstantParams warm = constant_mle(spec, data);

    std::vector<ConstantParams> local(grid.size());
    std::vector<PointFit> trace(grid.size());
    parallel_for(grid.size(), [&](std::size_t g) {
        std::vector<double> w =
            options.uniform_kernel ? std::vector<double>(n, 1.0) : kernel_weights(grid[g], bandwidth, n);
        const int first = spec.first_likelihood_index();
        const bool any = std::any_of(w.begin() + (first - 1), w.end(), [](double v) { return v > 0.0; });
        if (!any) {
            trace[g] = {FitStatus::Failed, 0, INFINITY, INFINITY};
            return;
        }
        local[g] = weighted_fit(spec, data, w, warm, &trace[g], options.optimizer);
    });

    std::vector<std::size_t> good;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        if (trace[g].status != FitStatus::Failed) good.push_back(g);
    }
    if (good.empty()) throw std::runtime_error("kernel fit failed at every grid point");
    const std::size_t failed = grid.size() - good.size();
    if (failed > 0) {
        warn("kernel fit: optimizer failed at " + std::to_string(failed) +
             " grid point(s); values carried from the nearest converged neighbour");
        for (std::size_t g = 0; g < grid.size(); ++g) {
            if (trace[g].status != FitStatus::Failed) continue;
            const auto it = std::lower_bound(good.begin(), good.end(), g);
            std::size_t pick;
            if (it == good.end()) {
                pick = good.back();
            } else if (it == good.begin()) {
                pick = *it;
            } else {
                pick = (*it - g) < (g - *(it - 1)) ? *it : *(it - 1);
            }
            local[g] = local[pick];
        }
    }

    KernelFit fit;
    fit.grid.assign(grid.begin(), grid.end());
    fit.bandwidth = bandwidth;
    fit.objective_trace = std::move(trace);
    fit.curves.grid = fit.grid;
    fit.curves.mu.resize(grid.size());
    fit.curves.a.assign(spec.p, std::vector<double>(grid.size()));
    fit.curves.b.assign(spec.q, std::vector<double>(grid.size()));
    fit.sigma0_sq.resize(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
        fit.curves.mu[g] = local[g].mu;
        for (int k = 0; k < spec.p; ++k) fit.curves.a[k][g] = local[g].a[k];
        for (int j = 0; j < spec.q; ++j) fit.curves.b[j][g] = local[g].b[j];
        fit.sigma0_sq[g] = spec.has_garch_terms() ? local[g].sigma0_sq : 0.0;
    }
    return fit;
}

std::vector<double> default_bandwidths() { return {0.05, 0.1, 0.15, 0.2, 0.3}; }

double bandwidth_cv_score(const ModelSpec& spec, std::span<const double> data, double bandwidth,
                          double max_bandwidth) {
    spec.validate();
    const int n = static_cast<int>(data.size());
    const int block = std::max(1, n / 50);
    int start = std::max(spec.first_likelihood_index() + 1,
                         static_cast<int>(std::ceil(max_bandwidth * n)) + 1);
    start = std::min(start, n / 2);
    start = std::max(start, spec.first_likelihood_index() + 1);
    const ConstantParams initial = starting_points(spec, data).front();

    std::vector<int> block_starts;
    for (int t = start; t <= n; t += block) block_starts.push_back(t);
    std::vector<double> scores(block_starts.size(), 0.0);
    std::vector<int> counts(block_starts.size(), 0);
    parallel_for(block_starts.size(), [&](std::size_t b) {
        const int t0 = block_starts[b];
        const int t1 = std::min(n, t0 + block - 1);
        // Only observations strictly before the block carry weight.
        std::vector<double> w = kernel_weights(static_cast<double>(t0) / n, bandwidth, n);
        std::fill(w.begin() + (t0 - 1), w.end(), 0.0);
        const ConstantParams fit = weighted_fit(spec, data, w, initial);
        const std::vector<double> var = constant_variances(spec, fit, data.first(t1));
        for (int t = t0; t <= t1; ++t) {
            const double v = var[t - 1];
            scores[b] += -0.5 * (std::log(2.0 * std::numbers::pi * v) + data[t - 1] * data[t - 1] / v);
            ++counts[b];
        }
    });
    const double total = std::accumulate(scores.begin(), scores.end(), 0.0);
    const int count = std::accumulate(counts.begin(), counts.end(), 0);
    return total / std::max(count, 1);
}

double select_bandwidth(const ModelSpec& spec, std::span<const double> data,
                        std::span<const double> candidates) {
    if (candidates.empty()) throw std::invalid_argument("no bandwidth candidates");
    for (double h : candidates) {
        if (!(h > 0.0 && h < 1.0)) throw std::invalid_argument("bandwidth candidates must lie in (0, 1)");
    }
    if (candidates.size() == 1) return candidates.front();
    const double widest = *std::max_element(candidates.begin(), candidates.end());
    double best = candidates.front();
    double best_score = -INFINITY;
    for (double h : candidates) {
        const double score = bandwidth_cv_score(spec, data, h, widest);
        if (score > best_score || (score == best_score && h > best)) {
            best = h;
            best_score = score;
        }
    }
    return best;
}

}  // namespace tvvol
