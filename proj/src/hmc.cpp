#include "tvvol/hmc.hpp"

#include "tvvol/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace tvvol {

void HmcConfig::validate() const {
    if (leapfrog_steps < 1) throw std::invalid_argument("leapfrog_steps must be >= 1");
    if (!(initial_step_size >= 0.0)) throw std::invalid_argument("step size must be >= 0");
    if (total_iters < 1) throw std::invalid_argument("total_iters must be >= 1");
    if (burn_in < 0 || burn_in >= total_iters) {
        throw std::invalid_argument("burn_in must satisfy 0 <= burn_in < total_iters");
    }
    if (adapt_window < 1) throw std::invalid_argument("adapt_window must be >= 1");
    if (!(target_accept_low > 0.0 && target_accept_low < target_accept_high &&
          target_accept_high < 1.0)) {
        throw std::invalid_argument("acceptance targets must satisfy 0 < low < high < 1");
    }
    if (!(adapt_factor > 1.0)) throw std::invalid_argument("adapt_factor must exceed 1");
}

HmcTarget make_target(const PosteriorModel& model) {
    HmcTarget t;
    t.dimension = model.dimension();
    t.value_and_gradient = [&model](std::span<const double> x, std::span<double> g) {
        return model.potential_and_gradient(x, g);
    };
    t.gradient = [&model](std::span<const double> x, std::span<double> g) {
        return model.gradient(x, g);
    };
    t.bounded.assign(t.dimension, 0);
    for (int i = 0; i < t.dimension; ++i) t.bounded[i] = model.layout().is_bounded(i) ? 1 : 0;
    return t;
}

namespace {

void reflect_into_unit(double& x, double& v) {
    // A long step can cross the interval more than once.
    while (x < 0.0 || x > 1.0) {
        if (x < 0.0) x = -x;
        if (x > 1.0) x = 2.0 - x;
        v = -v;
    }
}

bool clamp_bounded(const HmcTarget& target, std::span<double> position) {
    bool changed = false;
    for (int i = 0; i < target.dimension; ++i) {
        if (!target.bounded[i]) continue;
        const double c = std::clamp(position[i], 0.0, 1.0);
        changed |= c != position[i];
        position[i] = c;
    }
    return changed;
}

double kinetic(std::span<const double> momentum) {
    return 0.5 * std::inner_product(momentum.begin(), momentum.end(), momentum.begin(), 0.0);
}

}  // namespace

bool leapfrog(const HmcTarget& target, std::span<double> position, std::span<double> momentum,
              std::span<double> grad, double step_size, int steps, BoundaryMode mode) {
    const int d = target.dimension;
    for (int i = 0; i < d; ++i) momentum[i] -= 0.5 * step_size * grad[i];
    for (int s = 0; s < steps; ++s) {
        for (int i = 0; i < d; ++i) {
            position[i] += step_size * momentum[i];
            if (mode == BoundaryMode::Reflect && target.bounded[i]) {
                reflect_into_unit(position[i], momentum[i]);
            }
        }
        if (!target.gradient(position, grad)) return false;
        const double scale = s + 1 == steps ? 0.5 * step_size : step_size;
        for (int i = 0; i < d; ++i) momentum[i] -= scale * grad[i];
    }
    return true;
}

ChainResult run_hmc(const HmcTarget& target, std::vector<double> init, const HmcConfig& config) {
    config.validate();
    const int d = target.dimension;
    if (static_cast<int>(init.size()) != d) throw std::invalid_argument("init has wrong dimension");
    if (config.boundary == BoundaryMode::Clamp) clamp_bounded(target, init);

    std::vector<double> position = std::move(init);
    std::vector<double> grad(d);
    double energy = target.value_and_gradient(position, grad);
    if (!std::isfinite(energy)) {
        throw std::runtime_error("HMC initialization failed: potential is not finite at the initial "
                                 "position (check data scale and initial parameters)");
    }

    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    ChainResult out;
    out.seed = config.seed;
    out.draws.reserve(config.total_iters - config.burn_in);

    std::vector<double> prop(d), prop_grad(d), momentum(d);
    double step = config.initial_step_size;
    int window_accepts = 0;
    int window_count = 0;
    long retained_accepts = 0;

    for (int it = 0; it < config.total_iters; ++it) {
        for (auto& m : momentum) m = normal(rng);
        const double h0 = energy + kinetic(momentum);

        std::copy(position.begin(), position.end(), prop.begin());
        std::copy(grad.begin(), grad.end(), prop_grad.begin());
        double prop_energy = std::numeric_limits<double>::infinity();
        if (leapfrog(target, prop, momentum, prop_grad, step, config.leapfrog_steps,
                     config.boundary)) {
            if (config.boundary == BoundaryMode::Clamp) clamp_bounded(target, prop);
            prop_energy = target.value_and_gradient(prop, prop_grad);
        }
        const double h1 = prop_energy + kinetic(momentum);
        const double log_u = std::log(uniform(rng));
        const bool accept = std::isfinite(h1) && log_u < h0 - h1;
        if (accept) {
            position.swap(prop);
            grad.swap(prop_grad);
            energy = prop_energy;
        }

        window_accepts += accept ? 1 : 0;
        ++window_count;
        if (window_count == config.adapt_window) {
            const double rate = static_cast<double>(window_accepts) / window_count;
            out.accept_rate_trace.push_back(rate);
            out.step_size_trace.push_back(step);
            if (config.adapt && it + 1 <= config.burn_in) {
                if (rate < config.target_accept_low) step /= config.adapt_factor;
                if (rate > config.target_accept_high) step *= config.adapt_factor;
            }
            window_accepts = 0;
            window_count = 0;
        }
        if (it >= config.burn_in) {
            out.draws.push_back(position);
            retained_accepts += accept ? 1 : 0;
        }
    }
    out.accept_rate = static_cast<double>(retained_accepts) / (config.total_iters - config.burn_in);
    out.final_step_size = step;
    return out;
}

ParamVector default_init(const ModelSpec& spec, std::span<const double> data) {
    spec.validate();
    double var = 0.0;
    if (data.size() >= 2) {
        const double mean = std::accumulate(data.begin(), data.end(), 0.0) / data.size();
        for (double x : data) var += (x - mean) * (x - mean);
        var /= static_cast<double>(data.size() - 1);
    }
    if (!(var >= 1e-8)) {
        warn("sample variance below 1e-8; flooring to 1e-8 for initialization");
        var = 1e-8;
    }
    ParamVector p;
    p.beta.assign(spec.k1, std::log(0.5 * var));
    p.theta.assign(static_cast<std::size_t>(spec.p) * spec.k2, 0.5);
    p.eta.assign(static_cast<std::size_t>(spec.free_garch_curves()) * spec.k3, 0.5);
    p.delta.assign(spec.num_weights() + 1, 0.0);
    p.sigma0_sq = var;
    return p;
}

PosteriorSamples run_chain(const ModelSpec& spec, std::span<const double> data,
                           const PriorHyper& hyper, const HmcConfig& config,
                           const std::optional<ParamVector>& init, int horizon) {
    const PosteriorModel model(spec, data, hyper, horizon);
    const ParamVector start = init ? *init : default_init(spec, data);
    validate_params(spec, start);
    const HmcTarget target = make_target(model);
    ChainResult chain = run_hmc(target, to_coordinates(spec, start), config);

    PosteriorSamples s;
    s.spec = spec;
    s.horizon = model.horizon();
    s.seed = chain.seed;
    s.accept_rate = chain.accept_rate;
    s.accept_rate_trace = std::move(chain.accept_rate_trace);
    s.step_size_trace = std::move(chain.step_size_trace);
    s.draws.reserve(chain.draws.size());
    for (const auto& c : chain.draws) s.draws.push_back(from_coordinates(spec, c));
    return s;
}

std::vector<PosteriorSamples> run_chains(const ModelSpec& spec, std::span<const double> data,
                                         const PriorHyper& hyper, const HmcConfig& config,
                                         int chains, int horizon) {
    if (chains < 1) throw std::invalid_argument("need at least one chain");
    std::vector<PosteriorSamples> out(chains);
    parallel_for(static_cast<std::size_t>(chains), [&](std::size_t c) {
        HmcConfig cfg = config;
        cfg.seed = config.seed + c;
        out[c] = run_chain(spec, data, hyper, cfg, std::nullopt, horizon);
    });
    return out;
}

PosteriorSamples pool_chains(const std::vector<PosteriorSamples>& chains) {
    if (chains.empty()) throw std::invalid_argument("no chains to pool");
    PosteriorSamples pooled = chains.front();
    double accept = pooled.accept_rate * pooled.draws.size();
    std::size_t total = pooled.draws.size();
    for (std::size_t c = 1; c < chains.size(); ++c) {
        pooled.draws.insert(pooled.draws.end(), chains[c].draws.begin(), chains[c].draws.end());
        accept += chains[c].accept_rate * chains[c].draws.size();
        total += chains[c].draws.size();
    }
    pooled.accept_rate = total ? accept / total : 0.0;
    return pooled;
}

}  // namespace tvvol
