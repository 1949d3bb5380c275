#include "tvvol/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace tvvol {

void PriorHyper::validate() const {
    if (!(c1 > 0.0) || !(c2 > 0.0) || !(d1 > 0.0)) {
        throw std::invalid_argument("prior hyperparameters c1, c2, d1 must be positive");
    }
}

PosteriorModel::PosteriorModel(ModelSpec spec, std::span<const double> data, PriorHyper hyper,
                               int horizon)
    : spec_(spec),
      layout_(spec),
      hyper_(hyper),
      horizon_(horizon == 0 ? static_cast<int>(data.size()) : horizon),
      data_(data.begin(), data.end()) {
    spec_.validate();
    hyper_.validate();
    const int n = static_cast<int>(data_.size());
    if (n <= spec_.p) throw std::invalid_argument("series is too short for the lag order");
    if (horizon_ < n) throw std::invalid_argument("horizon must be at least the data length");
    for (std::size_t i = 0; i < data_.size(); ++i) {
        if (!std::isfinite(data_[i])) {
            throw std::invalid_argument("non-finite observation at index " + std::to_string(i + 1));
        }
    }
    sq_.resize(data_.size());
    std::transform(data_.begin(), data_.end(), sq_.begin(), [](double x) { return x * x; });
    const BasisSet bases = make_bases(spec_);
    d_mu_ = banded_design(bases.mu, n, horizon_);
    d_a_ = banded_design(bases.a, n, horizon_);
    d_b_ = banded_design(bases.b, n, horizon_);
}

namespace {

inline double dot4(const std::array<double, 4>& v, const double* c) {
    return v[0] * c[0] + v[1] * c[1] + v[2] * c[2] + v[3] * c[3];
}

inline void axpy4(double s, const std::array<double, 4>& v, double* out) {
    out[0] += s * v[0];
    out[1] += s * v[1];
    out[2] += s * v[2];
    out[3] += s * v[3];
}

}  // namespace

double PosteriorModel::evaluate(std::span<const double> coords, double* grad, bool want_value,
                                bool with_prior) const {
    if (static_cast<int>(coords.size()) != layout_.size) {
        throw std::invalid_argument("coordinate vector has wrong length");
    }
    constexpr double kInf = std::numeric_limits<double>::infinity();
    const int n = static_cast<int>(data_.size());
    const int p = spec_.p;
    const int q = spec_.q;
    const int qf = spec_.free_garch_curves();
    const int m = spec_.num_weights();
    const bool integrated = spec_.kind == ModelKind::TvIGarch;
    const int start = spec_.first_likelihood_index() - 1;

    const double* beta = coords.data() + layout_.beta;
    const double* theta = coords.data() + layout_.theta;
    const double* eta = coords.data() + layout_.eta;
    const double* delta = coords.data() + layout_.delta;
    const double log_s0 = spec_.has_garch_terms() ? coords[layout_.log_sigma0] : 0.0;
    const double s0 = std::exp(log_s0);

    std::vector<double> eb(spec_.k1);
    for (int j = 0; j < spec_.k1; ++j) eb[j] = std::exp(beta[j]);

    // Full softmax including the slack weight at index 0.
    std::vector<double> w(m + 1);
    {
        const double top = *std::max_element(delta, delta + m + 1);
        double total = 0.0;
        for (int l = 0; l <= m; ++l) total += (w[l] = std::exp(delta[l] - top));
        for (int l = 0; l <= m; ++l) w[l] /= total;
    }

    // Spline combinations before the softmax scaling, laid out [curve][i].
    std::vector<double> mu(n), base_a(static_cast<std::size_t>(p) * n),
        base_b(static_cast<std::size_t>(qf) * n), coef_b(static_cast<std::size_t>(q) * n);
    for (int i = 0; i < n; ++i) {
        mu[i] = dot4(d_mu_.values[i], eb.data() + d_mu_.first[i]);
        for (int k = 0; k < p; ++k) {
            base_a[k * n + i] = dot4(d_a_.values[i], theta + k * spec_.k2 + d_a_.first[i]);
        }
        double rest = 1.0;
        for (int k = 0; k < p; ++k) rest -= w[1 + k] * base_a[k * n + i];
        for (int j = 0; j < qf; ++j) {
            base_b[j * n + i] = dot4(d_b_.values[i], eta + j * spec_.k3 + d_b_.first[i]);
            coef_b[j * n + i] = w[1 + p + j] * base_b[j * n + i];
            rest -= coef_b[j * n + i];
        }
        if (integrated) coef_b[(q - 1) * n + i] = rest;
    }

    const auto sq_lag = [&](int i, int lag) { return i - lag >= 0 ? sq_[i - lag] : 0.0; };
    std::vector<double> var(n);
    const auto var_lag = [&](int i, int lag) {
        const int t = i - lag;  // 0-based index; -1 is the pre-sample sigma_0^2
        if (t >= 0) return var[t];
        return t == -1 ? s0 : 0.0;
    };

    for (int i = 0; i < n; ++i) {
        double s = mu[i];
        for (int k = 0; k < p; ++k) s += w[1 + k] * base_a[k * n + i] * sq_lag(i, k + 1);
        for (int j = 0; j < q; ++j) s += coef_b[j * n + i] * var_lag(i, j + 1);
        if (!(s > 0.0) || !std::isfinite(s)) return kInf;
        var[i] = s;
    }

    double value = 0.0;
    if (want_value) {
        for (int i = start; i < n; ++i) value += 0.5 * (std::log(var[i]) + sq_[i] / var[i]);
        if (with_prior) {
            double pb = 0.0;
            for (int j = 0; j < spec_.k1; ++j) pb += beta[j] * beta[j];
            double pd = 0.0;
            for (int l = 0; l <= m; ++l) pd += delta[l] * delta[l];
            value += pb / (2.0 * hyper_.c2) + pd / (2.0 * hyper_.c1);
            if (spec_.has_garch_terms()) {
                // Inverse-gamma density of sigma0^2 expressed on log scale
                // (includes the log-Jacobian).
                value += hyper_.d1 * log_s0 + hyper_.d1 * std::exp(-log_s0);
            }
        }
        if (!std::isfinite(value)) return kInf;
    }
    if (grad == nullptr) return value;

    // Adjoint sweep: lambda_i = dF/dsigma_i^2 including downstream feedback.
    std::vector<double> lambda(n, 0.0);
    for (int i = n - 1; i >= 0; --i) {
        double l = i >= start ? 0.5 * (1.0 - sq_[i] / var[i]) / var[i] : 0.0;
        for (int j = 1; j <= q && i + j < n; ++j) l += coef_b[(j - 1) * n + i + j] * lambda[i + j];
        lambda[i] = l;
    }

    std::fill(grad, grad + layout_.size, 0.0);
    double* g_beta = grad + layout_.beta;
    double* g_theta = grad + layout_.theta;
    double* g_eta = grad + layout_.eta;
    double* g_delta = grad + layout_.delta;
    std::vector<double> g_w(m + 1, 0.0);

    for (int i = 0; i < n; ++i) {
        const double li = lambda[i];
        if (li == 0.0) continue;
        axpy4(li, d_mu_.values[i], g_beta + d_mu_.first[i]);
        const double tail = integrated ? var_lag(i, q) : 0.0;
        for (int k = 0; k < p; ++k) {
            const double local = li * (sq_lag(i, k + 1) - tail);
            axpy4(w[1 + k] * local, d_a_.values[i], g_theta + k * spec_.k2 + d_a_.first[i]);
            g_w[1 + k] += local * base_a[k * n + i];
        }
        for (int j = 0; j < qf; ++j) {
            const double local = li * (var_lag(i, j + 1) - tail);
            axpy4(w[1 + p + j] * local, d_b_.values[i], g_eta + j * spec_.k3 + d_b_.first[i]);
            g_w[1 + p + j] += local * base_b[j * n + i];
        }
    }
    for (int j = 0; j < spec_.k1; ++j) g_beta[j] *= eb[j];

    // Softmax Jacobian: dM_k/ddelta_l = M_k (1{k=l} - M_l).
    double weighted = 0.0;
    for (int k = 1; k <= m; ++k) weighted += g_w[k] * w[k];
    for (int l = 0; l <= m; ++l) g_delta[l] = w[l] * (g_w[l] - weighted);

    if (spec_.has_garch_terms()) {
        // sigma_0^2 enters sigma_j^2 through b_j at 0-based index j-1.
        double d_s0 = 0.0;
        for (int j = 1; j <= q && j - 1 < n; ++j) d_s0 += lambda[j - 1] * coef_b[(j - 1) * n + j - 1];
        grad[layout_.log_sigma0] = d_s0 * s0;
    }

    if (with_prior) {
        for (int j = 0; j < spec_.k1; ++j) g_beta[j] += beta[j] / hyper_.c2;
        for (int l = 0; l <= m; ++l) g_delta[l] += delta[l] / hyper_.c1;
        if (spec_.has_garch_terms()) {
            grad[layout_.log_sigma0] += hyper_.d1 - hyper_.d1 * std::exp(-log_s0);
        }
    }
    return value;
}

double PosteriorModel::potential(std::span<const double> coords) const {
    return evaluate(coords, nullptr, true, true);
}

double PosteriorModel::potential_and_gradient(std::span<const double> coords,
                                              std::span<double> grad) const {
    if (static_cast<int>(grad.size()) != layout_.size) {
        throw std::invalid_argument("gradient buffer has wrong length");
    }
    return evaluate(coords, grad.data(), true, true);
}

bool PosteriorModel::gradient(std::span<const double> coords, std::span<double> grad) const {
    if (static_cast<int>(grad.size()) != layout_.size) {
        throw std::invalid_argument("gradient buffer has wrong length");
    }
    return std::isfinite(evaluate(coords, grad.data(), false, true));
}

double PosteriorModel::data_term(std::span<const double> coords) const {
    return evaluate(coords, nullptr, true, false);
}

double PosteriorModel::data_term_and_gradient(std::span<const double> coords,
                                              std::span<double> grad) const {
    if (static_cast<int>(grad.size()) != layout_.size) {
        throw std::invalid_argument("gradient buffer has wrong length");
    }
    return evaluate(coords, grad.data(), true, false);
}

double PosteriorModel::log_likelihood(std::span<const double> coords) const {
    const int terms = static_cast<int>(data_.size()) - (spec_.first_likelihood_index() - 1);
    return -data_term(coords) - 0.5 * std::log(2.0 * std::numbers::pi) * terms;
}

double neg_log_posterior(const ModelSpec& spec, const ParamVector& params,
                         std::span<const double> data, const PriorHyper& hyper) {
    validate_params(spec, params);
    const PosteriorModel model(spec, data, hyper);
    return model.potential(to_coordinates(spec, params));
}

Potential gradient(const ModelSpec& spec, const ParamVector& params, std::span<const double> data,
                   const PriorHyper& hyper) {
    validate_params(spec, params);
    const PosteriorModel model(spec, data, hyper);
    Potential out;
    out.grad.resize(model.dimension());
    out.value = model.potential_and_gradient(to_coordinates(spec, params), out.grad);
    return out;
}

}  // namespace tvvol
