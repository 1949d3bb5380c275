#include "tvvol/volatility_models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tvvol {

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::TvArch: return "tvARCH";
        case ModelKind::TvGarch: return "tvGARCH";
        case ModelKind::TvIGarch: return "tviGARCH";
    }
    return "unknown";
}

ModelKind parse_model_kind(const std::string& name) {
    std::string s;
    for (char c : name) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (s.rfind("tv", 0) == 0) s = s.substr(2);
    if (s == "arch") return ModelKind::TvArch;
    if (s == "garch") return ModelKind::TvGarch;
    if (s == "igarch") return ModelKind::TvIGarch;
    throw std::invalid_argument("unknown model '" + name + "' (expected arch, garch or igarch)");
}

void ModelSpec::validate() const {
    if (p < 1) throw std::invalid_argument("ARCH order p must be >= 1");
    if (kind == ModelKind::TvArch && q != 0) {
        throw std::invalid_argument("tvARCH requires q = 0");
    }
    if (kind != ModelKind::TvArch && q < 1) {
        throw std::invalid_argument(to_string(kind) + " requires q >= 1");
    }
    if (k1 < 4 || k2 < 4 || k3 < 4) {
        throw std::invalid_argument("basis sizes k1, k2, k3 must be >= 4");
    }
}

int ModelSpec::free_garch_curves() const noexcept {
    switch (kind) {
        case ModelKind::TvArch: return 0;
        case ModelKind::TvGarch: return q;
        case ModelKind::TvIGarch: return q - 1;
    }
    return 0;
}

std::vector<std::string> ModelSpec::curve_names() const {
    std::vector<std::string> names{"mu"};
    for (int k = 1; k <= p; ++k) names.push_back("a" + std::to_string(k));
    for (int j = 1; j <= q; ++j) names.push_back("b" + std::to_string(j));
    return names;
}

ModelSpec make_spec(ModelKind kind, int p, int q, int interior_knots) {
    const int k = interior_knots + SplineBasis::kDegree + 1;
    ModelSpec spec{kind, p, q, k, k, k};
    spec.validate();
    return spec;
}

ParamLayout::ParamLayout(const ModelSpec& spec) {
    beta = 0;
    theta = beta + spec.k1;
    eta = theta + spec.p * spec.k2;
    delta = eta + spec.free_garch_curves() * spec.k3;
    size = delta + spec.num_weights() + 1;
    if (spec.has_garch_terms()) log_sigma0 = size++;
}

void validate_params(const ModelSpec& spec, const ParamVector& params) {
    const auto expect = [](std::size_t got, int want, const char* what) {
        if (got != static_cast<std::size_t>(want)) {
            throw std::invalid_argument(std::string("parameter block ") + what + " has size " +
                                        std::to_string(got) + ", expected " + std::to_string(want));
        }
    };
    expect(params.beta.size(), spec.k1, "beta");
    expect(params.theta.size(), spec.p * spec.k2, "theta");
    expect(params.eta.size(), spec.free_garch_curves() * spec.k3, "eta");
    expect(params.delta.size(), spec.num_weights() + 1, "delta");
    const auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!std::all_of(params.theta.begin(), params.theta.end(), in_unit) ||
        !std::all_of(params.eta.begin(), params.eta.end(), in_unit)) {
        throw std::invalid_argument("theta and eta entries must lie in [0,1]");
    }
    if (spec.has_garch_terms() && !(params.sigma0_sq > 0.0 && std::isfinite(params.sigma0_sq))) {
        throw std::invalid_argument("sigma0_sq must be positive and finite");
    }
}

std::vector<double> to_coordinates(const ModelSpec& spec, const ParamVector& params) {
    const ParamLayout layout(spec);
    std::vector<double> c;
    c.reserve(layout.size);
    c.insert(c.end(), params.beta.begin(), params.beta.end());
    c.insert(c.end(), params.theta.begin(), params.theta.end());
    c.insert(c.end(), params.eta.begin(), params.eta.end());
    c.insert(c.end(), params.delta.begin(), params.delta.end());
    if (spec.has_garch_terms()) c.push_back(std::log(params.sigma0_sq));
    if (static_cast<int>(c.size()) != layout.size) {
        throw std::invalid_argument("parameter dimensions do not match the model spec");
    }
    return c;
}

ParamVector from_coordinates(const ModelSpec& spec, std::span<const double> coords) {
    const ParamLayout layout(spec);
    if (static_cast<int>(coords.size()) != layout.size) {
        throw std::invalid_argument("coordinate vector has wrong length");
    }
    const auto block = [&](int from, int to) {
        return std::vector<double>(coords.begin() + from, coords.begin() + to);
    };
    ParamVector p;
    p.beta = block(layout.beta, layout.theta);
    p.theta = block(layout.theta, layout.eta);
    p.eta = block(layout.eta, layout.delta);
    p.delta = block(layout.delta, layout.delta + spec.num_weights() + 1);
    p.sigma0_sq = spec.has_garch_terms() ? std::exp(coords[layout.log_sigma0]) : 1.0;
    return p;
}

BasisSet make_bases(const ModelSpec& spec) {
    spec.validate();
    return BasisSet{SplineBasis(spec.k1 - 4), SplineBasis(spec.k2 - 4), SplineBasis(spec.k3 - 4)};
}

std::vector<double> softmax_weights(std::span<const double> delta) {
    if (delta.size() < 1) throw std::invalid_argument("softmax needs at least the slack logit");
    const double top = *std::max_element(delta.begin(), delta.end());
    double total = 0.0;
    std::vector<double> e(delta.size());
    for (std::size_t i = 0; i < delta.size(); ++i) {
        e[i] = std::exp(delta[i] - top);
        total += e[i];
    }
    std::vector<double> m(delta.size() - 1);
    for (std::size_t i = 1; i < delta.size(); ++i) m[i - 1] = e[i] / total;
    return m;
}

namespace {

std::vector<double> combine(const BandedDesign& d, std::span<const double> coef, double scale) {
    std::vector<double> out(d.rows());
    for (std::size_t i = 0; i < d.rows(); ++i) {
        const auto& v = d.values[i];
        const double* c = coef.data() + d.first[i];
        out[i] = scale * (v[0] * c[0] + v[1] * c[1] + v[2] * c[2] + v[3] * c[3]);
    }
    return out;
}

}  // namespace

namespace {

void check_dimensions(const ModelSpec& spec, const ParamVector& params) {
    if (params.beta.size() != static_cast<std::size_t>(spec.k1) ||
        params.theta.size() != static_cast<std::size_t>(spec.p * spec.k2) ||
        params.eta.size() != static_cast<std::size_t>(spec.free_garch_curves() * spec.k3) ||
        params.delta.size() != static_cast<std::size_t>(spec.num_weights() + 1)) {
        throw std::invalid_argument("parameter dimensions do not match the model spec");
    }
}

}  // namespace

CurveDesigns make_designs(const BasisSet& bases, int rows, int horizon, int first_row) {
    CurveDesigns d;
    d.mu = banded_design(bases.mu, rows, horizon, first_row);
    d.a = banded_design(bases.a, rows, horizon, first_row);
    d.b = banded_design(bases.b, rows, horizon, first_row);
    d.grid.resize(rows);
    for (int i = 0; i < rows; ++i) d.grid[i] = static_cast<double>(first_row + i + 1) / horizon;
    return d;
}

CoefficientCurves build_curves(const ModelSpec& spec, const ParamVector& params,
                               const CurveDesigns& designs) {
    check_dimensions(spec, params);
    if (designs.mu.num_basis != spec.k1 || designs.a.num_basis != spec.k2 ||
        designs.b.num_basis != spec.k3) {
        throw std::invalid_argument("basis sizes do not match the model spec");
    }
    const std::size_t n = designs.grid.size();
    const std::vector<double> weights = softmax_weights(params.delta);

    CoefficientCurves c;
    c.grid = designs.grid;
    std::vector<double> exp_beta(params.beta.size());
    std::transform(params.beta.begin(), params.beta.end(), exp_beta.begin(),
                   [](double b) { return std::exp(b); });
    c.mu = combine(designs.mu, exp_beta, 1.0);

    const std::span<const double> theta(params.theta);
    for (int k = 0; k < spec.p; ++k) {
        c.a.push_back(combine(designs.a, theta.subspan(k * spec.k2, spec.k2), weights[k]));
    }
    const std::span<const double> eta(params.eta);
    for (int j = 0; j < spec.free_garch_curves(); ++j) {
        c.b.push_back(combine(designs.b, eta.subspan(j * spec.k3, spec.k3), weights[spec.p + j]));
    }
    if (spec.kind == ModelKind::TvIGarch) {
        std::vector<double> last(n, 1.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (const auto& a : c.a) last[i] -= a[i];
            for (const auto& b : c.b) last[i] -= b[i];
        }
        c.b.push_back(std::move(last));
    }
    return c;
}

CoefficientCurves build_curves(const ModelSpec& spec, const ParamVector& params,
                               const BasisSet& bases, int n, int horizon) {
    spec.validate();
    if (horizon == 0) horizon = n;
    if (n < 1 || n > horizon) throw std::invalid_argument("curve grid needs 1 <= n <= horizon");
    check_dimensions(spec, params);
    if (bases.mu.num_basis() != spec.k1 || bases.a.num_basis() != spec.k2 ||
        bases.b.num_basis() != spec.k3) {
        throw std::invalid_argument("basis sizes do not match the model spec");
    }
    return build_curves(spec, params, make_designs(bases, n, horizon));
}

std::vector<double> coefficient_sum(const CoefficientCurves& curves) {
    std::vector<double> s(curves.size(), 0.0);
    for (std::size_t i = 0; i < s.size(); ++i) {
        for (const auto& a : curves.a) s[i] += a[i];
        for (const auto& b : curves.b) s[i] += b[i];
    }
    return s;
}

bool satisfies_constraints(const ModelSpec& spec, const CoefficientCurves& curves, double tol) {
    const auto nonneg = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return x >= 0.0; });
    };
    if (!std::all_of(curves.mu.begin(), curves.mu.end(), [](double x) { return x > 0.0; })) {
        return false;
    }
    for (const auto& a : curves.a) {
        if (!nonneg(a)) return false;
    }
    for (std::size_t j = 0; j < curves.b.size(); ++j) {
        // b_q of the integrated model is 1 - (others) and may round to -eps.
        const bool derived = spec.kind == ModelKind::TvIGarch && j + 1 == curves.b.size();
        for (double v : curves.b[j]) {
            if (v < (derived ? -tol : 0.0)) return false;
        }
    }
    const std::vector<double> sum = coefficient_sum(curves);
    if (spec.kind == ModelKind::TvIGarch) {
        return std::all_of(sum.begin(), sum.end(), [tol](double s) { return std::abs(s - 1.0) <= tol; });
    }
    return std::all_of(sum.begin(), sum.end(), [](double s) { return s < 1.0; });
}

std::vector<double> variance_recursion(const ModelSpec& spec, const CoefficientCurves& curves,
                                       std::span<const double> data, double sigma0_sq) {
    const std::size_t n = data.size();
    if (curves.size() < n) throw std::invalid_argument("curves do not cover the data");
    if (curves.a.size() != static_cast<std::size_t>(spec.p) ||
        curves.b.size() != static_cast<std::size_t>(spec.q)) {
        throw std::invalid_argument("curve count does not match the model spec");
    }
    if (spec.has_garch_terms() && !(sigma0_sq > 0.0)) {
        throw std::invalid_argument("sigma0_sq must be positive");
    }
    std::vector<double> var(n);
    // 1-based time t maps to index t-1; t = 0 is the pre-sample variance.
    const auto sq_lag = [&](std::size_t i, int lag) {
        const long t = static_cast<long>(i) + 1 - lag;
        return t >= 1 ? data[t - 1] * data[t - 1] : 0.0;
    };
    const auto var_lag = [&](std::size_t i, int lag) {
        const long t = static_cast<long>(i) + 1 - lag;
        if (t >= 1) return var[t - 1];
        return t == 0 ? sigma0_sq : 0.0;
    };
    for (std::size_t i = 0; i < n; ++i) {
        double s = curves.mu[i];
        for (int k = 0; k < spec.p; ++k) s += curves.a[k][i] * sq_lag(i, k + 1);
        for (int j = 0; j < spec.q; ++j) s += curves.b[j][i] * var_lag(i, j + 1);
        if (!(s > 0.0) || !std::isfinite(s)) {
            throw std::logic_error("conditional variance at t=" + std::to_string(i + 1) +
                                   " is not strictly positive and finite");
        }
        var[i] = s;
    }
    return var;
}

}  // namespace tvvol
