#pragma once

#include "tvvol/spline_basis.hpp"

#include <span>
#include <string>
#include <vector>

namespace tvvol {

enum class ModelKind { TvArch, TvGarch, TvIGarch };

[[nodiscard]] std::string to_string(ModelKind kind);
/// Accepts "arch", "garch", "igarch" (and the tv-prefixed spellings).
[[nodiscard]] ModelKind parse_model_kind(const std::string& name);

/**
 * Model family, lag orders and spline resolution.
 *
 * k1, k2, k3 are basis sizes (interior knots + 4) for the intercept curve,
 * the ARCH curves and the GARCH curves respectively.
 */
struct ModelSpec {
    ModelKind kind = ModelKind::TvArch;
    int p = 1;
    int q = 0;
    int k1 = 8;
    int k2 = 8;
    int k3 = 8;

    /// Throws std::invalid_argument when lag orders or basis sizes are inconsistent.
    void validate() const;

    [[nodiscard]] bool has_garch_terms() const noexcept { return kind != ModelKind::TvArch; }
    /// Number of free GARCH curves: q, or q-1 for the integrated model.
    [[nodiscard]] int free_garch_curves() const noexcept;
    /// Number of softmax weights M_1..M_m (the slack weight M_0 is not counted).
    [[nodiscard]] int num_weights() const noexcept { return p + free_garch_curves(); }
    /// First observation (1-based) that enters the likelihood.
    [[nodiscard]] int first_likelihood_index() const noexcept {
        return kind == ModelKind::TvArch ? p + 1 : 1;
    }
    /// Coefficient curve names in output order: mu, a1..ap, b1..bq.
    [[nodiscard]] std::vector<std::string> curve_names() const;
};

/// Convenience constructor: same interior knot count for all three families.
[[nodiscard]] ModelSpec make_spec(ModelKind kind, int p, int q, int interior_knots);

/**
 * Sampling parameters.
 *
 * theta is p x k2 and eta is q' x k3, both row-major. delta holds the m+1
 * softmax logits with the slack logit first. sigma0_sq is only meaningful
 * for GARCH kinds.
 */
struct ParamVector {
    std::vector<double> beta;
    std::vector<double> theta;
    std::vector<double> eta;
    std::vector<double> delta;
    double sigma0_sq = 1.0;
};

/// Offsets of each block inside the flat coordinate vector. The order is
/// beta, theta, eta, delta, then log(sigma0_sq) for GARCH kinds.
struct ParamLayout {
    explicit ParamLayout(const ModelSpec& spec);

    int beta = 0;
    int theta = 0;
    int eta = 0;
    int delta = 0;
    int log_sigma0 = -1;
    int size = 0;

    [[nodiscard]] bool is_bounded(int index) const noexcept {
        return index >= theta && index < delta;
    }
};

/// Throws std::invalid_argument on dimension mismatch or violated bounds.
void validate_params(const ModelSpec& spec, const ParamVector& params);

[[nodiscard]] std::vector<double> to_coordinates(const ModelSpec& spec, const ParamVector& params);
[[nodiscard]] ParamVector from_coordinates(const ModelSpec& spec, std::span<const double> coords);

struct BasisSet {
    SplineBasis mu;
    SplineBasis a;
    SplineBasis b;
};

[[nodiscard]] BasisSet make_bases(const ModelSpec& spec);

/// Coefficient functions sampled at i/horizon, i = 1..n.
struct CoefficientCurves {
    std::vector<double> grid;
    std::vector<double> mu;
    std::vector<std::vector<double>> a;
    std::vector<std::vector<double>> b;

    [[nodiscard]] std::size_t size() const noexcept { return grid.size(); }
};

/// Basis rows of the three coefficient families at grid points
/// (first_row+i+1)/horizon, shared across many parameter draws.
struct CurveDesigns {
    std::vector<double> grid;
    BandedDesign mu;
    BandedDesign a;
    BandedDesign b;
};

[[nodiscard]] CurveDesigns make_designs(const BasisSet& bases, int rows, int horizon,
                                        int first_row = 0);

/// M_i = exp(delta_i) / sum_{k=0}^{m} exp(delta_k) for i = 1..m.
[[nodiscard]] std::vector<double> softmax_weights(std::span<const double> delta);

[[nodiscard]] CoefficientCurves build_curves(const ModelSpec& spec, const ParamVector& params,
                                             const BasisSet& bases, int n, int horizon = 0);

/// build_curves on precomputed designs.
[[nodiscard]] CoefficientCurves build_curves(const ModelSpec& spec, const ParamVector& params,
                                             const CurveDesigns& designs);

/// Pointwise sum of all a_k and b_j curves.
[[nodiscard]] std::vector<double> coefficient_sum(const CoefficientCurves& curves);

/// Checks mu > 0, a, b >= 0 and the sum constraint of the model kind:
/// sum < 1 everywhere for tvARCH/tvGARCH, |sum - 1| <= tol for tviGARCH.
[[nodiscard]] bool satisfies_constraints(const ModelSpec& spec, const CoefficientCurves& curves,
                                         double tol = 1e-12);

/**
 * Conditional variances sigma_i^2, i = 1..data.size().
 *
 * Pre-sample values are zero: X_t^2 = 0 for t <= 0 and sigma_t^2 = 0 for
 * t < 0, with sigma_0^2 = sigma0_sq for GARCH kinds. Curves must cover at
 * least data.size() grid points. Throws std::logic_error if a variance is
 * not strictly positive and finite.
 */
[[nodiscard]] std::vector<double> variance_recursion(const ModelSpec& spec,
                                                     const CoefficientCurves& curves,
                                                     std::span<const double> data,
                                                     double sigma0_sq);

}  // namespace tvvol
