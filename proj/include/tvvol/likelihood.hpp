#pragma once

#include "tvvol/spline_basis.hpp"
#include "tvvol/volatility_models.hpp"

#include <limits>
#include <span>
#include <vector>

namespace tvvol {

/// Prior hyperparameters: delta ~ N(0, c1), beta ~ N(0, c2),
/// sigma0^2 ~ InvGamma(shape d1, scale d1).
struct PriorHyper {
    double c1 = 100.0;
    double c2 = 100.0;
    double d1 = 2.0;

    void validate() const;
};

/// Negative log posterior kernel and its gradient over the flat sampling
/// coordinates (see ParamLayout). The last entry of `grad` is the derivative
/// with respect to log(sigma0^2) for GARCH kinds.
struct Potential {
    double value = 0.0;
    std::vector<double> grad;
};

/**
 * Gaussian conditional likelihood with spline coefficient curves.
 *
 * The data term is sum_i 0.5 * (log sigma_i^2 + X_i^2 / sigma_i^2) over the
 * likelihood range (i >= p+1 for tvARCH, i >= 1 otherwise). The gradient is
 * exact: the variance recursion is differentiated by an adjoint sweep, so
 * the GARCH feedback and sigma0^2 are handled without numerical Jacobians.
 *
 * Coefficient curves are evaluated at i/horizon. A horizon larger than the
 * data length fits a prefix of a longer series on the full time scale.
 * Instances are immutable after construction and safe to share.
 */
class PosteriorModel {
public:
    PosteriorModel(ModelSpec spec, std::span<const double> data, PriorHyper hyper, int horizon = 0);

    [[nodiscard]] const ModelSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] const ParamLayout& layout() const noexcept { return layout_; }
    [[nodiscard]] int dimension() const noexcept { return layout_.size; }
    [[nodiscard]] int horizon() const noexcept { return horizon_; }
    [[nodiscard]] std::span<const double> data() const noexcept { return data_; }

    /// Returns +inf when some conditional variance is not positive.
    [[nodiscard]] double potential(std::span<const double> coords) const;
    /// Value and gradient; `grad` must have dimension() entries.
    double potential_and_gradient(std::span<const double> coords, std::span<double> grad) const;
    /// Gradient only (skips the logarithms of the value). Returns false when
    /// some conditional variance is not positive.
    bool gradient(std::span<const double> coords, std::span<double> grad) const;

    /// Data term only: no priors, no 2*pi constant.
    [[nodiscard]] double data_term(std::span<const double> coords) const;
    double data_term_and_gradient(std::span<const double> coords, std::span<double> grad) const;

    /// Full Gaussian log-likelihood including the -0.5*log(2*pi) constants.
    [[nodiscard]] double log_likelihood(std::span<const double> coords) const;

private:
    double evaluate(std::span<const double> coords, double* grad, bool want_value,
                    bool with_prior) const;

    ModelSpec spec_;
    ParamLayout layout_;
    PriorHyper hyper_;
    int horizon_;
    std::vector<double> data_;
    std::vector<double> sq_;
    BandedDesign d_mu_;
    BandedDesign d_a_;
    BandedDesign d_b_;
};

[[nodiscard]] double neg_log_posterior(const ModelSpec& spec, const ParamVector& params,
                                       std::span<const double> data, const PriorHyper& hyper);

[[nodiscard]] Potential gradient(const ModelSpec& spec, const ParamVector& params,
                                 std::span<const double> data, const PriorHyper& hyper);

}  // namespace tvvol
