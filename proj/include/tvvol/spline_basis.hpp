#pragma once

#include "tvvol/matrix.hpp"

#include <array>
#include <cstddef>
#include <vector>

namespace tvvol {

/**
 * Clamped cubic B-spline basis on [0,1] with equidistant interior knots.
 *
 * The knot vector carries multiplicity 4 at both ends, so the first basis
 * function equals 1 at x=0 and the last equals 1 at x=1. With no interior
 * knots the basis reduces to the cubic Bernstein polynomials.
 */
class SplineBasis {
public:
    static constexpr int kDegree = 3;

    explicit SplineBasis(int num_interior_knots);

    [[nodiscard]] int degree() const noexcept { return kDegree; }
    [[nodiscard]] int num_basis() const noexcept { return num_basis_; }
    [[nodiscard]] int num_interior_knots() const noexcept { return num_basis_ - kDegree - 1; }
    [[nodiscard]] const std::vector<double>& knots() const noexcept { return knots_; }

    /// Index of the first of the (at most) 4 nonzero basis functions at x,
    /// with their values written to `values`. Requires 0 <= x <= 1.
    int eval_nonzero(double x, std::array<double, 4>& values) const;

    /// All K basis values at x. Throws std::domain_error outside [0,1].
    [[nodiscard]] std::vector<double> eval(double x) const;

private:
    int find_span(double x) const;

    int num_basis_;
    std::vector<double> knots_;
};

/// Sparse form of a design matrix: each row has 4 consecutive nonzeros
/// starting at `first[i]`.
struct BandedDesign {
    std::vector<int> first;
    std::vector<std::array<double, 4>> values;
    int num_basis = 0;

    [[nodiscard]] std::size_t rows() const noexcept { return first.size(); }
};

[[nodiscard]] SplineBasis make_basis(int num_interior_knots);

/// Basis values at x; throws std::domain_error when x is outside [0,1].
[[nodiscard]] std::vector<double> eval_basis(const SplineBasis& basis, double x);

/// n x K matrix whose row i (0-based) is the basis evaluated at (i+1)/n.
[[nodiscard]] Matrix design_matrix(const SplineBasis& basis, int n);

/// Rows evaluated at (first_row+i+1)/horizon for i = 0..rows-1. Requires
/// first_row + rows <= horizon.
[[nodiscard]] BandedDesign banded_design(const SplineBasis& basis, int rows, int horizon,
                                         int first_row = 0);

/// Default interior knot count for a series of length n: 4, 5, 6 at
/// n = 200, 500, 1000, growing slowly beyond.
[[nodiscard]] int auto_interior_knots(int n);

}  // namespace tvvol
