#include "tvvol/spline_basis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace tvvol {

SplineBasis::SplineBasis(int num_interior_knots) {
    if (num_interior_knots < 0) {
        throw std::invalid_argument("number of interior knots must be nonnegative, got " +
                                    std::to_string(num_interior_knots));
    }
    num_basis_ = num_interior_knots + kDegree + 1;
    knots_.reserve(num_interior_knots + 2 * (kDegree + 1));
    for (int i = 0; i <= kDegree; ++i) knots_.push_back(0.0);
    for (int i = 1; i <= num_interior_knots; ++i) {
        knots_.push_back(static_cast<double>(i) / (num_interior_knots + 1));
    }
    for (int i = 0; i <= kDegree; ++i) knots_.push_back(1.0);
}

int SplineBasis::find_span(double x) const {
    // Knots are equidistant, so the span follows from x directly. The right
    // end belongs to the last nonempty interval.
    const int intervals = num_interior_knots() + 1;
    int cell = static_cast<int>(std::floor(x * intervals));
    cell = std::clamp(cell, 0, intervals - 1);
    int span = kDegree + cell;
    // Guard against rounding in x * intervals near a knot.
    while (span > kDegree && x < knots_[span]) --span;
    while (span < num_basis_ - 1 && x >= knots_[span + 1]) ++span;
    return span;
}

int SplineBasis::eval_nonzero(double x, std::array<double, 4>& values) const {
    // Cox-de Boor triangle (de Boor's BSPLVB).
    const int span = find_span(x);
    std::array<double, kDegree + 1> left{};
    std::array<double, kDegree + 1> right{};
    values[0] = 1.0;
    for (int j = 1; j <= kDegree; ++j) {
        left[j] = x - knots_[span + 1 - j];
        right[j] = knots_[span + j] - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double temp = values[r] / (right[r + 1] + left[j - r]);
            values[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        values[j] = saved;
    }
    return span - kDegree;
}

std::vector<double> SplineBasis::eval(double x) const {
    if (!(x >= 0.0 && x <= 1.0)) {
        throw std::domain_error("basis evaluation point " + std::to_string(x) +
                                " lies outside [0,1]");
    }
    std::array<double, 4> local{};
    const int first = eval_nonzero(x, local);
    std::vector<double> out(num_basis_, 0.0);
    for (int r = 0; r < 4; ++r) out[first + r] = local[r];
    return out;
}

SplineBasis make_basis(int num_interior_knots) { return SplineBasis(num_interior_knots); }

std::vector<double> eval_basis(const SplineBasis& basis, double x) { return basis.eval(x); }

Matrix design_matrix(const SplineBasis& basis, int n) {
    if (n < 1) throw std::invalid_argument("design matrix needs n >= 1");
    Matrix m(static_cast<std::size_t>(n), static_cast<std::size_t>(basis.num_basis()));
    std::array<double, 4> local{};
    for (int i = 0; i < n; ++i) {
        const int first = basis.eval_nonzero(static_cast<double>(i + 1) / n, local);
        for (int r = 0; r < 4; ++r) m(i, first + r) = local[r];
    }
    return m;
}

BandedDesign banded_design(const SplineBasis& basis, int rows, int horizon, int first_row) {
    if (rows < 0 || first_row < 0 || horizon < 1 || first_row + rows > horizon) {
        throw std::invalid_argument("banded design needs 0 <= first_row + rows <= horizon");
    }
    BandedDesign d;
    d.num_basis = basis.num_basis();
    d.first.resize(rows);
    d.values.resize(rows);
    for (int i = 0; i < rows; ++i) {
        d.first[i] = basis.eval_nonzero(static_cast<double>(first_row + i + 1) / horizon, d.values[i]);
    }
    return d;
}

int auto_interior_knots(int n) {
    if (n < 1) throw std::invalid_argument("series length must be positive");
    const double ln = std::log10(static_cast<double>(n));
    const double raw = 4.0 + 2.0 * (ln - std::log10(200.0)) / (std::log10(1000.0) - std::log10(200.0));
    const int knots = std::max(4, static_cast<int>(std::lround(raw)));
    const int upper = 6 + static_cast<int>(std::ceil(std::log10(n / 1000.0))) * 2;
    return std::clamp(knots, 4, std::max(4, upper));
}

}  // namespace tvvol
