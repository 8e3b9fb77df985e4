#pragma once

#include "abp/mdp.hpp"

#include <array>
#include <vector>

namespace abp {

/// Linear feature basis: representable value functions are v = matrix * coeffs.
struct FeatureBasis {
    Matrix matrix;             // n_states x m
    bool has_constant = false; // column 0 is exactly the all-ones vector

    FeatureBasis() = default;
    FeatureBasis(Matrix m, bool constant) : matrix(std::move(m)), has_constant(constant) {
        validate();
    }

    int n_states() const { return static_cast<int>(matrix.rows()); }
    int n_features() const { return static_cast<int>(matrix.cols()); }

    /// No all-zero columns; constant flag matches column 0.
    void validate() const;
};

/// v = Phi * coeffs.
ValueFunction represent(const FeatureBasis& basis, const Vector& coeffs);

/// True when the all-ones vector lies in the span of the basis
/// (least-squares residual below 1e-8).
bool check_assumption_one(const FeatureBasis& basis);

/// Piecewise-linear ramp basis for a 1-D chain: a constant column followed
/// by one column max(i - c, 0) per cutoff c, with states indexed from 1.
FeatureBasis chain_basis(int n_states, const std::vector<int>& cutoffs);

/// Bilinear hat-function basis on a uniform grid_x x grid_y lattice spanning
/// the bounding box of the given 2-D points. One feature per lattice node;
/// each row is a partition of unity, so constants are representable.
FeatureBasis spline_grid_basis(int grid_x, int grid_y,
                               const std::vector<std::array<double, 2>>& points);

} // namespace abp
