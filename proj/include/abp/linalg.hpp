#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace abp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Shared additive slack used by feasibility-style predicates to absorb roundoff.
inline constexpr double kFeasSlack = 1e-9;

/// Dense copy of one row of a row-major sparse matrix.
inline Vector dense_row(const SpMat& m, int row) {
    Vector out = Vector::Zero(m.cols());
    for (SpMat::InnerIterator it(m, row); it; ++it) out(it.col()) = it.value();
    return out;
}

} // namespace abp
