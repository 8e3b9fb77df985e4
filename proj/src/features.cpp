#include "abp/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace abp {

void FeatureBasis::validate() const {
    if (matrix.rows() == 0 || matrix.cols() == 0)
        throw std::invalid_argument("feature basis must be nonempty");
    for (int j = 0; j < matrix.cols(); ++j)
        if (matrix.col(j).cwiseAbs().maxCoeff() == 0.0)
            throw std::invalid_argument("feature column " + std::to_string(j) + " is all zero");
    if (has_constant && (matrix.col(0).array() != 1.0).any())
        throw std::invalid_argument("constant flag set but column 0 is not the ones vector");
}

ValueFunction represent(const FeatureBasis& basis, const Vector& coeffs) {
    if (coeffs.size() != basis.n_features())
        throw std::invalid_argument("coefficient length does not match the basis");
    return basis.matrix * coeffs;
}

bool check_assumption_one(const FeatureBasis& basis) {
    if (basis.has_constant) return true;
    Vector ones = Vector::Ones(basis.n_states());
    Vector coeffs = basis.matrix.colPivHouseholderQr().solve(ones);
    return (basis.matrix * coeffs - ones).cwiseAbs().maxCoeff() < 1e-8;
}

FeatureBasis chain_basis(int n_states, const std::vector<int>& cutoffs) {
    if (n_states < 1) throw std::invalid_argument("chain basis needs at least one state");
    Matrix m(n_states, 1 + static_cast<int>(cutoffs.size()));
    m.col(0).setOnes();
    for (size_t j = 0; j < cutoffs.size(); ++j) {
        int c = cutoffs[j];
        if (c < 1 || c > n_states)
            throw std::invalid_argument("cutoff " + std::to_string(c) + " outside [1, n]");
        for (int i = 1; i <= n_states; ++i)
            m(i - 1, static_cast<int>(j) + 1) = std::max(static_cast<double>(i - c), 0.0);
    }
    return FeatureBasis(std::move(m), /*constant=*/true);
}

FeatureBasis spline_grid_basis(int grid_x, int grid_y,
                               const std::vector<std::array<double, 2>>& points) {
    if (grid_x < 2 || grid_y < 2) throw std::invalid_argument("spline grid dims must be >= 2");
    if (points.empty()) throw std::invalid_argument("spline basis needs at least one point");

    double lo_x = points[0][0], hi_x = points[0][0];
    double lo_y = points[0][1], hi_y = points[0][1];
    for (const auto& p : points) {
        lo_x = std::min(lo_x, p[0]);
        hi_x = std::max(hi_x, p[0]);
        lo_y = std::min(lo_y, p[1]);
        hi_y = std::max(hi_y, p[1]);
    }
    if (hi_x <= lo_x || hi_y <= lo_y)
        throw std::invalid_argument("spline basis points are degenerate along one axis");

    const double step_x = (hi_x - lo_x) / (grid_x - 1);
    const double step_y = (hi_y - lo_y) / (grid_y - 1);

    Matrix m = Matrix::Zero(static_cast<int>(points.size()), grid_x * grid_y);
    for (size_t i = 0; i < points.size(); ++i) {
        double fx = (points[i][0] - lo_x) / step_x;
        double fy = (points[i][1] - lo_y) / step_y;
        int cx = std::min(static_cast<int>(std::floor(fx)), grid_x - 2);
        int cy = std::min(static_cast<int>(std::floor(fy)), grid_y - 2);
        double tx = std::clamp(fx - cx, 0.0, 1.0);
        double ty = std::clamp(fy - cy, 0.0, 1.0);
        auto node = [&](int gx, int gy) { return gx * grid_y + gy; };
        m(static_cast<int>(i), node(cx, cy)) += (1 - tx) * (1 - ty);
        m(static_cast<int>(i), node(cx + 1, cy)) += tx * (1 - ty);
        m(static_cast<int>(i), node(cx, cy + 1)) += (1 - tx) * ty;
        m(static_cast<int>(i), node(cx + 1, cy + 1)) += tx * ty;
    }
    return FeatureBasis(std::move(m), /*constant=*/false);
}

} // namespace abp
