#include "ensctrl/control.hpp"

#include <cmath>

namespace ensctrl {

namespace {

void require_same_grid(const PiecewiseControl& u, const PiecewiseControl& v) {
    if (!(u.grid() == v.grid()) || u.k() != v.k()) {
        throw validation_error("controls live on different grids");
    }
}

} // namespace

double l2_inner(const PiecewiseControl& u, const PiecewiseControl& v) {
    require_same_grid(u, v);
    return u.values().cwiseProduct(v.values()).sum() / u.grid().M;
}

double PiecewiseControl::l2_norm() const {
    return std::sqrt(values_.squaredNorm() / grid_.M);
}

PiecewiseControl axpy(double alpha, const PiecewiseControl& u, const PiecewiseControl& v) {
    require_same_grid(u, v);
    return PiecewiseControl(u.grid(), alpha * u.values() + v.values());
}

PiecewiseControl project_PM(const Eigen::MatrixXd& samples, const TimeGrid& grid) {
    const int rows = grid.num_substeps() + 1;
    if (samples.rows() != rows) {
        throw validation_error("project_PM: expected one sample per substep node");
    }
    const int k = static_cast<int>(samples.cols());
    Eigen::MatrixXd values(grid.M, k);
    for (int l = 0; l < grid.M; ++l) {
        // M * integral over the interval, composite trapezoid on S substeps.
        Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(k);
        const int base = l * grid.S;
        for (int s = 0; s < grid.S; ++s) {
            acc += 0.5 * (samples.row(base + s) + samples.row(base + s + 1));
        }
        values.row(l) = acc / grid.S;
    }
    return PiecewiseControl(grid, std::move(values));
}

} // namespace ensctrl
