#ifndef ENSCTRL_CONTROL_HPP
#define ENSCTRL_CONTROL_HPP

#include <Eigen/Dense>

#include "ensctrl/time_grid.hpp"

namespace ensctrl {

// Piecewise-constant control in U_M: row l-1 of `values` holds the value
// u_l on [(l-1)/M, l/M). The L2 geometry is exact for this class:
//   <u,v> = (1/M) sum_l <u_l, v_l>.
class PiecewiseControl {
public:
    PiecewiseControl(const TimeGrid& grid, int k)
        : grid_(grid), values_(Eigen::MatrixXd::Zero(grid.M, k)) {
        if (k < 1) throw validation_error("PiecewiseControl: k must be >= 1");
    }

    PiecewiseControl(const TimeGrid& grid, Eigen::MatrixXd values)
        : grid_(grid), values_(std::move(values)) {
        if (values_.rows() != grid.M) {
            throw validation_error("PiecewiseControl: values must have M rows");
        }
        if (values_.cols() < 1) {
            throw validation_error("PiecewiseControl: k must be >= 1");
        }
    }

    const TimeGrid& grid() const { return grid_; }
    int k() const { return static_cast<int>(values_.cols()); }
    const Eigen::MatrixXd& values() const { return values_; }
    Eigen::MatrixXd& values() { return values_; }

    // Value on the interval containing substep step [m, m+1).
    Eigen::VectorXd value_on_interval(int l) const { return values_.row(l).transpose(); }

    double l2_norm() const;

private:
    TimeGrid grid_;
    Eigen::MatrixXd values_;
};

double l2_inner(const PiecewiseControl& u, const PiecewiseControl& v);

// alpha*u + v, rowwise.
PiecewiseControl axpy(double alpha, const PiecewiseControl& u, const PiecewiseControl& v);

// Orthogonal projection onto U_M of a function sampled at all substep
// nodes (rows m = 0..M*S, one column per control component). Interval
// means are computed with the composite trapezoid rule.
PiecewiseControl project_PM(const Eigen::MatrixXd& samples, const TimeGrid& grid);

} // namespace ensctrl

#endif
