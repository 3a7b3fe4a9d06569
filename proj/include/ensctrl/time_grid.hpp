#ifndef ENSCTRL_TIME_GRID_HPP
#define ENSCTRL_TIME_GRID_HPP

#include "ensctrl/errors.hpp"

namespace ensctrl {

// Equispaced discretization of [0,1]: M control intervals, S integration
// substeps per interval. Interval l = 1..M covers [(l-1)/M, l/M); substep
// nodes are m = 0..M*S with t_m = m/(M*S).
struct TimeGrid {
    int M;
    int S;

    TimeGrid(int intervals, int substeps) : M(intervals), S(substeps) {
        if (M < 1 || S < 1) {
            throw validation_error("TimeGrid: M and S must be >= 1");
        }
    }

    double h() const { return 1.0 / M; }
    double dt() const { return 1.0 / (static_cast<double>(M) * S); }
    int num_substeps() const { return M * S; }
    double node_time(int m) const { return static_cast<double>(m) * dt(); }

    bool operator==(const TimeGrid& other) const {
        return M == other.M && S == other.S;
    }
};

} // namespace ensctrl

#endif
