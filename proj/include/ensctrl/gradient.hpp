#ifndef ENSCTRL_GRADIENT_HPP
#define ENSCTRL_GRADIENT_HPP

#include "ensctrl/objective.hpp"

namespace ensctrl {

struct GradientReport {
    PiecewiseControl delta_u;
    double norm = 0.0; // L2 norm of delta_u
};

// Discretized gradient of the end-point cost on U_M:
//   Du_l = 1/2 sum_j alpha_j (F(x_{l-1}^j)^T lam_{l-1}^j^T
//                             + F(x_l^j)^T lam_l^j^T) + beta u_l,
// with x and lambda taken at the interval nodes of the bundles.
GradientReport assemble_gradient(const EnsembleProblem& problem, const DiscreteMeasure& measure,
                                 const PiecewiseControl& u, double beta,
                                 const TrajectoryBundle& traj, const AdjointBundle& adj);

// Independent oracle: central differences of the end-point cost in each
// coordinate of U_M, scaled by M so the result is the L2-Riesz
// representative (the coordinate basis has squared L2 norm 1/M).
PiecewiseControl fd_gradient(const EnsembleProblem& problem, const DiscreteMeasure& measure,
                             const PiecewiseControl& u, double beta, double epsilon);

} // namespace ensctrl

#endif
