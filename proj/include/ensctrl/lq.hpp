#ifndef ENSCTRL_LQ_HPP
#define ENSCTRL_LQ_HPP

#include "ensctrl/control.hpp"
#include "ensctrl/measure.hpp"
#include "ensctrl/problem.hpp"

namespace ensctrl {

// Matrix exponential by scaling and squaring with a truncated Taylor
// series; intended for the small blocks arising here (n <= 8 or so).
Eigen::MatrixXd expm(const Eigen::MatrixXd& A);

struct LqSolution {
    PiecewiseControl u_opt;
    double cost_opt = 0.0;
    Eigen::MatrixXd per_member_terminal; // N x n, x_j(1) under u_opt
    double gram_condition = 0.0;         // condition estimate of the normal matrix
    double normal_residual = 0.0;        // ||H u - b||_2 of the solved system
};

// Exact minimizer over U_M of
//   sum_j alpha_j |Phi_j x0_j + sum_l Gamma_l^j u_l - y_j|^2
//   + (beta/2)(1/M) sum_l |u_l|^2
// for linear members with quadratic terminal cost |x - y(theta)|^2. The
// interval input maps come from the augmented exponential of
// [[A, B], [0, 0]], so the continuous flow is represented exactly.
// S only tags the returned control's grid (so it can be compared with
// controls used at a given substep resolution); the solve itself is exact
// in continuous time per interval.
LqSolution solve_lq(const EnsembleProblem& problem, const DiscreteMeasure& measure,
                    int M, double beta, int S = 1);

// Numerical rank of the Kalman matrix of the stacked system
// (block-diagonal A over the atoms, shared input columns); full rank
// n*N means the sub-ensemble is exactly controllable.
int kalman_rank(const DiscreteMeasure& measure, const EnsembleProblem& problem);

} // namespace ensctrl

#endif
