#ifndef ENSCTRL_OPTIMIZE_HPP
#define ENSCTRL_OPTIMIZE_HPP

#include "ensctrl/gradient.hpp"

namespace ensctrl {

struct OptimizerConfig {
    double gamma0 = 1.0;    // initial step size
    double tau = 0.5;       // backtracking shrink factor
    double c = 1e-4;        // Armijo constant (projected gradient only)
    int max_iter = 500;
    double grad_tol = 0.0;  // optional stop on the gradient norm; 0 disables
    bool use_correction = true; // covector correction in the PMP sweep

    void validate() const {
        if (!(gamma0 > 0.0)) throw validation_error("gamma0 must be > 0");
        if (!(tau > 0.0 && tau < 1.0)) throw validation_error("tau must be in (0,1)");
        if (!(c > 0.0 && c < 1.0)) throw validation_error("c must be in (0,1)");
        if (max_iter < 0) throw validation_error("max_iter must be >= 0");
        if (grad_tol < 0.0) throw validation_error("grad_tol must be >= 0");
    }
};

struct IterationRecord {
    int iter;
    double cost;          // cost after this iteration (unchanged on reject)
    double integral_term;
    double reg_term;
    double gamma;
    bool accepted;
    double grad_norm;     // ||Du|| for the gradient method, ||u_new - u||/gamma for PMP
};

struct RunTrace {
    std::vector<IterationRecord> records;
    PiecewiseControl final_control;
    CostReport final_cost;
};

// Algorithm: steepest descent on U_M with the assembled gradient and
// Armijo-Goldstein backtracking; covectors are recomputed only after an
// accepted step.
RunTrace run_projected_gradient(const EnsembleProblem& problem, const DiscreteMeasure& measure,
                                const PiecewiseControl& u0, double beta,
                                const OptimizerConfig& cfg);

// Iterative maximum-principle scheme: a sequential forward sweep where
// each u_l solves its proximal Hamiltonian maximization in closed form,
//   u_l_new = (u_l - gamma * sum_j alpha_j (lam_{l-1}^corr F(x_{l-1}^new))^T)
//             / (1 + gamma*beta),
// trajectories are advanced with the fresh control, and the covectors get
// the end-point-cost correction. Accepts iff the cost strictly decreases.
RunTrace run_iterative_pmp(const EnsembleProblem& problem, const DiscreteMeasure& measure,
                           const PiecewiseControl& u0, double beta,
                           const OptimizerConfig& cfg);

// Normalized violation of the maximum condition
//   u(t) = -(1/beta) sum_j alpha_j (lam_j(t) F(x_j(t), theta_j))^T,
// measured with the same trapezoid interval averages as the gradient and
// divided by max(1, ||u||_L2).
double pmp_residual(const EnsembleProblem& problem, const DiscreteMeasure& measure,
                    const PiecewiseControl& u, double beta);

} // namespace ensctrl

#endif
