#ifndef ENSCTRL_OBJECTIVE_HPP
#define ENSCTRL_OBJECTIVE_HPP

#include <functional>

#include "ensctrl/integrate.hpp"

namespace ensctrl {

struct CostReport {
    double total = 0.0;
    double integral_term = 0.0;
    double reg_term = 0.0;
    std::vector<double> per_member;
};

// Average end-point cost
//   sum_j alpha_j a(x_j(1), theta_j) + (beta/2) ||u||_L2^2.
CostReport endpoint_cost(const EnsembleProblem& problem, const DiscreteMeasure& measure,
                         const PiecewiseControl& u, double beta);

// Same, reusing already-integrated trajectories.
CostReport endpoint_cost_from(const EnsembleProblem& problem, const DiscreteMeasure& measure,
                              const PiecewiseControl& u, const TrajectoryBundle& traj,
                              double beta);

using RunningCost = std::function<double(double t, const Eigen::VectorXd& x,
                                         const Eigen::VectorXd& theta)>;

// Time-integrated cost with a discrete time measure nu:
//   sum_j alpha_j sum_q w_q a(t_q, x_j(t_q), theta_j) + (beta/2) ||u||^2.
// Every time atom must lie on a substep node (snap tolerance h/(2S)).
// Evaluation only; the optimizers handle the end-point form.
CostReport running_cost(const EnsembleProblem& problem, const DiscreteMeasure& measure,
                        const PiecewiseControl& u, double beta,
                        const DiscreteMeasure& time_measure, const RunningCost& a_running);

} // namespace ensctrl

#endif
