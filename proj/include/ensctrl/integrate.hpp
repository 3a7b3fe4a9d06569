#ifndef ENSCTRL_INTEGRATE_HPP
#define ENSCTRL_INTEGRATE_HPP

#include <vector>

#include "ensctrl/control.hpp"
#include "ensctrl/measure.hpp"
#include "ensctrl/problem.hpp"

namespace ensctrl {

// States of every ensemble member at every substep node.
// states[j] is (M*S+1) x n, row m = state of member j at t = m/(M*S).
struct TrajectoryBundle {
    TimeGrid grid;
    std::vector<Eigen::VectorXd> thetas;
    std::vector<Eigen::MatrixXd> states;

    int members() const { return static_cast<int>(states.size()); }
    Eigen::VectorXd terminal_state(int j) const {
        return states[j].row(states[j].rows() - 1).transpose();
    }
};

// Row covectors lambda[j][m] on the same grid, costates[j] is (M*S+1) x n.
struct AdjointBundle {
    TimeGrid grid;
    std::vector<Eigen::VectorXd> thetas;
    std::vector<Eigen::MatrixXd> costates;
};

// Trajectories are aborted once any |x_i| exceeds this bound.
inline constexpr double kDivergenceBound = 1e12;

// For linear members, one classical RK4 substep of xdot = Ax + Bu with u
// frozen is the affine map x -> P x + Q u; P and Q are the degree-4 and
// degree-3 truncated exponential polynomials. Precomputing them per member
// keeps the hot loops cheap without changing the scheme.
void rk4_step_matrices(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double dt,
                       Eigen::MatrixXd& P, Eigen::MatrixXd& Q);

// Classical RK4 with step h/S on xdot = F0(x,th) + F(x,th) u_l; the
// control is constant on each interval, so every step sees a smooth
// autonomous field.
TrajectoryBundle integrate_forward(const EnsembleProblem& problem,
                                   const DiscreteMeasure& measure,
                                   const PiecewiseControl& u);

// Backward RK4 on lambdadot = -lambda (dF0/dx + sum_i u_i dFi/dx) along the
// stored trajectory, terminal condition lambda(1) = grad_x a(x(1), theta).
// Half-node states are taken as the mean of the two adjacent stored nodes.
AdjointBundle integrate_adjoint(const EnsembleProblem& problem,
                                const DiscreteMeasure& measure,
                                const PiecewiseControl& u,
                                const TrajectoryBundle& traj);

// Deviations produced by the oscillatory perturbations
// u + amplitude * sin(2*pi*f*t) * (1,...,1), one entry per frequency.
// Each frequency must be a positive multiple of M; trajectories are
// re-integrated on a grid fine enough to resolve the oscillation.
struct WeakProbeResult {
    std::vector<double> state_deviation;
    std::vector<double> adjoint_deviation;
};

WeakProbeResult weak_convergence_probe(const EnsembleProblem& problem,
                                       const Eigen::VectorXd& theta,
                                       const PiecewiseControl& base_u,
                                       double amplitude,
                                       const std::vector<int>& frequencies);

} // namespace ensctrl

#endif
