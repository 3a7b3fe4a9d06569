#include "ensctrl/objective.hpp"

#include <cmath>

namespace ensctrl {

namespace {

void require_beta(double beta) {
    if (!(beta > 0.0)) throw validation_error("beta must be > 0");
}

} // namespace

CostReport endpoint_cost_from(const EnsembleProblem& problem, const DiscreteMeasure& measure,
                              const PiecewiseControl& u, const TrajectoryBundle& traj,
                              double beta) {
    require_beta(beta);
    if (traj.members() != measure.size()) {
        throw validation_error("trajectory bundle does not match the measure");
    }
    CostReport report;
    report.per_member.reserve(measure.size());
    Eigen::VectorXd xT(problem.n);
    for (int j = 0; j < measure.size(); ++j) {
        xT = traj.terminal_state(j);
        const double term = measure.alpha(j) * problem.terminal_cost(xT, measure.theta(j));
        report.per_member.push_back(term);
        report.integral_term += term;
    }
    const double norm = u.l2_norm();
    report.reg_term = 0.5 * beta * norm * norm;
    report.total = report.integral_term + report.reg_term;
    return report;
}

CostReport endpoint_cost(const EnsembleProblem& problem, const DiscreteMeasure& measure,
                         const PiecewiseControl& u, double beta) {
    const TrajectoryBundle traj = integrate_forward(problem, measure, u);
    return endpoint_cost_from(problem, measure, u, traj, beta);
}

CostReport running_cost(const EnsembleProblem& problem, const DiscreteMeasure& measure,
                        const PiecewiseControl& u, double beta,
                        const DiscreteMeasure& time_measure, const RunningCost& a_running) {
    require_beta(beta);
    const TimeGrid& grid = u.grid();
    const double dt = grid.dt();

    // Snap every time atom to the substep grid.
    std::vector<int> nodes;
    nodes.reserve(time_measure.size());
    for (int q = 0; q < time_measure.size(); ++q) {
        const double t = time_measure.theta(q)[0];
        const int m = static_cast<int>(std::lround(t / dt));
        if (m < 0 || m > grid.num_substeps() || std::abs(t - m * dt) > 0.5 * dt) {
            throw validation_error("time atom not on the substep grid");
        }
        nodes.push_back(m);
    }

    const TrajectoryBundle traj = integrate_forward(problem, measure, u);
    CostReport report;
    report.per_member.reserve(measure.size());
    Eigen::VectorXd x(problem.n);
    for (int j = 0; j < measure.size(); ++j) {
        double member = 0.0;
        for (int q = 0; q < time_measure.size(); ++q) {
            x = traj.states[j].row(nodes[q]).transpose();
            member += time_measure.alpha(q) * a_running(nodes[q] * dt, x, measure.theta(j));
        }
        member *= measure.alpha(j);
        report.per_member.push_back(member);
        report.integral_term += member;
    }
    const double norm = u.l2_norm();
    report.reg_term = 0.5 * beta * norm * norm;
    report.total = report.integral_term + report.reg_term;
    return report;
}

} // namespace ensctrl
