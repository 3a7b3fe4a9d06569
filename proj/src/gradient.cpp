#include "ensctrl/gradient.hpp"

namespace ensctrl {

GradientReport assemble_gradient(const EnsembleProblem& problem, const DiscreteMeasure& measure,
                                 const PiecewiseControl& u, double beta,
                                 const TrajectoryBundle& traj, const AdjointBundle& adj) {
    const TimeGrid& grid = u.grid();
    if (!(traj.grid == grid) || !(adj.grid == grid) ||
        traj.members() != measure.size() ||
        static_cast<int>(adj.costates.size()) != measure.size()) {
        throw validation_error("bundles inconsistent with measure/control");
    }
    const int k = u.k();
    Eigen::MatrixXd delta = beta * u.values();
    Eigen::MatrixXd F(problem.n, k);
    Eigen::VectorXd x(problem.n);
    Eigen::RowVectorXd contrib(k);
    for (int l = 1; l <= grid.M; ++l) {
        const int node_prev = (l - 1) * grid.S;
        const int node_cur = l * grid.S;
        for (int j = 0; j < measure.size(); ++j) {
            const Eigen::VectorXd& theta = measure.theta(j);
            x = traj.states[j].row(node_prev).transpose();
            problem.eval_F(x, theta, F);
            contrib = adj.costates[j].row(node_prev) * F;
            x = traj.states[j].row(node_cur).transpose();
            problem.eval_F(x, theta, F);
            contrib += adj.costates[j].row(node_cur) * F;
            delta.row(l - 1) += (0.5 * measure.alpha(j)) * contrib;
        }
    }
    GradientReport report{PiecewiseControl(grid, std::move(delta)), 0.0};
    report.norm = report.delta_u.l2_norm();
    return report;
}

PiecewiseControl fd_gradient(const EnsembleProblem& problem, const DiscreteMeasure& measure,
                             const PiecewiseControl& u, double beta, double epsilon) {
    if (!(epsilon > 0.0)) throw validation_error("fd_gradient: epsilon must be > 0");
    const TimeGrid& grid = u.grid();
    Eigen::MatrixXd grad(grid.M, u.k());
    PiecewiseControl probe = u;
    for (int l = 0; l < grid.M; ++l) {
        for (int i = 0; i < u.k(); ++i) {
            const double saved = probe.values()(l, i);
            probe.values()(l, i) = saved + epsilon;
            const double plus = endpoint_cost(problem, measure, probe, beta).total;
            probe.values()(l, i) = saved - epsilon;
            const double minus = endpoint_cost(problem, measure, probe, beta).total;
            probe.values()(l, i) = saved;
            grad(l, i) = grid.M * (plus - minus) / (2.0 * epsilon);
        }
    }
    return PiecewiseControl(grid, std::move(grad));
}

} // namespace ensctrl
