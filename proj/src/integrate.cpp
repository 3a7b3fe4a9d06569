#include "ensctrl/integrate.hpp"

#include <cmath>
#include <string>

namespace ensctrl {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

void check_dims(const EnsembleProblem& problem, const PiecewiseControl& u) {
    if (problem.k != u.k()) {
        throw validation_error("control dimension does not match problem.k");
    }
}

[[noreturn]] void report_divergence(int member, double t) {
    throw divergence_error("trajectory of member " + std::to_string(member) +
                               " diverged at t=" + std::to_string(t),
                           member, t);
}

// Scratch space for one member's forward integration.
struct ForwardScratch {
    Eigen::VectorXd f0, x, xs, k1, k2, k3, k4;
    Eigen::MatrixXd F;

    explicit ForwardScratch(int n, int k)
        : f0(n), x(n), xs(n), k1(n), k2(n), k3(n), k4(n), F(n, k) {}
};

} // namespace

void rk4_step_matrices(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double dt,
                       Eigen::MatrixXd& P, Eigen::MatrixXd& Q) {
    const int n = static_cast<int>(A.rows());
    const Eigen::MatrixXd dtA = dt * A;
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd dtA2 = dtA * dtA;
    P = I + dtA + 0.5 * dtA2 + (1.0 / 6.0) * dtA2 * dtA + (1.0 / 24.0) * dtA2 * dtA2;
    Q = dt * ((I + 0.5 * dtA + (1.0 / 6.0) * dtA2 + (1.0 / 24.0) * dtA2 * dtA) * B);
}

TrajectoryBundle integrate_forward(const EnsembleProblem& problem,
                                   const DiscreteMeasure& measure,
                                   const PiecewiseControl& u) {
    check_dims(problem, u);
    const TimeGrid& grid = u.grid();
    const int n = problem.n;
    const int total = grid.num_substeps();
    const double dt = grid.dt();

    TrajectoryBundle bundle{grid, measure.thetas(), {}};
    bundle.states.reserve(measure.size());

    ForwardScratch s(n, problem.k);
    auto rhs = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& theta,
                   const auto& ul, Eigen::VectorXd& out) {
        problem.eval_F0(x, theta, s.f0);
        problem.eval_F(x, theta, s.F);
        out.noalias() = s.F * ul;
        out += s.f0;
    };

    Eigen::MatrixXd P(n, n), Q(n, problem.k);
    Eigen::VectorXd drive(n);
    for (int j = 0; j < measure.size(); ++j) {
        const Eigen::VectorXd& theta = measure.theta(j);
        Eigen::MatrixXd states(total + 1, n);
        s.x = problem.x0(theta);
        states.row(0) = s.x.transpose();
        if (problem.is_linear) {
            rk4_step_matrices(problem.A(theta), problem.B(theta), dt, P, Q);
            for (int l = 0; l < grid.M; ++l) {
                drive.noalias() = Q * u.values().row(l).transpose();
                for (int m = l * grid.S; m < (l + 1) * grid.S; ++m) {
                    s.xs.noalias() = P * s.x;
                    s.x = s.xs + drive;
                    if (!s.x.allFinite() || s.x.cwiseAbs().maxCoeff() > kDivergenceBound) {
                        report_divergence(j, grid.node_time(m + 1));
                    }
                    states.row(m + 1) = s.x.transpose();
                }
            }
            bundle.states.push_back(std::move(states));
            continue;
        }
        for (int m = 0; m < total; ++m) {
            const auto ul = u.values().row(m / grid.S).transpose();
            rhs(s.x, theta, ul, s.k1);
            s.xs = s.x + (0.5 * dt) * s.k1;
            rhs(s.xs, theta, ul, s.k2);
            s.xs = s.x + (0.5 * dt) * s.k2;
            rhs(s.xs, theta, ul, s.k3);
            s.xs = s.x + dt * s.k3;
            rhs(s.xs, theta, ul, s.k4);
            s.x += (dt / 6.0) * (s.k1 + 2.0 * s.k2 + 2.0 * s.k3 + s.k4);
            if (!s.x.allFinite() || s.x.cwiseAbs().maxCoeff() > kDivergenceBound) {
                report_divergence(j, grid.node_time(m + 1));
            }
            states.row(m + 1) = s.x.transpose();
        }
        bundle.states.push_back(std::move(states));
    }
    return bundle;
}

AdjointBundle integrate_adjoint(const EnsembleProblem& problem,
                                const DiscreteMeasure& measure,
                                const PiecewiseControl& u,
                                const TrajectoryBundle& traj) {
    check_dims(problem, u);
    if (!(traj.grid == u.grid()) || traj.members() != measure.size()) {
        throw validation_error("trajectory bundle inconsistent with measure/control");
    }
    const TimeGrid& grid = u.grid();
    const int n = problem.n;
    const int total = grid.num_substeps();
    const double dt = grid.dt();

    AdjointBundle bundle{grid, measure.thetas(), {}};
    bundle.costates.reserve(measure.size());

    Eigen::MatrixXd J(n, n), Ji(n, n), Fm(n, problem.k);
    Eigen::VectorXd xnode(n), xmid(n), grad(n), fa(n), fb(n);
    Eigen::RowVectorXd lam(n), ls(n), k1(n), k2(n), k3(n), k4(n);

    // State field F0 + F u, for the Hermite midpoint below.
    auto state_rhs = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& theta,
                         const auto& ul, Eigen::VectorXd& out) {
        problem.eval_F0(x, theta, out);
        problem.eval_F(x, theta, Fm);
        out.noalias() += Fm * ul;
    };

    // -lambda * (J0(x) + sum_i u_i Ji(x))
    auto rhs = [&](const Eigen::RowVectorXd& l, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& theta, const auto& ul, Eigen::RowVectorXd& out) {
        problem.jac_F0(x, theta, J);
        for (int i = 0; i < problem.k; ++i) {
            if (ul[i] != 0.0) {
                problem.jac_Fi(x, theta, i, Ji);
                J += ul[i] * Ji;
            }
        }
        out.noalias() = -l * J;
    };

    Eigen::MatrixXd P(n, n), Q(n, problem.k);
    for (int j = 0; j < measure.size(); ++j) {
        const Eigen::VectorXd& theta = measure.theta(j);
        const Eigen::MatrixXd& xs = traj.states[j];
        Eigen::MatrixXd costates(total + 1, n);
        xnode = xs.row(total).transpose();
        problem.terminal_grad(xnode, theta, grad);
        lam = grad.transpose();
        costates.row(total) = lam;
        if (problem.is_linear) {
            // Backward RK4 on lambdadot = -lambda A collapses to
            // lambda_{m-1} = lambda_m P with the same step matrix as the
            // forward pass (the two sign flips cancel).
            rk4_step_matrices(problem.A(theta), problem.B(theta), dt, P, Q);
            for (int m = total; m > 0; --m) {
                ls.noalias() = lam * P;
                lam = ls;
                if (!lam.allFinite() || lam.cwiseAbs().maxCoeff() > kDivergenceBound) {
                    report_divergence(j, grid.node_time(m - 1));
                }
                costates.row(m - 1) = lam;
            }
            bundle.costates.push_back(std::move(costates));
            continue;
        }
        for (int m = total; m > 0; --m) {
            const auto ul = u.values().row((m - 1) / grid.S).transpose();
            xnode = xs.row(m).transpose();
            // Cubic Hermite midpoint keeps the backward pass fourth order;
            // the linear average alone would cap it at two.
            xmid = xs.row(m - 1).transpose();
            state_rhs(xmid, theta, ul, fa);
            state_rhs(xnode, theta, ul, fb);
            xmid = 0.5 * (xs.row(m) + xs.row(m - 1)).transpose() + (dt / 8.0) * (fa - fb);
            rhs(lam, xnode, theta, ul, k1);
            ls = lam - (0.5 * dt) * k1;
            rhs(ls, xmid, theta, ul, k2);
            ls = lam - (0.5 * dt) * k2;
            rhs(ls, xmid, theta, ul, k3);
            xnode = xs.row(m - 1).transpose();
            ls = lam - dt * k3;
            rhs(ls, xnode, theta, ul, k4);
            lam -= (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if (!lam.allFinite() || lam.cwiseAbs().maxCoeff() > kDivergenceBound) {
                report_divergence(j, grid.node_time(m - 1));
            }
            costates.row(m - 1) = lam;
        }
        bundle.costates.push_back(std::move(costates));
    }
    return bundle;
}

namespace {

// Forward RK4 for a single system under a time-dependent control; used by
// the weak-convergence probe, where the perturbation is not piecewise
// constant.
Eigen::MatrixXd integrate_path(const EnsembleProblem& problem, const Eigen::VectorXd& theta,
                               const std::function<void(double, Eigen::VectorXd&)>& control,
                               int n_steps) {
    const int n = problem.n;
    const double dt = 1.0 / n_steps;
    ForwardScratch s(n, problem.k);
    Eigen::VectorXd uc(problem.k);
    auto rhs = [&](double t, const Eigen::VectorXd& x, Eigen::VectorXd& out) {
        control(t, uc);
        problem.eval_F0(x, theta, s.f0);
        problem.eval_F(x, theta, s.F);
        out.noalias() = s.F * uc;
        out += s.f0;
    };
    Eigen::MatrixXd states(n_steps + 1, n);
    s.x = problem.x0(theta);
    states.row(0) = s.x.transpose();
    for (int m = 0; m < n_steps; ++m) {
        const double t = m * dt;
        rhs(t, s.x, s.k1);
        s.xs = s.x + (0.5 * dt) * s.k1;
        rhs(t + 0.5 * dt, s.xs, s.k2);
        s.xs = s.x + (0.5 * dt) * s.k2;
        rhs(t + 0.5 * dt, s.xs, s.k3);
        s.xs = s.x + dt * s.k3;
        rhs(t + dt, s.xs, s.k4);
        s.x += (dt / 6.0) * (s.k1 + 2.0 * s.k2 + 2.0 * s.k3 + s.k4);
        if (!s.x.allFinite() || s.x.cwiseAbs().maxCoeff() > kDivergenceBound) {
            report_divergence(0, t + dt);
        }
        states.row(m + 1) = s.x.transpose();
    }
    return states;
}

Eigen::MatrixXd adjoint_path(const EnsembleProblem& problem, const Eigen::VectorXd& theta,
                             const std::function<void(double, Eigen::VectorXd&)>& control,
                             const Eigen::MatrixXd& states) {
    const int n = problem.n;
    const int n_steps = static_cast<int>(states.rows()) - 1;
    const double dt = 1.0 / n_steps;
    Eigen::MatrixXd J(n, n), Ji(n, n);
    Eigen::VectorXd x(n), grad(n), uc(problem.k);
    Eigen::RowVectorXd lam(n), ls(n), k1(n), k2(n), k3(n), k4(n);
    auto rhs = [&](double t, const Eigen::RowVectorXd& l, const Eigen::VectorXd& xv,
                   Eigen::RowVectorXd& out) {
        control(t, uc);
        problem.jac_F0(xv, theta, J);
        for (int i = 0; i < problem.k; ++i) {
            if (uc[i] != 0.0) {
                problem.jac_Fi(xv, theta, i, Ji);
                J += uc[i] * Ji;
            }
        }
        out.noalias() = -l * J;
    };
    Eigen::MatrixXd costates(n_steps + 1, n);
    x = states.row(n_steps).transpose();
    problem.terminal_grad(x, theta, grad);
    lam = grad.transpose();
    costates.row(n_steps) = lam;
    for (int m = n_steps; m > 0; --m) {
        const double t = m * dt;
        x = states.row(m).transpose();
        rhs(t, lam, x, k1);
        x = 0.5 * (states.row(m) + states.row(m - 1)).transpose();
        ls = lam - (0.5 * dt) * k1;
        rhs(t - 0.5 * dt, ls, x, k2);
        ls = lam - (0.5 * dt) * k2;
        rhs(t - 0.5 * dt, ls, x, k3);
        x = states.row(m - 1).transpose();
        ls = lam - dt * k3;
        rhs(t - dt, ls, x, k4);
        lam -= (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        costates.row(m - 1) = lam;
    }
    return costates;
}

} // namespace

WeakProbeResult weak_convergence_probe(const EnsembleProblem& problem,
                                       const Eigen::VectorXd& theta,
                                       const PiecewiseControl& base_u,
                                       double amplitude,
                                       const std::vector<int>& frequencies) {
    const TimeGrid& grid = base_u.grid();
    for (int f : frequencies) {
        if (f <= 0 || f % grid.M != 0) {
            throw validation_error("probe frequency must be a positive multiple of M");
        }
    }

    WeakProbeResult result;
    for (int f : frequencies) {
        // 32 steps per oscillation period; multiple of M since f is.
        const int n_steps = std::max(grid.num_substeps(), 32 * f);
        auto base = [&](double t, Eigen::VectorXd& out) {
            int l = std::min(static_cast<int>(t * grid.M), grid.M - 1);
            out = base_u.values().row(l).transpose();
        };
        auto perturbed = [&](double t, Eigen::VectorXd& out) {
            base(t, out);
            out.array() += amplitude * std::sin(kTwoPi * f * t);
        };
        const Eigen::MatrixXd xs_base = integrate_path(problem, theta, base, n_steps);
        const Eigen::MatrixXd xs_pert = integrate_path(problem, theta, perturbed, n_steps);
        result.state_deviation.push_back(
            (xs_pert - xs_base).rowwise().norm().maxCoeff());
        const Eigen::MatrixXd ls_base = adjoint_path(problem, theta, base, xs_base);
        const Eigen::MatrixXd ls_pert = adjoint_path(problem, theta, perturbed, xs_pert);
        result.adjoint_deviation.push_back(
            (ls_pert - ls_base).rowwise().norm().maxCoeff());
    }
    return result;
}

} // namespace ensctrl
