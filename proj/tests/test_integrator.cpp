#include <doctest.h>

#include <cmath>

#include "ensctrl/integrate.hpp"
#include "ensctrl/rng.hpp"

using namespace ensctrl;

namespace {

Eigen::VectorXd vec1(double v) { return Eigen::VectorXd::Constant(1, v); }

DiscreteMeasure single_atom(double theta) {
    return DiscreteMeasure({vec1(theta)}, {1.0});
}

EnsembleProblem linear2d_with_linear_cost(const Eigen::Vector2d& c) {
    // linear2d dynamics with a(x) = c . x, so lambda(1) = c exactly.
    EnsembleProblem p = builtin_problem("linear2d");
    p.quadratic_terminal = false;
    p.terminal_cost = [c](const Eigen::VectorXd& x, const Eigen::VectorXd&) {
        return c.dot(x);
    };
    p.terminal_grad = [c](const Eigen::VectorXd&, const Eigen::VectorXd&,
                          Eigen::VectorXd& out) { out = c; };
    return p;
}

PiecewiseControl constant_control(const TimeGrid& grid, std::initializer_list<double> vals) {
    PiecewiseControl u(grid, static_cast<int>(vals.size()));
    int i = 0;
    for (double v : vals) u.values().col(i++).setConstant(v);
    return u;
}

} // namespace

TEST_CASE("zero dynamics keep every state at x0") {
    EnsembleProblem p;
    p.n = 2;
    p.k = 1;
    p.eval_F0 = [](const Eigen::VectorXd&, const Eigen::VectorXd&, Eigen::VectorXd& out) {
        out.setZero(2);
    };
    p.eval_F = [](const Eigen::VectorXd&, const Eigen::VectorXd&, Eigen::MatrixXd& out) {
        out.setZero(2, 1);
    };
    p.x0 = [](const Eigen::VectorXd&) { return Eigen::VectorXd(Eigen::Vector2d(3.0, -2.0)); };
    const TimeGrid grid(4, 4);
    const TrajectoryBundle traj =
        integrate_forward(p, single_atom(0.1), constant_control(grid, {5.0}));
    for (int m = 0; m <= grid.num_substeps(); ++m) {
        CHECK(traj.states[0](m, 0) == 3.0);
        CHECK(traj.states[0](m, 1) == -2.0);
    }
}

TEST_CASE("linear2d theta=0 under u=(1,0): x(t) = (t, 0) exactly") {
    const EnsembleProblem p = builtin_problem("linear2d");
    const TimeGrid grid(8, 4);
    const TrajectoryBundle traj =
        integrate_forward(p, single_atom(0.0), constant_control(grid, {1.0, 0.0}));
    for (int m = 0; m <= grid.num_substeps(); ++m) {
        CHECK(traj.states[0](m, 0) == doctest::Approx(grid.node_time(m)).epsilon(1e-14));
        CHECK(traj.states[0](m, 1) == 0.0);
    }
    CHECK(traj.terminal_state(0)[0] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("linear2d theta=0 under u=(0,1): x(1) = (0.5, 1) exactly") {
    const EnsembleProblem p = builtin_problem("linear2d");
    const TimeGrid grid(8, 4);
    const TrajectoryBundle traj =
        integrate_forward(p, single_atom(0.0), constant_control(grid, {0.0, 1.0}));
    CHECK(traj.terminal_state(0)[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(traj.terminal_state(0)[1] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("nilpotent adjoint: lambda(t) = (1, 1-t) exactly") {
    const EnsembleProblem p = linear2d_with_linear_cost({1.0, 0.0});
    const TimeGrid grid(8, 4);
    const DiscreteMeasure m = single_atom(0.0);
    const PiecewiseControl u = constant_control(grid, {0.3, -0.7});
    const TrajectoryBundle traj = integrate_forward(p, m, u);
    const AdjointBundle adj = integrate_adjoint(p, m, u, traj);
    for (int mm = 0; mm <= grid.num_substeps(); ++mm) {
        CHECK(adj.costates[0](mm, 0) == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(adj.costates[0](mm, 1) ==
              doctest::Approx(1.0 - grid.node_time(mm)).epsilon(1e-13));
    }
}

TEST_CASE("zero Jacobians give a constant adjoint") {
    EnsembleProblem p;
    p.n = 1;
    p.k = 1;
    p.eval_F0 = [](const Eigen::VectorXd&, const Eigen::VectorXd&, Eigen::VectorXd& out) {
        out.setConstant(1, 2.0); // constant drift, d/dx = 0
    };
    p.eval_F = [](const Eigen::VectorXd&, const Eigen::VectorXd&, Eigen::MatrixXd& out) {
        out.setOnes(1, 1);
    };
    p.jac_F0 = [](const Eigen::VectorXd&, const Eigen::VectorXd&, Eigen::MatrixXd& out) {
        out.setZero(1, 1);
    };
    p.jac_Fi = [](const Eigen::VectorXd&, const Eigen::VectorXd&, int, Eigen::MatrixXd& out) {
        out.setZero(1, 1);
    };
    p.x0 = [](const Eigen::VectorXd&) { return Eigen::VectorXd(vec1(0.0)); };
    p.terminal_grad = [](const Eigen::VectorXd&, const Eigen::VectorXd&, Eigen::VectorXd& out) {
        out.setConstant(1, 7.0);
    };
    const TimeGrid grid(4, 2);
    const DiscreteMeasure m = single_atom(0.0);
    const PiecewiseControl u = constant_control(grid, {0.5});
    const AdjointBundle adj = integrate_adjoint(p, m, u, integrate_forward(p, m, u));
    for (int mm = 0; mm <= grid.num_substeps(); ++mm) {
        CHECK(adj.costates[0](mm, 0) == 7.0);
    }
}

TEST_CASE("logistic adjoint self-convergence: S=8 matches S=256 to 1e-8") {
    const EnsembleProblem p = builtin_problem("logistic1d");
    const DiscreteMeasure m = single_atom(1.0);
    auto lambda0_at = [&](int S) {
        const TimeGrid grid(8, S);
        const PiecewiseControl u(grid, 1); // u = 0
        const TrajectoryBundle traj = integrate_forward(p, m, u);
        const AdjointBundle adj = integrate_adjoint(p, m, u, traj);
        return adj.costates[0](0, 0);
    };
    const double coarse = lambda0_at(8);
    const double ref = lambda0_at(256);
    CHECK(std::abs(coarse - ref) <= 1e-8 * std::abs(ref));
}

TEST_CASE("order-4 self-convergence on logistic1d") {
    const EnsembleProblem p = builtin_problem("logistic1d");
    const DiscreteMeasure m = single_atom(3.0); // stronger nonlinearity
    auto terminal_at = [&](int S) {
        const TimeGrid grid(1, S);
        const PiecewiseControl u = constant_control(grid, {0.5});
        return integrate_forward(p, m, u).terminal_state(0)[0];
    };
    const double ref = terminal_at(256);
    const double e1 = std::abs(terminal_at(4) - ref);
    const double e2 = std::abs(terminal_at(8) - ref);
    CHECK(e1 / e2 >= 11.0);
    CHECK(e1 / e2 <= 25.0);
}

TEST_CASE("adjoint-state duality on a linear problem") {
    // d/dt (lambda x) = lambda B u for linear dynamics and any terminal
    // covector, so lambda(1)x(1) - lambda(0)x(0) = int lambda B u dt.
    const EnsembleProblem p = linear2d_with_linear_cost({0.7, -1.3});
    const TimeGrid grid(16, 32);
    const DiscreteMeasure m = single_atom(0.35);
    PiecewiseControl u(grid, 2);
    Rng rng(17);
    for (int l = 0; l < grid.M; ++l) {
        u.values()(l, 0) = 2.0 * rng.uniform() - 1.0;
        u.values()(l, 1) = 2.0 * rng.uniform() - 1.0;
    }
    const TrajectoryBundle traj = integrate_forward(p, m, u);
    const AdjointBundle adj = integrate_adjoint(p, m, u, traj);

    const double boundary =
        adj.costates[0].row(grid.num_substeps()).dot(traj.states[0].row(grid.num_substeps())) -
        adj.costates[0].row(0).dot(traj.states[0].row(0));
    // Composite Simpson quadrature of lambda B u per control interval
    // (B = I here); the integrand is smooth inside each interval.
    double integral = 0.0;
    for (int l = 0; l < grid.M; ++l) {
        for (int s = 0; s < grid.S; s += 2) {
            const int mm = l * grid.S + s;
            const double f0 = adj.costates[0].row(mm).dot(u.values().row(l));
            const double f1 = adj.costates[0].row(mm + 1).dot(u.values().row(l));
            const double f2 = adj.costates[0].row(mm + 2).dot(u.values().row(l));
            integral += (f0 + 4.0 * f1 + f2) * grid.dt() / 3.0;
        }
    }
    CHECK(boundary == doctest::Approx(integral).epsilon(1e-8));
}

TEST_CASE("boundedness of linear2d trajectories under bounded controls") {
    const EnsembleProblem p = builtin_problem("linear2d");
    const TimeGrid grid(16, 4);
    Rng rng(23);
    Eigen::VectorXd probe(2), f0(2);
    // C bounds (|F0| + max_i |F_i|) / (1 + |x|) over probes.
    double C = 1.0; // the control columns are unit vectors
    for (int i = 0; i < 200; ++i) {
        probe << 10.0 * (rng.uniform() - 0.5), 10.0 * (rng.uniform() - 0.5);
        p.eval_F0(probe, vec1(rng.uniform() - 0.5), f0);
        C = std::max(C, (f0.norm() + 1.0) / (1.0 + probe.norm()));
    }
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        PiecewiseControl u(grid, 2);
        Rng r2(seed);
        for (int l = 0; l < grid.M; ++l) {
            u.values()(l, 0) = 2.0 * r2.uniform() - 1.0;
            u.values()(l, 1) = 2.0 * r2.uniform() - 1.0;
        }
        const double R = u.l2_norm();
        const double gain = C * (1.0 + std::sqrt(2.0) * R);
        const double bound = gain * std::exp(gain); // x0 = 0
        const TrajectoryBundle traj =
            integrate_forward(p, single_atom(r2.uniform() - 0.5), u);
        CHECK(traj.states[0].rowwise().norm().maxCoeff() <= bound);
    }
}

TEST_CASE("Hoelder-1/2 equicontinuity in time") {
    const EnsembleProblem p = builtin_problem("linear2d");
    const TimeGrid grid(32, 4);
    PiecewiseControl u(grid, 2);
    Rng rng(29);
    for (int l = 0; l < grid.M; ++l) {
        u.values()(l, 0) = 2.0 * rng.uniform() - 1.0;
        u.values()(l, 1) = 2.0 * rng.uniform() - 1.0;
    }
    const TrajectoryBundle traj = integrate_forward(p, single_atom(0.4), u);
    const double x_max = traj.states[0].rowwise().norm().maxCoeff();
    // |x(t1)-x(t2)| <= int |F0| + |F u| <= sup|F0| (t2-t1) + sqrt(k) R sqrt(t2-t1),
    // so the Hoelder-1/2 quotient is bounded by sup|F0| + sqrt(2) ||u||.
    const double L = (1.0 + x_max) + std::sqrt(2.0) * u.l2_norm();
    const int total = grid.num_substeps();
    for (int a = 0; a <= total; a += 7) {
        for (int b = a + 1; b <= total; b += 11) {
            const double dtt = grid.node_time(b) - grid.node_time(a);
            const double diff = (traj.states[0].row(b) - traj.states[0].row(a)).norm();
            CHECK(diff <= L * std::sqrt(dtt) * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("divergence raises a named error") {
    // xdot = x^2 from x0 = 2 blows up at t = 0.5.
    EnsembleProblem p;
    p.n = 1;
    p.k = 1;
    p.eval_F0 = [](const Eigen::VectorXd& x, const Eigen::VectorXd&, Eigen::VectorXd& out) {
        out.resize(1);
        out[0] = x[0] * x[0];
    };
    p.eval_F = [](const Eigen::VectorXd&, const Eigen::VectorXd&, Eigen::MatrixXd& out) {
        out.setZero(1, 1);
    };
    p.x0 = [](const Eigen::VectorXd&) { return Eigen::VectorXd(vec1(2.0)); };
    const TimeGrid grid(64, 8);
    try {
        integrate_forward(p, single_atom(0.0), PiecewiseControl(grid, 1));
        FAIL("expected divergence_error");
    } catch (const divergence_error& e) {
        CHECK(e.member_index == 0);
        CHECK(e.time_of_failure > 0.0);
        CHECK(e.time_of_failure <= 1.0);
    }
}

TEST_CASE("weak_convergence_probe basics and decay") {
    const EnsembleProblem p = builtin_problem("linear2d");
    const TimeGrid grid(4, 4);
    const PiecewiseControl u(grid, 2);

    const WeakProbeResult zero =
        weak_convergence_probe(p, vec1(0.25), u, 0.0, {4, 16});
    for (double d : zero.state_deviation) CHECK(d == 0.0);
    for (double d : zero.adjoint_deviation) CHECK(d == 0.0);

    const WeakProbeResult r =
        weak_convergence_probe(p, vec1(0.25), u, 1.0, {4, 16, 64});
    REQUIRE(r.state_deviation.size() == 3);
    CHECK(r.state_deviation[1] < r.state_deviation[0]);
    CHECK(r.state_deviation[2] < r.state_deviation[1]);
    CHECK(r.adjoint_deviation[1] < r.adjoint_deviation[0]);
    CHECK(r.adjoint_deviation[2] < r.adjoint_deviation[1]);

    CHECK_THROWS_AS(
        static_cast<void>(weak_convergence_probe(p, vec1(0.25), u, 1.0, {3})),
        validation_error); // not a multiple of M
    CHECK_THROWS_AS(
        static_cast<void>(weak_convergence_probe(p, vec1(0.25), u, 1.0, {0})),
        validation_error);
}

TEST_CASE("linear fast path agrees with the generic RK4 path") {
    // Same dynamics once through the is_linear shortcut and once through
    // the generic evaluators; both are classical RK4, so the results agree
    // to rounding.
    const EnsembleProblem lin = builtin_problem("linear2d");
    EnsembleProblem gen = lin;
    gen.is_linear = false;
    const TimeGrid grid(8, 4);
    const DiscreteMeasure m = single_atom(0.37);
    PiecewiseControl u(grid, 2);
    Rng rng(31);
    for (int l = 0; l < grid.M; ++l) {
        u.values()(l, 0) = 2.0 * rng.uniform() - 1.0;
        u.values()(l, 1) = 2.0 * rng.uniform() - 1.0;
    }
    const TrajectoryBundle a = integrate_forward(lin, m, u);
    const TrajectoryBundle b = integrate_forward(gen, m, u);
    CHECK((a.states[0] - b.states[0]).cwiseAbs().maxCoeff() <= 1e-13);
    const AdjointBundle la = integrate_adjoint(lin, m, u, a);
    const AdjointBundle lb = integrate_adjoint(gen, m, u, b);
    CHECK((la.costates[0] - lb.costates[0]).cwiseAbs().maxCoeff() <= 1e-12);
}
