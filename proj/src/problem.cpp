#include "ensctrl/problem.hpp"

namespace ensctrl {

namespace {

EnsembleProblem make_linear(std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> A,
                            std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> B,
                            std::function<Eigen::VectorXd(const Eigen::VectorXd&)> x0,
                            std::function<Eigen::VectorXd(const Eigen::VectorXd&)> target,
                            int n, int k) {
    EnsembleProblem p;
    p.n = n;
    p.k = k;
    p.is_linear = true;
    p.quadratic_terminal = true;
    p.A = A;
    p.B = B;
    p.x0 = std::move(x0);
    p.target = target;
    p.eval_F0 = [A](const Eigen::VectorXd& x, const Eigen::VectorXd& th, Eigen::VectorXd& out) {
        out.noalias() = A(th) * x;
    };
    p.eval_F = [B](const Eigen::VectorXd&, const Eigen::VectorXd& th, Eigen::MatrixXd& out) {
        out = B(th);
    };
    p.jac_F0 = [A](const Eigen::VectorXd&, const Eigen::VectorXd& th, Eigen::MatrixXd& out) {
        out = A(th);
    };
    p.jac_Fi = [n](const Eigen::VectorXd&, const Eigen::VectorXd&, int, Eigen::MatrixXd& out) {
        out.setZero(n, n);
    };
    p.terminal_cost = [target](const Eigen::VectorXd& x, const Eigen::VectorXd& th) {
        return (x - target(th)).squaredNorm();
    };
    p.terminal_grad = [target](const Eigen::VectorXd& x, const Eigen::VectorXd& th,
                               Eigen::VectorXd& out) {
        out = 2.0 * (x - target(th));
    };
    return p;
}

} // namespace

EnsembleProblem builtin_problem(const std::string& name, const BuiltinOptions& opts) {
    if (name == "linear2d") {
        const Eigen::Vector2d y = opts.y_tar;
        auto A = [](const Eigen::VectorXd& th) {
            Eigen::MatrixXd a(2, 2);
            a << 0.0, 1.0, th[0], 0.0;
            return a;
        };
        auto B = [](const Eigen::VectorXd&) {
            return Eigen::MatrixXd(Eigen::Matrix2d::Identity());
        };
        auto x0 = [](const Eigen::VectorXd&) { return Eigen::VectorXd(Eigen::Vector2d::Zero()); };
        auto target = [y](const Eigen::VectorXd&) { return Eigen::VectorXd(y); };
        EnsembleProblem p = make_linear(A, B, x0, target, 2, 2);
        // Allocation-free evaluators for the integrator's hot loops.
        p.eval_F0 = [](const Eigen::VectorXd& x, const Eigen::VectorXd& th, Eigen::VectorXd& out) {
            out.resize(2);
            out[0] = x[1];
            out[1] = th[0] * x[0];
        };
        p.eval_F = [](const Eigen::VectorXd&, const Eigen::VectorXd&, Eigen::MatrixXd& out) {
            out.setIdentity(2, 2);
        };
        p.jac_F0 = [](const Eigen::VectorXd&, const Eigen::VectorXd& th, Eigen::MatrixXd& out) {
            out.resize(2, 2);
            out(0, 0) = 0.0;
            out(0, 1) = 1.0;
            out(1, 0) = th[0];
            out(1, 1) = 0.0;
        };
        return p;
    }
    if (name == "generic-lti") {
        const Eigen::MatrixXd A0 = opts.lti_A0, A1 = opts.lti_A1;
        const Eigen::MatrixXd B0 = opts.lti_B0, B1 = opts.lti_B1;
        const Eigen::VectorXd x0v = opts.lti_x0, yv = opts.lti_target;
        const int n = static_cast<int>(A0.rows());
        const int k = static_cast<int>(B0.cols());
        if (n == 0 || k == 0 || A0.cols() != n || A1.rows() != n || A1.cols() != n ||
            B0.rows() != n || B1.rows() != n || B1.cols() != k ||
            x0v.size() != n || yv.size() != n) {
            throw validation_error("generic-lti: inconsistent matrix shapes");
        }
        auto A = [A0, A1](const Eigen::VectorXd& th) { return Eigen::MatrixXd(A0 + th[0] * A1); };
        auto B = [B0, B1](const Eigen::VectorXd& th) { return Eigen::MatrixXd(B0 + th[0] * B1); };
        auto x0 = [x0v](const Eigen::VectorXd&) { return x0v; };
        auto target = [yv](const Eigen::VectorXd&) { return yv; };
        return make_linear(A, B, x0, target, n, k);
    }
    if (name == "logistic1d") {
        // xdot = theta x (1-x) + u, terminal cost (x - y)^2
        EnsembleProblem p;
        p.n = 1;
        p.k = 1;
        const double x0v = opts.logistic_x0;
        const double yv = opts.logistic_target;
        p.eval_F0 = [](const Eigen::VectorXd& x, const Eigen::VectorXd& th, Eigen::VectorXd& out) {
            out.resize(1);
            out[0] = th[0] * x[0] * (1.0 - x[0]);
        };
        p.eval_F = [](const Eigen::VectorXd&, const Eigen::VectorXd&, Eigen::MatrixXd& out) {
            out.setOnes(1, 1);
        };
        p.jac_F0 = [](const Eigen::VectorXd& x, const Eigen::VectorXd& th, Eigen::MatrixXd& out) {
            out.resize(1, 1);
            out(0, 0) = th[0] * (1.0 - 2.0 * x[0]);
        };
        p.jac_Fi = [](const Eigen::VectorXd&, const Eigen::VectorXd&, int, Eigen::MatrixXd& out) {
            out.setZero(1, 1);
        };
        p.x0 = [x0v](const Eigen::VectorXd&) {
            Eigen::VectorXd v(1);
            v[0] = x0v;
            return v;
        };
        p.quadratic_terminal = true;
        p.target = [yv](const Eigen::VectorXd&) {
            Eigen::VectorXd v(1);
            v[0] = yv;
            return v;
        };
        p.terminal_cost = [yv](const Eigen::VectorXd& x, const Eigen::VectorXd&) {
            return (x[0] - yv) * (x[0] - yv);
        };
        p.terminal_grad = [yv](const Eigen::VectorXd& x, const Eigen::VectorXd&, Eigen::VectorXd& out) {
            out.resize(1);
            out[0] = 2.0 * (x[0] - yv);
        };
        return p;
    }
    throw validation_error("unknown builtin problem: " + name);
}

} // namespace ensctrl
