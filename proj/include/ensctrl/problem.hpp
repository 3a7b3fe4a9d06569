#ifndef ENSCTRL_PROBLEM_HPP
#define ENSCTRL_PROBLEM_HPP

#include <Eigen/Dense>
#include <functional>
#include <string>

#include "ensctrl/errors.hpp"

namespace ensctrl {

// One parametrized affine-control system
//   xdot = F0(x, theta) + F(x, theta) u,   x(0) = x0(theta),
// with a terminal cost a(x, theta) >= 0 and its state gradient.
// Evaluators write into caller-provided outputs so that the integrator's
// inner loops do not allocate. All evaluators must be pure in (x, theta).
struct EnsembleProblem {
    int n = 0; // state dimension
    int k = 0; // control dimension
    int d = 1; // parameter dimension

    std::function<void(const Eigen::VectorXd& x, const Eigen::VectorXd& theta,
                       Eigen::VectorXd& out)> eval_F0;
    // n x k matrix of controlled fields
    std::function<void(const Eigen::VectorXd& x, const Eigen::VectorXd& theta,
                       Eigen::MatrixXd& out)> eval_F;
    std::function<void(const Eigen::VectorXd& x, const Eigen::VectorXd& theta,
                       Eigen::MatrixXd& out)> jac_F0;
    // Jacobian of column i (0-based) of F
    std::function<void(const Eigen::VectorXd& x, const Eigen::VectorXd& theta, int i,
                       Eigen::MatrixXd& out)> jac_Fi;
    std::function<Eigen::VectorXd(const Eigen::VectorXd& theta)> x0;
    std::function<double(const Eigen::VectorXd& x, const Eigen::VectorXd& theta)> terminal_cost;
    std::function<void(const Eigen::VectorXd& x, const Eigen::VectorXd& theta,
                       Eigen::VectorXd& out)> terminal_grad;

    // Set when F0 = A(theta) x and F = B(theta); unlocks the exact solver.
    bool is_linear = false;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd& theta)> A;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd& theta)> B;

    // Set when a(x,theta) = |x - y(theta)|^2.
    bool quadratic_terminal = false;
    std::function<Eigen::VectorXd(const Eigen::VectorXd& theta)> target;
};

struct BuiltinOptions {
    Eigen::Vector2d y_tar{-1.0, -1.0};          // linear2d target
    double logistic_x0 = 0.5;                   // logistic1d initial state
    double logistic_target = 0.0;               // logistic1d target
    Eigen::MatrixXd lti_A0, lti_A1, lti_B0, lti_B1; // generic-lti: A(th)=A0+th*A1 etc.
    Eigen::VectorXd lti_x0, lti_target;
};

// Built-ins: "linear2d" (A = [[0,1],[theta,0]], B = I, steer to y_tar),
// "generic-lti" (matrices affine in a scalar theta), and "logistic1d"
// (xdot = theta x (1-x) + u) as a nonlinear test case.
EnsembleProblem builtin_problem(const std::string& name,
                                const BuiltinOptions& opts = BuiltinOptions{});

} // namespace ensctrl

#endif
