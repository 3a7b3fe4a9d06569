#include "ensctrl/lq.hpp"

#include <cmath>
#include <limits>

namespace ensctrl {

Eigen::MatrixXd expm(const Eigen::MatrixXd& A) {
    if (A.rows() != A.cols()) throw validation_error("expm: matrix must be square");
    const int n = static_cast<int>(A.rows());
    const double norm = A.cwiseAbs().rowwise().sum().maxCoeff(); // infinity norm
    int squarings = 0;
    if (norm > 0.5) {
        squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    }
    const Eigen::MatrixXd As = A / std::pow(2.0, squarings);
    Eigen::MatrixXd result = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
    for (int i = 1; i <= 13; ++i) {
        term = (term * As) / i;
        result += term;
    }
    for (int s = 0; s < squarings; ++s) {
        result = result * result;
    }
    return result;
}

LqSolution solve_lq(const EnsembleProblem& problem, const DiscreteMeasure& measure,
                    int M, double beta, int S) {
    if (!problem.is_linear || !problem.quadratic_terminal) {
        throw validation_error("solve_lq: problem must be linear with quadratic terminal cost");
    }
    if (M < 1 || S < 1) throw validation_error("solve_lq: M and S must be >= 1");
    if (!(beta > 0.0)) throw validation_error("solve_lq: beta must be > 0");

    const int n = problem.n;
    const int k = problem.k;
    const int N = measure.size();
    const int dim = M * k;
    const double h = 1.0 / M;

    Eigen::MatrixXd H = (0.5 * beta / M) * Eigen::MatrixXd::Identity(dim, dim);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(dim);
    std::vector<Eigen::MatrixXd> G(N);      // n x dim terminal input maps
    std::vector<Eigen::VectorXd> free_end(N), targets(N);

    for (int j = 0; j < N; ++j) {
        const Eigen::VectorXd& theta = measure.theta(j);
        const Eigen::MatrixXd A = problem.A(theta);
        const Eigen::MatrixXd B = problem.B(theta);
        // exp([[A,B],[0,0]] h) = [[e^{Ah}, int_0^h e^{As} ds B], [0, I]]
        Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + k, n + k);
        aug.topLeftCorner(n, n) = A;
        aug.topRightCorner(n, k) = B;
        const Eigen::MatrixXd Eh = expm(h * aug);
        const Eigen::MatrixXd Phi_h = Eh.topLeftCorner(n, n);
        const Eigen::MatrixXd Gamma_h = Eh.topRightCorner(n, k);

        // Gamma_l = Phi_h^{M-l} Gamma_h, built from the last interval backwards.
        G[j].resize(n, dim);
        Eigen::MatrixXd Gamma = Gamma_h;
        for (int l = M; l >= 1; --l) {
            G[j].middleCols((l - 1) * k, k) = Gamma;
            if (l > 1) Gamma = Phi_h * Gamma;
        }
        Eigen::MatrixXd Phi = Eigen::MatrixXd::Identity(n, n);
        for (int l = 0; l < M; ++l) Phi = Phi_h * Phi;
        free_end[j] = Phi * problem.x0(theta);
        targets[j] = problem.target(theta);

        H.noalias() += measure.alpha(j) * (G[j].transpose() * G[j]);
        b.noalias() += measure.alpha(j) * (G[j].transpose() * (targets[j] - free_end[j]));
    }

    const Eigen::LDLT<Eigen::MatrixXd> solver(H);
    const Eigen::VectorXd z = solver.solve(b);

    Eigen::MatrixXd values(M, k);
    for (int l = 0; l < M; ++l) {
        values.row(l) = z.segment(l * k, k).transpose();
    }
    TimeGrid grid(M, S);
    LqSolution sol{PiecewiseControl(grid, std::move(values)), 0.0,
                   Eigen::MatrixXd(N, n), 0.0, 0.0};

    for (int j = 0; j < N; ++j) {
        const Eigen::VectorXd xT = free_end[j] + G[j] * z;
        sol.per_member_terminal.row(j) = xT.transpose();
        sol.cost_opt += measure.alpha(j) * (xT - targets[j]).squaredNorm();
    }
    sol.cost_opt += (0.5 * beta / M) * z.squaredNorm();
    sol.normal_residual = (H * z - b).norm();

    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(H);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    sol.gram_condition = (lo > 0.0) ? hi / lo : std::numeric_limits<double>::infinity();
    return sol;
}

int kalman_rank(const DiscreteMeasure& measure, const EnsembleProblem& problem) {
    if (!problem.is_linear) {
        throw validation_error("kalman_rank: problem must be linear");
    }
    const int n = problem.n;
    const int k = problem.k;
    const int N = measure.size();
    const int dim = n * N;

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(dim, k);
    for (int j = 0; j < N; ++j) {
        A.block(j * n, j * n, n, n) = problem.A(measure.theta(j));
        B.middleRows(j * n, n) = problem.B(measure.theta(j));
    }

    Eigen::MatrixXd kalman(dim, dim * k);
    Eigen::MatrixXd power = B;
    for (int r = 0; r < dim; ++r) {
        kalman.middleCols(r * k, k) = power;
        if (r + 1 < dim) power = A * power;
    }

    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(kalman);
    const auto& sv = svd.singularValues();
    const double threshold = 1e-9 * sv.maxCoeff();
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i) {
        if (sv[i] > threshold) ++rank;
    }
    return rank;
}

} // namespace ensctrl
