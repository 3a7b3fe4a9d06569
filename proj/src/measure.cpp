#include "ensctrl/measure.hpp"

#include <cmath>
#include <utility>

namespace ensctrl {

DiscreteMeasure::DiscreteMeasure(std::vector<Eigen::VectorXd> thetas,
                                 std::vector<double> alphas)
    : thetas_(std::move(thetas)), alphas_(std::move(alphas)) {
    if (thetas_.empty() || thetas_.size() != alphas_.size()) {
        throw validation_error("DiscreteMeasure: atoms and weights must be nonempty and matched");
    }
    const auto d = thetas_.front().size();
    double total = 0.0;
    for (std::size_t j = 0; j < thetas_.size(); ++j) {
        if (thetas_[j].size() != d) {
            throw validation_error("DiscreteMeasure: atoms have inconsistent dimensions");
        }
        if (!(alphas_[j] > 0.0)) {
            throw validation_error("DiscreteMeasure: weights must be positive");
        }
        total += alphas_[j];
    }
    if (std::abs(total - 1.0) > 1e-12 * static_cast<double>(thetas_.size())) {
        throw validation_error("DiscreteMeasure: weights must sum to 1");
    }
}

double beta44_cdf(double x) {
    if (x < 0.0 || x > 1.0) {
        throw validation_error("beta44_cdf: argument outside [0,1]");
    }
    // I_x(4,4) = sum_{j=4..7} C(7,j) x^j (1-x)^(7-j)
    const double y = 1.0 - x;
    const double x2 = x * x;
    const double x4 = x2 * x2;
    return x4 * (35.0 * y * y * y + x * (21.0 * y * y + x * (7.0 * y + x)));
}

double beta44_quantile(double p) {
    if (p < 0.0 || p > 1.0) {
        throw validation_error("beta44_quantile: argument outside [0,1]");
    }
    double lo = 0.0, hi = 1.0;
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        if (beta44_cdf(mid) < p) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

DiscreteMeasure sample_empirical(const Beta44Law& law, int N, std::uint64_t seed) {
    if (N < 1) throw validation_error("sample_empirical: N must be >= 1");
    Rng rng(seed);
    std::vector<Eigen::VectorXd> thetas;
    thetas.reserve(N);
    for (int j = 0; j < N; ++j) {
        double g1 = 0.0, g2 = 0.0;
        for (int i = 0; i < 4; ++i) g1 += rng.exponential();
        for (int i = 0; i < 4; ++i) g2 += rng.exponential();
        Eigen::VectorXd theta(1);
        theta[0] = law.lo + (law.hi - law.lo) * (g1 / (g1 + g2));
        thetas.push_back(std::move(theta));
    }
    return DiscreteMeasure(std::move(thetas), std::vector<double>(N, 1.0 / N));
}

DiscreteMeasure quantile_quadrature(const Beta44Law& law, int N) {
    if (N < 1) throw validation_error("quantile_quadrature: N must be >= 1");
    std::vector<Eigen::VectorXd> thetas;
    thetas.reserve(N);
    for (int j = 1; j <= N; ++j) {
        const double p = (j - 0.5) / N;
        Eigen::VectorXd theta(1);
        if (2 * j == N + 1) {
            theta[0] = 0.0; // median of the symmetric law
        } else if (2 * j > N + 1) {
            // enforce exact symmetry theta_j = -theta_{N+1-j}
            theta[0] = -(law.lo + (law.hi - law.lo) * beta44_quantile(1.0 - p));
        } else {
            theta[0] = law.lo + (law.hi - law.lo) * beta44_quantile(p);
        }
        thetas.push_back(std::move(theta));
    }
    return DiscreteMeasure(std::move(thetas), std::vector<double>(N, 1.0 / N));
}

double measure_moment(const DiscreteMeasure& m, int p) {
    if (p < 0) throw validation_error("measure_moment: p must be >= 0");
    if (m.dim() != 1) throw validation_error("measure_moment: scalar parameters only");
    double acc = 0.0;
    for (int j = 0; j < m.size(); ++j) {
        acc += m.alpha(j) * std::pow(m.theta(j)[0], p);
    }
    return acc;
}

} // namespace ensctrl
