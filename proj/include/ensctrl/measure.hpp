#ifndef ENSCTRL_MEASURE_HPP
#define ENSCTRL_MEASURE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "ensctrl/errors.hpp"
#include "ensctrl/rng.hpp"

namespace ensctrl {

// Convex combination of Dirac masses on the parameter space.
class DiscreteMeasure {
public:
    DiscreteMeasure(std::vector<Eigen::VectorXd> thetas, std::vector<double> alphas);

    int size() const { return static_cast<int>(thetas_.size()); }
    int dim() const { return static_cast<int>(thetas_.front().size()); }
    const Eigen::VectorXd& theta(int j) const { return thetas_[j]; }
    double alpha(int j) const { return alphas_[j]; }
    const std::vector<Eigen::VectorXd>& thetas() const { return thetas_; }
    const std::vector<double>& alphas() const { return alphas_; }

private:
    std::vector<Eigen::VectorXd> thetas_;
    std::vector<double> alphas_;
};

// Beta(4,4) shifted to [-1/2, 1/2], symmetric about 0, variance 1/36.
struct Beta44Law {
    static constexpr double lo = -0.5;
    static constexpr double hi = 0.5;
};

// Regularized incomplete beta I_x(4,4) on [0,1]; closed form for integer
// shape parameters.
double beta44_cdf(double x);

// Inverse of beta44_cdf by bisection to absolute tolerance 1e-12.
double beta44_quantile(double p);

// N iid samples with weight 1/N each. A Beta(4,4) variate is drawn as
// G1/(G1+G2) with G1, G2 sums of 4 standard exponentials, then shifted
// to the law's support.
DiscreteMeasure sample_empirical(const Beta44Law& law, int N, std::uint64_t seed);

// Equal-weight atoms at the quantiles (j-1/2)/N, j = 1..N.
DiscreteMeasure quantile_quadrature(const Beta44Law& law, int N);

// sum_j alpha_j * theta_j^p for scalar-parameter measures.
double measure_moment(const DiscreteMeasure& m, int p);

} // namespace ensctrl

#endif
