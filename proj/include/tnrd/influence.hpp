#ifndef TNRD_INFLUENCE_HPP
#define TNRD_INFLUENCE_HPP

#include <functional>
#include <vector>

namespace tnrd {

enum class RbfKind { gaussian, triangular };

/// Radial basis family on an equidistant center grid. Default grid matches
/// the filter-response range of unit-norm filters on [0,255] images:
/// 63 centers on [-310, 310], scale 10.
struct RbfSpec {
    RbfKind kind = RbfKind::gaussian;
    double center_min = -310.0;
    double center_step = 10.0;
    int center_count = 63;
    double gamma = 10.0;

    double center(int j) const { return center_min + center_step * j; }
    void validate() const;
};

/// Weight vector over the RBF grid; phi(z) = sum_j w_j * basis_j(z).
struct InfluenceFunction {
    std::vector<double> w;
};

/// Basis value, its z-derivative, and its antiderivative anchored at 0.
/// Triangular derivative at kink points is taken from the left.
double rbf_basis(const RbfSpec& spec, int j, double z);
double rbf_basis_prime(const RbfSpec& spec, int j, double z);
double rbf_basis_antiderivative(const RbfSpec& spec, int j, double z);

/// Index window [begin, end) of centers that can contribute at z. Gaussian
/// tails are truncated where exp(-d^2/2gamma^2) < ~2e-16; triangular at the
/// exact support edge.
void rbf_window(const RbfSpec& spec, double z, int& begin, int& end);

double eval_phi(const InfluenceFunction& f, const RbfSpec& spec, double z);
double eval_phi_prime(const InfluenceFunction& f, const RbfSpec& spec, double z);
double eval_rho(const InfluenceFunction& f, const RbfSpec& spec, double z);

std::vector<double> eval_phi(const InfluenceFunction& f, const RbfSpec& spec,
                             const std::vector<double>& z);
std::vector<double> eval_phi_prime(const InfluenceFunction& f, const RbfSpec& spec,
                                   const std::vector<double>& z);
std::vector<double> eval_rho(const InfluenceFunction& f, const RbfSpec& spec,
                             const std::vector<double>& z);

/// Row of basis evaluations at z: entry j is basis_j(z), so that
/// eval_phi(f, spec, z) == <row, f.w>.
std::vector<double> eval_phi_weight_gradient(const RbfSpec& spec, double z);

/// grad_w[j] += coef * basis_j(z) over the contributing window.
void accumulate_weight_gradient(const RbfSpec& spec, double z, double coef,
                                std::vector<double>& grad_w);

/// Least-squares fit of target over the sample grid. Throws on a
/// numerically rank-deficient system.
InfluenceFunction fit_weights(const std::function<double(double)>& target, const RbfSpec& spec,
                              const std::vector<double>& grid);

/// Equidistant sample grid [lo, hi] with the given step (inclusive of hi).
std::vector<double> sample_grid(double lo, double hi, double step);

}  // namespace tnrd

#endif
