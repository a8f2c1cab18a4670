#include "tnrd/influence.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace tnrd {

namespace {

// exp(-0.5 * 8.5^2) ~ 2e-16: below double epsilon relative to the peak.
constexpr double kGaussWindowSigmas = 8.5;

void check_weights(const InfluenceFunction& f, const RbfSpec& spec) {
    if (static_cast<int>(f.w.size()) != spec.center_count)
        throw std::invalid_argument("influence: weight count does not match center grid");
}

}  // namespace

void RbfSpec::validate() const {
    if (center_count < 2) throw std::invalid_argument("RbfSpec: need at least 2 centers");
    if (center_step <= 0.0) throw std::invalid_argument("RbfSpec: step must be positive");
    if (gamma <= 0.0) throw std::invalid_argument("RbfSpec: gamma must be positive");
}

double rbf_basis(const RbfSpec& spec, int j, double z) {
    const double d = z - spec.center(j);
    if (spec.kind == RbfKind::gaussian)
        return std::exp(-d * d / (2.0 * spec.gamma * spec.gamma));
    const double a = std::abs(d) / spec.gamma;
    return a < 1.0 ? 1.0 - a : 0.0;
}

double rbf_basis_prime(const RbfSpec& spec, int j, double z) {
    const double d = z - spec.center(j);
    if (spec.kind == RbfKind::gaussian) {
        const double g2 = spec.gamma * spec.gamma;
        return -d / g2 * std::exp(-d * d / (2.0 * g2));
    }
    // Left-limit convention at the kinks d in {-gamma, 0, gamma}.
    if (d <= -spec.gamma || d > spec.gamma) return 0.0;
    return d <= 0.0 ? 1.0 / spec.gamma : -1.0 / spec.gamma;
}

double rbf_basis_antiderivative(const RbfSpec& spec, int j, double z) {
    const double mu = spec.center(j);
    const double g = spec.gamma;
    if (spec.kind == RbfKind::gaussian) {
        // int_0^z exp(-(t-mu)^2/2g^2) dt, via erf.
        const double s = g * std::sqrt(M_PI / 2.0);
        const double inv = 1.0 / (g * std::sqrt(2.0));
        return s * (std::erf((z - mu) * inv) + std::erf(mu * inv));
    }
    // Piecewise-quadratic antiderivative of the triangle, then anchor at 0.
    auto prim = [mu, g](double t) {
        const double d = t - mu;
        if (d <= -g) return 0.0;
        if (d <= 0.0) {
            const double e = d + g;
            return e * e / (2.0 * g);
        }
        if (d <= g) return g / 2.0 + d - d * d / (2.0 * g);
        return g;
    };
    return prim(z) - prim(0.0);
}

void rbf_window(const RbfSpec& spec, double z, int& begin, int& end) {
    const double reach =
        spec.kind == RbfKind::gaussian ? kGaussWindowSigmas * spec.gamma : spec.gamma;
    begin = static_cast<int>(std::ceil((z - reach - spec.center_min) / spec.center_step));
    end = static_cast<int>(std::floor((z + reach - spec.center_min) / spec.center_step)) + 1;
    if (begin < 0) begin = 0;
    if (end > spec.center_count) end = spec.center_count;
    if (end < begin) end = begin;
}

double eval_phi(const InfluenceFunction& f, const RbfSpec& spec, double z) {
    int b, e;
    rbf_window(spec, z, b, e);
    double sum = 0.0;
    for (int j = b; j < e; ++j) sum += f.w[j] * rbf_basis(spec, j, z);
    return sum;
}

double eval_phi_prime(const InfluenceFunction& f, const RbfSpec& spec, double z) {
    int b, e;
    rbf_window(spec, z, b, e);
    double sum = 0.0;
    for (int j = b; j < e; ++j) sum += f.w[j] * rbf_basis_prime(spec, j, z);
    return sum;
}

double eval_rho(const InfluenceFunction& f, const RbfSpec& spec, double z) {
    // No window truncation: the antiderivative tails do not decay.
    double sum = 0.0;
    for (int j = 0; j < spec.center_count; ++j)
        sum += f.w[j] * rbf_basis_antiderivative(spec, j, z);
    return sum;
}

std::vector<double> eval_phi(const InfluenceFunction& f, const RbfSpec& spec,
                             const std::vector<double>& z) {
    check_weights(f, spec);
    std::vector<double> out(z.size());
    for (size_t i = 0; i < z.size(); ++i) out[i] = eval_phi(f, spec, z[i]);
    return out;
}

std::vector<double> eval_phi_prime(const InfluenceFunction& f, const RbfSpec& spec,
                                   const std::vector<double>& z) {
    check_weights(f, spec);
    std::vector<double> out(z.size());
    for (size_t i = 0; i < z.size(); ++i) out[i] = eval_phi_prime(f, spec, z[i]);
    return out;
}

std::vector<double> eval_rho(const InfluenceFunction& f, const RbfSpec& spec,
                             const std::vector<double>& z) {
    check_weights(f, spec);
    std::vector<double> out(z.size());
    for (size_t i = 0; i < z.size(); ++i) out[i] = eval_rho(f, spec, z[i]);
    return out;
}

std::vector<double> eval_phi_weight_gradient(const RbfSpec& spec, double z) {
    std::vector<double> row(spec.center_count, 0.0);
    int b, e;
    rbf_window(spec, z, b, e);
    for (int j = b; j < e; ++j) row[j] = rbf_basis(spec, j, z);
    return row;
}

void accumulate_weight_gradient(const RbfSpec& spec, double z, double coef,
                                std::vector<double>& grad_w) {
    int b, e;
    rbf_window(spec, z, b, e);
    for (int j = b; j < e; ++j) grad_w[j] += coef * rbf_basis(spec, j, z);
}

InfluenceFunction fit_weights(const std::function<double(double)>& target, const RbfSpec& spec,
                              const std::vector<double>& grid) {
    spec.validate();
    const int rows = static_cast<int>(grid.size());
    const int cols = spec.center_count;
    if (rows < cols) throw std::invalid_argument("fit_weights: grid has fewer samples than centers");
    Eigen::MatrixXd A(rows, cols);
    Eigen::VectorXd y(rows);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) A(i, j) = rbf_basis(spec, j, grid[i]);
        y(i) = target(grid[i]);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    if (qr.rank() < cols) throw std::runtime_error("fit_weights: numerically rank-deficient system");
    Eigen::VectorXd w = qr.solve(y);
    InfluenceFunction f;
    f.w.assign(w.data(), w.data() + cols);
    return f;
}

std::vector<double> sample_grid(double lo, double hi, double step) {
    std::vector<double> g;
    const int n = static_cast<int>(std::floor((hi - lo) / step + 0.5));
    g.reserve(n + 1);
    for (int i = 0; i <= n; ++i) g.push_back(lo + i * step);
    return g;
}

}  // namespace tnrd
