#include "tnrd/filter_bank.hpp"

#include <cmath>
#include <stdexcept>

namespace tnrd {

namespace {

constexpr double kDegenerateOmega = 1e-12;

// JPEG-style zig-zag traversal of the (col,row) frequency grid.
std::vector<std::pair<int, int>> zigzag_order(int m) {
    std::vector<std::pair<int, int>> order;
    order.reserve(static_cast<size_t>(m) * m);
    for (int s = 0; s < 2 * m - 1; ++s) {
        if (s % 2 == 0) {
            for (int row = std::min(s, m - 1); row >= 0 && s - row < m; --row)
                order.emplace_back(s - row, row);
        } else {
            for (int col = std::min(s, m - 1); col >= 0 && s - col < m; --col)
                order.emplace_back(col, s - col);
        }
    }
    return order;
}

double omega_norm(const FilterAtom& a) {
    double sq = 0.0;
    for (double v : a.omega) sq += v * v;
    return std::sqrt(sq);
}

}  // namespace

DctBasis build_dct_basis(int m) {
    if (m % 2 == 0 || m < 3 || m > 15)
        throw std::invalid_argument("build_dct_basis: m must be odd and in [3,15]");
    // Orthonormal 1D DCT-II rows: c_k(n) = a_k cos(pi (2n+1) k / (2m)).
    std::vector<std::vector<double>> dct1d(m, std::vector<double>(m));
    for (int k = 0; k < m; ++k) {
        const double a = (k == 0) ? std::sqrt(1.0 / m) : std::sqrt(2.0 / m);
        for (int n = 0; n < m; ++n)
            dct1d[k][n] = a * std::cos(M_PI * (2 * n + 1) * k / (2.0 * m));
    }
    DctBasis basis;
    basis.m = m;
    basis.atoms.reserve(static_cast<size_t>(m) * m - 1);
    for (auto [kx, ky] : zigzag_order(m)) {
        if (kx == 0 && ky == 0) continue;  // drop the constant atom
        Kernel atom(m);
        for (int y = 0; y < m; ++y)
            for (int x = 0; x < m; ++x)
                atom.at(x, y) = dct1d[ky][y] * dct1d[kx][x];
        basis.atoms.push_back(std::move(atom));
    }
    return basis;
}

Kernel materialize(const FilterAtom& omega, const DctBasis& basis) {
    if (omega.omega.size() != basis.atoms.size())
        throw std::invalid_argument("materialize: omega length mismatch");
    const double n = omega_norm(omega);
    if (n < kDegenerateOmega)
        throw std::runtime_error("materialize: degenerate filter (||omega|| < 1e-12)");
    Kernel k(basis.m);
    for (size_t r = 0; r < omega.omega.size(); ++r) {
        const double c = omega.omega[r] / n;
        if (c == 0.0) continue;
        const Kernel& b = basis.atoms[r];
        for (size_t i = 0; i < k.taps.size(); ++i) k.taps[i] += c * b.taps[i];
    }
    return k;
}

std::vector<double> materialize_jacobian_apply(const FilterAtom& omega, const DctBasis& basis,
                                               const Kernel& dk) {
    if (omega.omega.size() != basis.atoms.size())
        throw std::invalid_argument("materialize_jacobian_apply: omega length mismatch");
    const double n = omega_norm(omega);
    if (n < kDegenerateOmega)
        throw std::runtime_error("materialize_jacobian_apply: degenerate filter");
    const Kernel k = materialize(omega, basis);
    double k_dot_dk = 0.0;
    for (size_t i = 0; i < k.taps.size(); ++i) k_dot_dk += k.taps[i] * dk.taps[i];
    std::vector<double> grad(omega.omega.size());
    for (size_t r = 0; r < grad.size(); ++r) {
        const Kernel& b = basis.atoms[r];
        double bt_dk = 0.0;
        for (size_t i = 0; i < b.taps.size(); ++i) bt_dk += b.taps[i] * dk.taps[i];
        grad[r] = (bt_dk - k_dot_dk * omega.omega[r] / n) / n;
    }
    return grad;
}

}  // namespace tnrd
