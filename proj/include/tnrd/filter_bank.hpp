#ifndef TNRD_FILTER_BANK_HPP
#define TNRD_FILTER_BANK_HPP

#include <vector>

#include "tnrd/image.hpp"

namespace tnrd {

/// Coefficient vector over the zero-mean DCT basis; length m*m - 1.
struct FilterAtom {
    std::vector<double> omega;
};

/// The full m x m separable DCT-II basis with the constant atom removed,
/// ordered by JPEG-style zig-zag frequency traversal. Every atom has unit
/// Frobenius norm and zero mean; atoms are mutually orthogonal. Immutable
/// after construction and shareable across threads.
struct DctBasis {
    int m = 0;
    std::vector<Kernel> atoms;  // m*m - 1 kernels

    int atom_count() const { return static_cast<int>(atoms.size()); }
};

DctBasis build_dct_basis(int m);

/// k = sum_r omega_r * b_r / ||omega||_2. Unit-norm, zero-mean; invariant
/// under positive scaling of omega. Throws on ||omega|| < 1e-12.
Kernel materialize(const FilterAtom& omega, const DctBasis& basis);

/// Adjoint of the materialization Jacobian: maps dL/dk to dL/domega.
/// With n = ||omega||, k = B omega / n:  domega = (B^T dk - <k,dk> omega/n)/n.
std::vector<double> materialize_jacobian_apply(const FilterAtom& omega, const DctBasis& basis,
                                               const Kernel& dk);

}  // namespace tnrd

#endif
