#pragma once

#include "troforge/core.hpp"
#include "troforge/span.hpp"

namespace troforge {

/// Symmetrized triple product {x,y,z} = (x y* z + z y* x)/2, blockwise.
BlockElement jordan_triple(const BlockElement& x, const BlockElement& y, const BlockElement& z);

bool is_tripotent(const BlockElement& e, const ToleranceConfig& tol);

/// The operator x [] y restricted to a subspace closed under z -> {x,y,z},
/// expressed in the subspace basis (column j = coordinates of {x,y,b_j}).
struct BoxOperator {
    Subspace domain;
    Eigen::MatrixXcd matrix;
};

BoxOperator box_operator(const BlockElement& x, const BlockElement& y, const Subspace& s,
                         const ToleranceConfig& tol);

/// Eigenspaces of e [] e for the eigenvalues 0, 1/2, 1.
struct PeirceDecomposition {
    BlockElement tripotent;
    Subspace p0, p1, p2;
};

PeirceDecomposition peirce_decompose(const BlockElement& e, const Subspace& s,
                                     const ToleranceConfig& tol);

/// True iff {e, S, e} is one-dimensional.
bool is_minimal_tripotent(const BlockElement& e, const Subspace& s, const ToleranceConfig& tol);

/// Peirce-2 C*-product a e* b. Both factors must lie in the Peirce-2 space
/// of e (checked through peirce2_membership).
BlockElement peirce2_product(const BlockElement& a, const BlockElement& b, const BlockElement& e,
                             const ToleranceConfig& tol);

/// Algebraic Peirce-2 test: v (v z* v)* v == z.
bool peirce2_membership(const BlockElement& v, const BlockElement& z, const ToleranceConfig& tol);

} // namespace troforge
