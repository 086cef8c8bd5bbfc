#pragma once

#include "troforge/core.hpp"
#include "troforge/grids.hpp"
#include "troforge/span.hpp"

#include <cstdint>
#include <map>
#include <tuple>
#include <vector>

namespace troforge {

struct ClosureResult {
    Subspace space;
    int iterations = 0;
    int generator_count = 0;
    std::vector<BlockElement> generators; // normalized copies of the input
};

/// Smallest subspace containing the generators and closed under x y* z.
/// Grows the span of odd generator words two letters per round; the even
/// word space g* w is kept alongside so each round costs O(|new| * |gens|)
/// products instead of a cubic pass over the basis.
ClosureResult tro_closure(const std::vector<BlockElement>& gens, const ToleranceConfig& tol);

/// Span of all words g_{i1} g_{i2} ... in the generators (square blocks).
Subspace algebra_closure(const std::vector<BlockElement>& gens, const ToleranceConfig& tol);

/// Largest projection residual of ternary(b_i,b_j,b_k) over basis triples;
/// exhaustive up to the sample budget, uniformly sampled beyond it.
double ternary_closedness_defect(const ClosureResult& t, const ToleranceConfig& tol,
                                 int max_checks = 4096, std::uint64_t seed = 42);

struct MatrixUnitSystem {
    std::vector<std::pair<int, int>> block_dims;
    std::map<std::tuple<int, int, int>, BlockElement> units; // (alpha,i,j), 1-based

    const BlockElement& at(int alpha, int i, int j) const;
};

/// Relations (i) product rule, (ii) vanishing for mismatched indices or
/// blocks, (iii) linear independence.
AxiomReport verify_matrix_units(const MatrixUnitSystem& m, const ToleranceConfig& tol);

/// e_ij = u_ii (sum_k u_kk)* u_ji inside the TRO generated by a hermitian
/// grid; yields a full n x n unit system.
MatrixUnitSystem extract_matrix_units_hermitian(const Grid& g, const ToleranceConfig& tol);

struct SymplecticUnits {
    MatrixUnitSystem units;
    BlockElement v; // sum of the diagonal units
    double well_definedness_residual = 0.0;
    double v_relation_residual = 0.0;
    double delta_relation_residual = 0.0;
};

/// e_ii = u_ik u_kl* u_il (choice-independent), e_ij = e_ii e_ii* u_ij e_jj* e_jj.
/// Requires n >= 5.
SymplecticUnits extract_matrix_units_symplectic(const Grid& g, const ToleranceConfig& tol);

struct BlockDecomposition {
    std::vector<std::pair<int, int>> blocks; // (n_alpha, m_alpha), sorted descending
    std::vector<BlockElement> central_projections;
    MatrixUnitSystem units;
    bool units_available = true;

    std::vector<std::pair<int, int>> sorted_blocks() const { return blocks; }
};

/// Block structure of a ternary-closed subspace: minimal central projections
/// of the left multiplier algebra, block dimensions, and (for faithful
/// multiplicity-one realizations) a rectangular unit system realizing the
/// isomorphism onto the direct sum of full matrix blocks.
BlockDecomposition decompose_blocks(const ClosureResult& t, const ToleranceConfig& tol,
                                    std::uint64_t seed = 42);

struct AntiAutomorphism {
    Subspace domain;
    Eigen::MatrixXcd matrix; // action in the domain basis
    double residual = 0.0;   // consistency defect over dependent words
    double order2_residual = 0.0;
    double generator_fix_residual = 0.0;
    double antimult_residual = 0.0;
    int max_word_length = 1;

    bool ok(const ToleranceConfig& tol) const { return residual < tol.eq_tol; }
};

/// Linear extension of word reversal g1 g2* g3 ... -> ... g3 g2* g1 on the
/// TRO generated by gens. A residual above eq_tol means the realization does
/// not admit the reversal (it is not the universal envelope).
AntiAutomorphism word_antiautomorphism(const std::vector<BlockElement>& gens,
                                       const ClosureResult& t, const ToleranceConfig& tol,
                                       std::uint64_t seed = 42);

} // namespace troforge
