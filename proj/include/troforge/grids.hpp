#pragma once

#include "troforge/core.hpp"
#include "troforge/span.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace troforge {

enum class GridFamily { Spin, Hermitian, Symplectic, Rectangular, RankOne };

std::string family_name(GridFamily f);
std::optional<GridFamily> family_from_name(const std::string& s);

struct GridKind {
    GridFamily family = GridFamily::Rectangular;
    int n = 0;
    int m = 0;
    bool has_odd_center = false; // spin only
};

/// Element keys: spin "u<j>"/"ut<j>" plus optional center "u0"; hermitian
/// "i,j" with i <= j; symplectic "i,j" with i < j; rectangular "i,j";
/// rank-one "i".
struct Grid {
    GridKind kind;
    std::map<std::string, BlockElement> elements;

    const BlockElement& at(const std::string& key) const;
    bool has(const std::string& key) const { return elements.count(key) != 0; }
    BlockShape shape() const;
};

std::string spin_key(int j, bool tilde);
std::string pair_key(int i, int j);
std::string index_key(int i);

/// Elements in deterministic key order.
std::vector<BlockElement> grid_elements(const Grid& g);
Subspace grid_span(const Grid& g, const ToleranceConfig& tol);

struct AxiomViolation {
    std::string axiom;
    std::string index;
    double residual = 0.0;
};

struct AxiomReport {
    std::string subject;
    std::vector<AxiomViolation> violations;
    double max_residual = 0.0;
    bool passed = false;
};

/// Exhaustive check of the grid axiom system matching g.kind.family. Every
/// ordered triple of grid elements is evaluated through the triple product;
/// triples not matched by a structure relation must vanish.
AxiomReport verify_grid(const Grid& g, const ToleranceConfig& tol);

/// {id, s_1..s_k} in M_{2^n}, n = ceil(k/2), with s_{2l+1} using the first
/// and s_{2l+2} the second Pauli matrix under a sigma3 prefix.
std::vector<Matrix> build_standard_spin_system(int k);

/// Largest |s_i s_j + s_j s_i - 2 delta_ij| over all pairs.
double spin_system_defect(const std::vector<Matrix>& system);

/// Inverse of the grid-to-system construction: system[0] acts as the unit v,
/// system[1] as t_1, then alternating (s_j, t_j) pairs, trailing center for
/// even k. The result is validated by verify_grid at the call site.
Grid spin_grid_from_spin_system(const std::vector<Matrix>& system);
Grid build_spin_grid(int k);

struct SpinSystemFromGrid {
    BlockElement v; // i(u_1 + ut_1)
    std::vector<BlockElement> system;
};

/// v = i(u_1 + ut_1); system = {v, t_1, s_2, t_2, ..., center?} with
/// s_j = u_j + ut_j and t_j = i(u_j - ut_j). Each member is a self-adjoint
/// unitary of the Peirce-2 C*-algebra of v.
SpinSystemFromGrid spin_grid_to_spin_system(const Grid& g, const ToleranceConfig& tol);

Grid build_hermitian_grid(int n);
Grid build_symplectic_grid(int n);
Grid build_rectangular_grid(int n, int m);

/// Signed symplectic access: u(i,j) for i > j is -u(j,i).
BlockElement symplectic_at(const Grid& g, int i, int j);

/// Basis b^{n,k}_1..b^{n,k}_n of H^k_n as C(n,k) x C(n,k-1) sign matrices;
/// rows indexed by (n-k)-subsets, columns by (k-1)-subsets, lexicographic.
std::vector<Matrix> build_Hkn_basis(int n, int k);

/// Wraps a family of elements as a rank-one grid for verification.
Grid rank1_grid_from_elements(const std::vector<BlockElement>& elems);

/// Lexicographically ordered size-k subsets of {1..n}.
std::vector<std::vector<int>> subsets_lex(int n, int k);
int permutation_sign(const std::vector<int>& seq);

} // namespace troforge
