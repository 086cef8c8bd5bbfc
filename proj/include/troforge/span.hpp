#pragma once

#include "troforge/core.hpp"

#include <cstdint>
#include <unordered_set>
#include <vector>

namespace troforge {

/// Orthonormalized basis of a linear span of BlockElements, under the trace
/// inner product on the vectorization.
struct Subspace {
    BlockShape ambient;
    Eigen::MatrixXcd basis_mat; // total_dim x dim, orthonormal columns
    std::vector<BlockElement> basis;

    Index dim() const { return basis_mat.cols(); }

    Vector coordinates(const BlockElement& x) const;
    BlockElement from_coordinates(const Vector& c) const;
    /// Norm of x minus its orthogonal projection onto the span.
    double residual_norm(const BlockElement& x) const;
    double residual_norm(const Vector& v) const;
};

/// Incremental rank-revealing Gram-Schmidt with a re-orthogonalization pass.
class SpanBuilder {
public:
    SpanBuilder(BlockShape ambient, double rank_tol);

    /// Adds v if its residual after projection exceeds rank_tol relative to
    /// ||v||. Returns true when a new basis direction was accepted.
    bool add(const Vector& v);
    bool add(const BlockElement& x) { return add(x.vectorize()); }

    /// Batch variant: candidates are columns of C (consumed). Columns are
    /// expected to be normalized; near-zero columns are skipped. Returns the
    /// indices of accepted columns.
    std::vector<int> add_batch(Eigen::MatrixXcd& C);

    double residual_norm(const Vector& v) const;
    Index dim() const { return dim_; }
    Index ambient_dim() const { return vec_dim_; }
    const BlockShape& ambient() const { return ambient_; }
    Eigen::Ref<const Eigen::MatrixXcd> basis() const { return store_.leftCols(dim_); }

    Subspace snapshot() const;

private:
    void reserve(Index want);
    void append_column(const Vector& v);

    BlockShape ambient_;
    Index vec_dim_;
    double rank_tol_;
    Eigen::MatrixXcd store_;
    Index dim_ = 0;
};

Subspace span_basis(const std::vector<BlockElement>& gens, const ToleranceConfig& tol);
bool contains(const Subspace& s, const BlockElement& x, const ToleranceConfig& tol);
bool subspace_equal(const Subspace& a, const Subspace& b, const ToleranceConfig& tol);

/// 128-bit key identifying a vector up to global phase, at ~1e-12 resolution.
/// Used to skip duplicate candidates in closure fixpoints; a missed duplicate
/// only costs time, never correctness.
struct VectorKey {
    std::uint64_t a = 0, b = 0;
    bool operator==(const VectorKey& o) const { return a == o.a && b == o.b; }
};

struct VectorKeyHash {
    std::size_t operator()(const VectorKey& k) const {
        return static_cast<std::size_t>(k.a ^ (k.b * 0x9e3779b97f4a7c15ULL));
    }
};

using VectorKeySet = std::unordered_set<VectorKey, VectorKeyHash>;

/// Key of v normalized and rotated to a canonical phase.
VectorKey phase_canonical_key(const Vector& v);

} // namespace troforge
