#include "troforge/span.hpp"

#include <algorithm>
#include <cmath>

namespace troforge {

Vector Subspace::coordinates(const BlockElement& x) const {
    if (x.shape() != ambient) throw InputError("Subspace::coordinates: shape mismatch");
    return basis_mat.adjoint() * x.vectorize();
}

BlockElement Subspace::from_coordinates(const Vector& c) const {
    if (c.size() != dim()) throw InputError("Subspace::from_coordinates: wrong length");
    return BlockElement::from_vector(ambient, basis_mat * c);
}

double Subspace::residual_norm(const Vector& v) const {
    if (dim() == 0) return v.norm();
    Vector r = v - basis_mat * (basis_mat.adjoint() * v);
    r -= basis_mat * (basis_mat.adjoint() * r);
    return r.norm();
}

double Subspace::residual_norm(const BlockElement& x) const {
    if (x.shape() != ambient) throw InputError("Subspace::residual_norm: shape mismatch");
    return residual_norm(x.vectorize());
}

SpanBuilder::SpanBuilder(BlockShape ambient, double rank_tol)
    : ambient_(std::move(ambient)), vec_dim_(ambient_.total_dim()), rank_tol_(rank_tol) {
    ambient_.validate();
    store_.resize(vec_dim_, std::min<Index>(vec_dim_, 16));
}

void SpanBuilder::reserve(Index want) {
    if (store_.cols() < want)
        store_.conservativeResize(Eigen::NoChange, std::min(vec_dim_, std::max(want, store_.cols() * 2)));
}

void SpanBuilder::append_column(const Vector& v) {
    reserve(dim_ + 1);
    store_.col(dim_) = v;
    ++dim_;
}

double SpanBuilder::residual_norm(const Vector& v) const {
    if (dim_ == 0) return v.norm();
    auto B = store_.leftCols(dim_);
    Vector r = v - B * (B.adjoint() * v);
    r -= B * (B.adjoint() * r);
    return r.norm();
}

bool SpanBuilder::add(const Vector& v) {
    if (v.size() != vec_dim_) throw InputError("SpanBuilder::add: wrong vector length");
    double n0 = v.norm();
    if (n0 < 1e-300 || dim_ == vec_dim_) return false;
    Vector r = v / n0;
    for (int pass = 0; pass < 2 && dim_ > 0; ++pass) {
        auto B = store_.leftCols(dim_);
        r -= B * (B.adjoint() * r);
    }
    double rn = r.norm();
    if (rn < rank_tol_) return false;
    append_column(r / rn);
    return true;
}

std::vector<int> SpanBuilder::add_batch(Eigen::MatrixXcd& C) {
    std::vector<int> accepted;
    if (C.cols() == 0) return accepted;
    if (C.rows() != vec_dim_) throw InputError("SpanBuilder::add_batch: wrong vector length");
    for (int pass = 0; pass < 2 && dim_ > 0; ++pass) {
        auto B = store_.leftCols(dim_);
        C -= B * (B.adjoint() * C);
    }
    const Index batch_start = dim_;
    for (Index j = 0; j < C.cols(); ++j) {
        if (dim_ == vec_dim_) break;
        Vector r = C.col(j);
        for (int pass = 0; pass < 2 && dim_ > batch_start; ++pass) {
            auto N = store_.middleCols(batch_start, dim_ - batch_start);
            r -= N * (N.adjoint() * r);
        }
        double rn = r.norm();
        if (rn < rank_tol_) continue;
        append_column(r / rn);
        accepted.push_back(static_cast<int>(j));
    }
    return accepted;
}

Subspace SpanBuilder::snapshot() const {
    Subspace s;
    s.ambient = ambient_;
    s.basis_mat = store_.leftCols(dim_);
    s.basis.reserve(static_cast<std::size_t>(dim_));
    for (Index j = 0; j < dim_; ++j)
        s.basis.push_back(BlockElement::from_vector(ambient_, s.basis_mat.col(j)));
    return s;
}

Subspace span_basis(const std::vector<BlockElement>& gens, const ToleranceConfig& tol) {
    if (gens.empty()) throw InputError("span_basis: empty generator list");
    const BlockShape shape = gens.front().shape();
    shape.validate();
    SpanBuilder sb(shape, tol.rank_tol);
    for (const auto& g : gens) {
        if (g.shape() != shape) throw InputError("span_basis: generators do not share one shape");
        sb.add(g);
    }
    return sb.snapshot();
}

bool contains(const Subspace& s, const BlockElement& x, const ToleranceConfig& tol) {
    if (x.shape() != s.ambient) throw InputError("contains: shape mismatch");
    double nx = norm(x);
    return s.residual_norm(x) < tol.rank_tol * std::max(1.0, nx);
}

bool subspace_equal(const Subspace& a, const Subspace& b, const ToleranceConfig& tol) {
    if (a.ambient != b.ambient) throw InputError("subspace_equal: ambient shape mismatch");
    if (a.dim() != b.dim()) return false;
    for (const auto& x : a.basis)
        if (!contains(b, x, tol)) return false;
    for (const auto& x : b.basis)
        if (!contains(a, x, tol)) return false;
    return true;
}

namespace {

inline void fnv_mix(std::uint64_t& h, std::uint64_t x) {
    h ^= x;
    h *= 0x100000001b3ULL;
}

} // namespace

VectorKey phase_canonical_key(const Vector& v) {
    double n0 = v.norm();
    VectorKey key{0xcbf29ce484222325ULL, 0x84222325cbf29ce4ULL};
    if (n0 < 1e-300) return key;
    double maxAbs = 0;
    Index pivot = 0;
    for (Index i = 0; i < v.size(); ++i) {
        double a = std::abs(v(i));
        if (a > maxAbs * (1.0 + 1e-9)) {
            maxAbs = a;
            pivot = i;
        }
    }
    Complex phase = std::conj(v(pivot)) / std::abs(v(pivot));
    const double scale = 1e12;
    for (Index i = 0; i < v.size(); ++i) {
        Complex w = v(i) / n0 * phase;
        auto re = static_cast<std::uint64_t>(std::llround(w.real() * scale));
        auto im = static_cast<std::uint64_t>(std::llround(w.imag() * scale));
        fnv_mix(key.a, re);
        fnv_mix(key.a, im);
        fnv_mix(key.b, im * 0x9e3779b97f4a7c15ULL + 0x7f4a7c159e3779b9ULL);
        fnv_mix(key.b, re + 0x2545f4914f6cdd1dULL);
    }
    return key;
}

} // namespace troforge
