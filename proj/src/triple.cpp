#include "troforge/triple.hpp"

#include <algorithm>
#include <cmath>

namespace troforge {

BlockElement jordan_triple(const BlockElement& x, const BlockElement& y, const BlockElement& z) {
    require_same_shape(x, y, "jordan_triple");
    require_same_shape(x, z, "jordan_triple");
    std::vector<Matrix> p;
    p.reserve(x.parts().size());
    for (Index i = 0; i < x.block_count(); ++i) {
        Matrix ya = y.part(i).adjoint();
        p.push_back(0.5 * (x.part(i) * ya * z.part(i) + z.part(i) * ya * x.part(i)));
    }
    return BlockElement(std::move(p));
}

bool is_tripotent(const BlockElement& e, const ToleranceConfig& tol) {
    double ne = norm(e);
    if (ne == 0.0) return false;
    return norm(jordan_triple(e, e, e) - e) < tol.eq_tol * ne;
}

BoxOperator box_operator(const BlockElement& x, const BlockElement& y, const Subspace& s,
                         const ToleranceConfig& tol) {
    if (x.shape() != s.ambient || y.shape() != s.ambient)
        throw InputError("box_operator: shape mismatch");
    const Index d = s.dim();
    BoxOperator op{s, Eigen::MatrixXcd(d, d)};
    for (Index j = 0; j < d; ++j) {
        BlockElement img = jordan_triple(x, y, s.basis[static_cast<std::size_t>(j)]);
        Vector v = img.vectorize();
        op.matrix.col(j) = s.basis_mat.adjoint() * v;
        double res = (v - s.basis_mat * op.matrix.col(j)).norm();
        if (res > tol.rank_tol * std::max(1.0, v.norm()))
            throw Error("box_operator: subspace is not invariant under x [] y (residual " +
                        std::to_string(res) + ")");
    }
    return op;
}

PeirceDecomposition peirce_decompose(const BlockElement& e, const Subspace& s,
                                     const ToleranceConfig& tol) {
    if (!is_tripotent(e, tol)) throw Error("peirce_decompose: e is not a tripotent");
    if (!contains(s, e, tol)) throw Error("peirce_decompose: e does not lie in the subspace");
    BoxOperator box = box_operator(e, e, s, tol);
    // e [] e is self-adjoint for the trace pairing; symmetrize away float noise.
    Eigen::MatrixXcd h = 0.5 * (box.matrix + box.matrix.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(h);
    if (eig.info() != Eigen::Success) throw Error("peirce_decompose: eigensolver failed");

    PeirceDecomposition out;
    out.tripotent = e;
    SpanBuilder b0(s.ambient, tol.rank_tol), b1(s.ambient, tol.rank_tol), b2(s.ambient, tol.rank_tol);
    for (Index i = 0; i < eig.eigenvalues().size(); ++i) {
        double lam = eig.eigenvalues()(i);
        double snapped = lam < 0.25 ? 0.0 : (lam < 0.75 ? 0.5 : 1.0);
        if (std::abs(lam - snapped) > tol.eq_tol)
            throw Error("peirce_decompose: eigenvalue " + std::to_string(lam) +
                        " is not close to {0, 1/2, 1}; not a tripotent or not a subtriple");
        Vector v = s.basis_mat * eig.eigenvectors().col(i);
        if (snapped == 0.0)
            b0.add(v);
        else if (snapped == 0.5)
            b1.add(v);
        else
            b2.add(v);
    }
    out.p0 = b0.snapshot();
    out.p1 = b1.snapshot();
    out.p2 = b2.snapshot();
    if (out.p0.dim() + out.p1.dim() + out.p2.dim() != s.dim())
        throw Error("peirce_decompose: eigenspace dimensions do not add up");
    return out;
}

bool is_minimal_tripotent(const BlockElement& e, const Subspace& s, const ToleranceConfig& tol) {
    if (!is_tripotent(e, tol)) return false;
    SpanBuilder sb(s.ambient, tol.rank_tol);
    for (const auto& b : s.basis) sb.add(jordan_triple(e, b, e));
    return sb.dim() == 1;
}

bool peirce2_membership(const BlockElement& v, const BlockElement& z, const ToleranceConfig& tol) {
    require_same_shape(v, z, "peirce2_membership");
    // v (v z* v)* v, blockwise
    std::vector<Matrix> p;
    p.reserve(v.parts().size());
    for (Index i = 0; i < v.block_count(); ++i) {
        Matrix inner = v.part(i) * z.part(i).adjoint() * v.part(i);
        p.push_back(v.part(i) * inner.adjoint() * v.part(i));
    }
    BlockElement reflected(std::move(p));
    return norm(reflected - z) < tol.eq_tol * std::max(1.0, norm(z));
}

BlockElement peirce2_product(const BlockElement& a, const BlockElement& b, const BlockElement& e,
                             const ToleranceConfig& tol) {
    if (!peirce2_membership(e, a, tol) || !peirce2_membership(e, b, tol))
        throw Error("peirce2_product: factor outside the Peirce-2 space of e");
    return ternary(a, e, b);
}

} // namespace troforge
