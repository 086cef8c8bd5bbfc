#include "troforge/core.hpp"

#include <cmath>
#include <sstream>

namespace troforge {

Index BlockShape::total_dim() const {
    Index d = 0;
    for (const auto& [r, c] : blocks) d += r * c;
    return d;
}

BlockShape BlockShape::adjoint_shape() const {
    BlockShape s;
    s.blocks.reserve(blocks.size());
    for (const auto& [r, c] : blocks) s.blocks.emplace_back(c, r);
    return s;
}

BlockShape BlockShape::left_square() const {
    BlockShape s;
    for (const auto& [r, c] : blocks) {
        (void)c;
        s.blocks.emplace_back(r, r);
    }
    return s;
}

BlockShape BlockShape::right_square() const {
    BlockShape s;
    for (const auto& [r, c] : blocks) {
        (void)r;
        s.blocks.emplace_back(c, c);
    }
    return s;
}

void BlockShape::validate() const {
    if (blocks.empty()) throw InputError("BlockShape: empty block list");
    for (const auto& [r, c] : blocks)
        if (r <= 0 || c <= 0) throw InputError("BlockShape: non-positive block dimension");
}

std::string BlockShape::to_string() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (i) os << ",";
        os << "(" << blocks[i].first << "," << blocks[i].second << ")";
    }
    os << "]";
    return os.str();
}

BlockElement BlockElement::single(Matrix m) {
    std::vector<Matrix> p;
    p.push_back(std::move(m));
    return BlockElement(std::move(p));
}

BlockElement BlockElement::zero(const BlockShape& shape) {
    std::vector<Matrix> p;
    p.reserve(shape.blocks.size());
    for (const auto& [r, c] : shape.blocks) p.push_back(Matrix::Zero(r, c));
    return BlockElement(std::move(p));
}

BlockShape BlockElement::shape() const {
    BlockShape s;
    s.blocks.reserve(parts_.size());
    for (const auto& m : parts_) s.blocks.emplace_back(m.rows(), m.cols());
    return s;
}

BlockElement BlockElement::adjoint() const {
    std::vector<Matrix> p;
    p.reserve(parts_.size());
    for (const auto& m : parts_) p.push_back(m.adjoint());
    return BlockElement(std::move(p));
}

Vector BlockElement::vectorize() const {
    Vector v(shape().total_dim());
    Index off = 0;
    for (const auto& m : parts_) {
        v.segment(off, m.size()) = Eigen::Map<const Vector>(m.data(), m.size());
        off += m.size();
    }
    return v;
}

BlockElement BlockElement::from_vector(const BlockShape& shape, const Vector& v) {
    if (v.size() != shape.total_dim())
        throw InputError("from_vector: length does not match shape");
    std::vector<Matrix> p;
    p.reserve(shape.blocks.size());
    Index off = 0;
    for (const auto& [r, c] : shape.blocks) {
        p.push_back(Eigen::Map<const Matrix>(v.data() + off, r, c));
        off += r * c;
    }
    return BlockElement(std::move(p));
}

bool BlockElement::finite() const {
    for (const auto& m : parts_)
        if (!m.allFinite()) return false;
    return true;
}

void require_same_shape(const BlockElement& a, const BlockElement& b, const char* where) {
    if (a.shape() != b.shape())
        throw InputError(std::string(where) + ": block shape mismatch " + a.shape().to_string() +
                         " vs " + b.shape().to_string());
}

BlockElement operator+(const BlockElement& a, const BlockElement& b) {
    require_same_shape(a, b, "operator+");
    std::vector<Matrix> p;
    p.reserve(a.parts().size());
    for (Index i = 0; i < a.block_count(); ++i) p.push_back(a.part(i) + b.part(i));
    return BlockElement(std::move(p));
}

BlockElement operator-(const BlockElement& a, const BlockElement& b) {
    require_same_shape(a, b, "operator-");
    std::vector<Matrix> p;
    p.reserve(a.parts().size());
    for (Index i = 0; i < a.block_count(); ++i) p.push_back(a.part(i) - b.part(i));
    return BlockElement(std::move(p));
}

BlockElement operator*(Complex s, const BlockElement& a) {
    std::vector<Matrix> p;
    p.reserve(a.parts().size());
    for (const auto& m : a.parts()) p.push_back(s * m);
    return BlockElement(std::move(p));
}

Complex inner(const BlockElement& x, const BlockElement& y) {
    require_same_shape(x, y, "inner");
    Complex s = 0;
    for (Index i = 0; i < x.block_count(); ++i)
        s += (y.part(i).conjugate().cwiseProduct(x.part(i))).sum();
    return s;
}

double norm(const BlockElement& x) {
    double s = 0;
    for (const auto& m : x.parts()) s += m.squaredNorm();
    return std::sqrt(s);
}

double operator_norm(const BlockElement& x) {
    double s = 0;
    for (const auto& m : x.parts()) {
        if (m.size() == 0) continue;
        Eigen::JacobiSVD<Matrix> svd(m);
        if (svd.singularValues().size() > 0) s = std::max(s, svd.singularValues()(0));
    }
    return s;
}

BlockElement ternary(const BlockElement& x, const BlockElement& y, const BlockElement& z) {
    require_same_shape(x, y, "ternary");
    require_same_shape(x, z, "ternary");
    std::vector<Matrix> p;
    p.reserve(x.parts().size());
    for (Index i = 0; i < x.block_count(); ++i)
        p.push_back(x.part(i) * y.part(i).adjoint() * z.part(i));
    return BlockElement(std::move(p));
}

bool approx_equal(const Matrix& a, const Matrix& b, double tol) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    double scale = std::max(1.0, std::max(a.norm(), b.norm()));
    return (a - b).norm() < tol * scale;
}

bool approx_equal(const BlockElement& a, const BlockElement& b, double tol) {
    if (a.shape() != b.shape()) return false;
    double scale = std::max(1.0, std::max(norm(a), norm(b)));
    return norm(a - b) < tol * scale;
}

Matrix kron_power(const Matrix& a, int l) {
    Matrix out = Matrix::Identity(1, 1);
    for (int i = 0; i < l; ++i) out = kron(out, a);
    return out;
}

Matrix pauli(int which) {
    Matrix m(2, 2);
    const Complex I(0, 1);
    switch (which) {
        case 1: m << 1, 0, 0, -1; break;
        case 2: m << 0, 1, 1, 0; break;
        case 3: m << 0, I, -I, 0; break;
        default: throw InputError("pauli: index must be 1, 2 or 3");
    }
    return m;
}

Matrix matrix_unit(Index rows, Index cols, Index i, Index j) {
    if (i < 0 || j < 0 || i >= rows || j >= cols) throw InputError("matrix_unit: index out of range");
    Matrix m = Matrix::Zero(rows, cols);
    m(i, j) = 1.0;
    return m;
}

} // namespace troforge
