#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace troforge {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Index = Eigen::Index;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input (bad file, bad parameters). CLI maps this to exit code 2.
class InputError : public Error {
public:
    using Error::Error;
};

struct ToleranceConfig {
    double rank_tol = 1e-9; // residual below this is treated as zero in span engines
    double eq_tol = 1e-7;   // matrix-equality assertions, relative to operand norms

    void validate() const {
        if (!(rank_tol > 0.0 && rank_tol < 1.0) || !(eq_tol > 0.0 && eq_tol < 1.0))
            throw InputError("tolerances must lie in (0,1)");
    }
};

/// Shape of an element of a direct sum of rectangular matrix spaces.
struct BlockShape {
    std::vector<std::pair<Index, Index>> blocks;

    BlockShape() = default;
    explicit BlockShape(std::vector<std::pair<Index, Index>> b) : blocks(std::move(b)) {}

    static BlockShape single(Index rows, Index cols) { return BlockShape{{{rows, cols}}}; }

    Index block_count() const { return static_cast<Index>(blocks.size()); }
    Index total_dim() const;

    /// Shape of adjoints: (c,r) per block.
    BlockShape adjoint_shape() const;
    /// Square shapes carrying products x y* resp. x* y.
    BlockShape left_square() const;
    BlockShape right_square() const;

    bool operator==(const BlockShape& o) const { return blocks == o.blocks; }
    bool operator!=(const BlockShape& o) const { return !(*this == o); }

    void validate() const;
    std::string to_string() const;
};

/// An element of a direct sum of complex matrix spaces. Immutable in spirit:
/// all operations return new values.
class BlockElement {
public:
    BlockElement() = default;
    explicit BlockElement(std::vector<Matrix> parts) : parts_(std::move(parts)) {}

    static BlockElement single(Matrix m);
    static BlockElement zero(const BlockShape& shape);

    const std::vector<Matrix>& parts() const { return parts_; }
    const Matrix& part(Index i) const { return parts_.at(static_cast<std::size_t>(i)); }
    Matrix& part(Index i) { return parts_.at(static_cast<std::size_t>(i)); }
    Index block_count() const { return static_cast<Index>(parts_.size()); }

    BlockShape shape() const;
    BlockElement adjoint() const;

    Vector vectorize() const;
    static BlockElement from_vector(const BlockShape& shape, const Vector& v);

    bool finite() const;

private:
    std::vector<Matrix> parts_;
};

BlockElement operator+(const BlockElement& a, const BlockElement& b);
BlockElement operator-(const BlockElement& a, const BlockElement& b);
BlockElement operator*(Complex s, const BlockElement& a);
inline BlockElement operator*(const BlockElement& a, Complex s) { return s * a; }
inline BlockElement operator*(double s, const BlockElement& a) { return Complex(s, 0.0) * a; }

/// Trace pairing <x,y> = sum_blocks trace(adjoint(y_i) x_i); linear in x.
Complex inner(const BlockElement& x, const BlockElement& y);
/// Frobenius norm of the vectorization.
double norm(const BlockElement& x);
/// C*-norm of a direct sum: largest singular value across blocks.
double operator_norm(const BlockElement& x);

/// TRO product x y* z, blockwise.
BlockElement ternary(const BlockElement& x, const BlockElement& y, const BlockElement& z);

void require_same_shape(const BlockElement& a, const BlockElement& b, const char* where);

bool approx_equal(const BlockElement& a, const BlockElement& b, double tol);
bool approx_equal(const Matrix& a, const Matrix& b, double tol);

/// Kronecker product a (x) b with entry ((i*rb+p, j*cb+q)) = a(i,j) b(p,q).
template <typename DerivedA, typename DerivedB>
Matrix kron(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = Complex(a(i, j)) * b;
    return out;
}

Matrix kron_power(const Matrix& a, int l);

/// Pauli matrices in the convention sigma1 = diag(1,-1), sigma2 = offdiag(1,1),
/// sigma3 = offdiag(i,-i).
Matrix pauli(int which);
Matrix matrix_unit(Index rows, Index cols, Index i, Index j);

} // namespace troforge
