#pragma once

#include "troforge/closure.hpp"
#include "troforge/core.hpp"
#include "troforge/grids.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace troforge {

enum class CartanFamily { TypeI, TypeII, TypeIII, TypeIV };

std::string cartan_family_name(CartanFamily f);
std::optional<CartanFamily> cartan_family_from_name(const std::string& s);

struct CartanSpec {
    CartanFamily family = CartanFamily::TypeIV;
    int n = 0;   // types I, II, III
    int m = 0;   // type I
    int dim = 0; // type IV: dim = k + 1
};

// Desk-scale parameter caps; closure cost grows cubically in the block size.
inline constexpr int kMaxSpinK = 10;
inline constexpr int kMaxTypeIProduct = 36;
inline constexpr int kMaxSkewOrSymN = 7;
inline constexpr int kMaxRank1N = 6;

// Exceptional factors C5 and C6 admit no TRO representation at all; their
// universal envelope is the zero TRO. No octonion arithmetic is performed.
inline constexpr int kExceptionalEnvelopeDim = 0;

struct EnvelopeReport {
    CartanSpec spec;
    int factor_dim = 0;
    Subspace realization; // image of the factor inside the envelope ambient
    ClosureResult envelope;
    BlockDecomposition blocks;
    std::vector<std::pair<int, int>> expected_blocks;
    int expected_dim = 0;
    AntiAutomorphism theta;
    bool theorem_pass = false;
    double realization_residual = 0.0; // grid axioms on the realized image
    double aux_residual = 0.0;         // family-specific extras (units, projections)
    std::uint64_t seed = 42;
    ToleranceConfig tol;

    int envelope_dim() const { return static_cast<int>(envelope.space.dim()); }
    double theta_residual() const { return theta.residual; }
};

EnvelopeReport envelope_spin(int k, const ToleranceConfig& tol, std::uint64_t seed = 42);
EnvelopeReport envelope_type3(int n, const ToleranceConfig& tol, std::uint64_t seed = 42);
EnvelopeReport envelope_type2(int n, const ToleranceConfig& tol, std::uint64_t seed = 42);
EnvelopeReport envelope_type1(int n, int m, const ToleranceConfig& tol, std::uint64_t seed = 42);
EnvelopeReport envelope_rank1(int n, const ToleranceConfig& tol, std::uint64_t seed = 42);

/// Dispatch on the Cartan family. TypeI with min(n,m)=1 routes to the rank-1
/// computation; TypeII with n in {3,4} is rejected (those dimensions are
/// covered by other families).
EnvelopeReport envelope(const CartanSpec& spec, const ToleranceConfig& tol,
                        std::uint64_t seed = 42);

struct TroEnvelopeBookkeeping {
    std::vector<std::pair<int, int>> expected_blocks;
    int dim = 0;
};

/// Envelope of a direct sum of full matrix blocks, at the block-dimension
/// bookkeeping level: (n,m) with n,m >= 2 doubles into (n,m)+(m,n), Hilbert
/// blocks follow the rank-1 formula, and 1x1 blocks are abelian.
TroEnvelopeBookkeeping envelope_of_tro(const std::vector<std::pair<int, int>>& blocks);

long long binomial(int n, int k);

} // namespace troforge
