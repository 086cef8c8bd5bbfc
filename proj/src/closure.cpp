#include "troforge/closure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>

namespace troforge {

namespace {

constexpr Index kBatchChunk = 256;
constexpr int kMaxWordLength = 13;

BlockElement adj_mul(const BlockElement& g, const BlockElement& w) {
    std::vector<Matrix> p;
    p.reserve(g.parts().size());
    for (Index i = 0; i < g.block_count(); ++i) p.push_back(g.part(i).adjoint() * w.part(i));
    return BlockElement(std::move(p));
}

BlockElement mul(const BlockElement& g, const BlockElement& e) {
    std::vector<Matrix> p;
    p.reserve(g.parts().size());
    for (Index i = 0; i < g.block_count(); ++i) p.push_back(g.part(i) * e.part(i));
    return BlockElement(std::move(p));
}

BlockElement mul_adj(const BlockElement& g, const BlockElement& h) {
    std::vector<Matrix> p;
    p.reserve(g.parts().size());
    for (Index i = 0; i < g.block_count(); ++i) p.push_back(g.part(i) * h.part(i).adjoint());
    return BlockElement(std::move(p));
}

std::vector<BlockElement> normalized_generators(const std::vector<BlockElement>& gens,
                                                const ToleranceConfig& tol, const char* where) {
    if (gens.empty()) throw InputError(std::string(where) + ": empty generator list");
    const BlockShape shape = gens.front().shape();
    shape.validate();
    std::vector<BlockElement> out;
    for (const auto& g : gens) {
        if (g.shape() != shape)
            throw InputError(std::string(where) + ": generators do not share one shape");
        if (!g.finite()) throw InputError(std::string(where) + ": non-finite generator entries");
        double n = norm(g);
        if (n > tol.rank_tol) out.push_back((1.0 / n) * g);
    }
    if (out.empty()) throw InputError(std::string(where) + ": all generators are zero");
    return out;
}

/// Chunked candidate feed into a SpanBuilder. New basis directions are read
/// back off the builder after each flush.
class ChunkedAdder {
public:
    ChunkedAdder(SpanBuilder& sb, VectorKeySet& seen) : sb_(sb), seen_(seen) {}

    void offer(const BlockElement& cand, const ToleranceConfig& tol) {
        double n = norm(cand);
        if (n < tol.rank_tol) return;
        Vector v = cand.vectorize() / n;
        if (!seen_.insert(phase_canonical_key(v)).second) return;
        pending_.push_back(std::move(v));
        if (static_cast<Index>(pending_.size()) >= kBatchChunk) flush();
    }

    void flush() {
        if (pending_.empty()) return;
        Eigen::MatrixXcd c(sb_.ambient_dim(), static_cast<Index>(pending_.size()));
        for (std::size_t j = 0; j < pending_.size(); ++j) c.col(static_cast<Index>(j)) = pending_[j];
        pending_.clear();
        sb_.add_batch(c);
    }

private:
    SpanBuilder& sb_;
    VectorKeySet& seen_;
    std::vector<Vector> pending_;
};

std::vector<BlockElement> new_basis_elements(const SpanBuilder& sb, Index from) {
    std::vector<BlockElement> out;
    auto basis = sb.basis();
    for (Index j = from; j < sb.dim(); ++j)
        out.push_back(BlockElement::from_vector(sb.ambient(), basis.col(j)));
    return out;
}

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) {
        std::iota(parent.begin(), parent.end(), 0);
    }
    int find(int x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] =
                parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    }
    void unite(int a, int b) { parent[static_cast<std::size_t>(find(a))] = find(b); }
};

} // namespace

ClosureResult tro_closure(const std::vector<BlockElement>& gens, const ToleranceConfig& tol) {
    ClosureResult result;
    result.generators = normalized_generators(gens, tol, "tro_closure");
    result.generator_count = static_cast<int>(gens.size());
    const auto& ngens = result.generators;
    const BlockShape shape = ngens.front().shape();
    const BlockShape even_shape = shape.right_square();
    const Index full = shape.total_dim();

    SpanBuilder odd(shape, tol.rank_tol), even(even_shape, tol.rank_tol);
    VectorKeySet odd_seen, even_seen;
    {
        ChunkedAdder seeder(odd, odd_seen);
        for (const auto& g : ngens) seeder.offer(g, tol);
        seeder.flush();
    }
    std::vector<BlockElement> odd_frontier = new_basis_elements(odd, 0);

    while (!odd_frontier.empty() && odd.dim() < full) {
        ++result.iterations;
        const Index even_before = even.dim();
        {
            ChunkedAdder adder(even, even_seen);
            for (const auto& w : odd_frontier)
                for (const auto& g : ngens) adder.offer(adj_mul(g, w), tol);
            adder.flush();
        }
        std::vector<BlockElement> even_frontier = new_basis_elements(even, even_before);

        const Index odd_before = odd.dim();
        {
            ChunkedAdder adder(odd, odd_seen);
            for (const auto& e : even_frontier)
                for (const auto& g : ngens) adder.offer(mul(g, e), tol);
            adder.flush();
        }
        odd_frontier = new_basis_elements(odd, odd_before);
    }
    result.space = odd.snapshot();
    return result;
}

Subspace algebra_closure(const std::vector<BlockElement>& gens, const ToleranceConfig& tol) {
    auto ngens = normalized_generators(gens, tol, "algebra_closure");
    const BlockShape shape = ngens.front().shape();
    for (const auto& [r, c] : shape.blocks)
        if (r != c) throw InputError("algebra_closure: blocks must be square");
    const Index full = shape.total_dim();

    SpanBuilder span(shape, tol.rank_tol);
    VectorKeySet seen;
    {
        ChunkedAdder seeder(span, seen);
        for (const auto& g : ngens) seeder.offer(g, tol);
        seeder.flush();
    }
    std::vector<BlockElement> frontier = new_basis_elements(span, 0);
    while (!frontier.empty() && span.dim() < full) {
        const Index before = span.dim();
        ChunkedAdder adder(span, seen);
        for (const auto& w : frontier)
            for (const auto& g : ngens) adder.offer(mul(w, g), tol);
        adder.flush();
        frontier = new_basis_elements(span, before);
    }
    return span.snapshot();
}

double ternary_closedness_defect(const ClosureResult& t, const ToleranceConfig& tol,
                                 int max_checks, std::uint64_t seed) {
    const Index d = t.space.dim();
    if (d == 0) return 0.0;
    double worst = 0.0;
    auto check = [&](Index i, Index j, Index k) {
        BlockElement prod = ternary(t.space.basis[static_cast<std::size_t>(i)],
                                    t.space.basis[static_cast<std::size_t>(j)],
                                    t.space.basis[static_cast<std::size_t>(k)]);
        double res = t.space.residual_norm(prod);
        (void)tol;
        worst = std::max(worst, res);
    };
    if (d * d * d <= max_checks) {
        for (Index i = 0; i < d; ++i)
            for (Index j = 0; j < d; ++j)
                for (Index k = 0; k < d; ++k) check(i, j, k);
    } else {
        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<Index> pick(0, d - 1);
        for (int s = 0; s < max_checks; ++s) check(pick(rng), pick(rng), pick(rng));
    }
    return worst;
}

const BlockElement& MatrixUnitSystem::at(int alpha, int i, int j) const {
    auto it = units.find({alpha, i, j});
    if (it == units.end())
        throw InputError("matrix units: missing (" + std::to_string(alpha) + "," +
                         std::to_string(i) + "," + std::to_string(j) + ")");
    return it->second;
}

AxiomReport verify_matrix_units(const MatrixUnitSystem& m, const ToleranceConfig& tol) {
    AxiomReport report;
    report.subject = "rectangular matrix units";
    if (m.units.empty()) throw InputError("verify_matrix_units: empty system");

    std::vector<std::tuple<int, int, int>> labels;
    std::vector<const BlockElement*> elems;
    for (const auto& [key, e] : m.units) {
        labels.push_back(key);
        elems.push_back(&e);
    }
    const BlockShape shape = elems.front()->shape();
    const BlockElement zero = BlockElement::zero(shape);

    auto label_str = [](const std::tuple<int, int, int>& t) {
        return "(" + std::to_string(std::get<0>(t)) + "," + std::to_string(std::get<1>(t)) + "," +
               std::to_string(std::get<2>(t)) + ")";
    };

    const std::size_t n = elems.size();
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            for (std::size_t c = 0; c < n; ++c) {
                auto [al, i, j] = labels[a];
                auto [be, l, mm] = labels[b];
                auto [ga, p, q] = labels[c];
                const bool match = (al == be && be == ga && j == mm && l == p);
                const BlockElement* expected = match ? &m.at(al, i, q) : &zero;
                BlockElement prod = ternary(*elems[a], *elems[b], *elems[c]);
                double res = norm(prod - *expected);
                report.max_residual = std::max(report.max_residual, res);
                if (res > tol.eq_tol * std::max(1.0, norm(*expected)))
                    report.violations.push_back(
                        {match ? "MU1" : "MU2",
                         "(" + label_str(labels[a]) + label_str(labels[b]) + label_str(labels[c]) +
                             ")",
                         res});
            }

    // (iii) linear independence
    std::vector<BlockElement> all;
    Index expected_dim = 0;
    for (const auto& [nm, md] : m.block_dims) expected_dim += Index(nm) * Index(md);
    for (const auto* e : elems) all.push_back(*e);
    Subspace span = span_basis(all, tol);
    if (span.dim() != expected_dim || span.dim() != static_cast<Index>(n))
        report.violations.push_back(
            {"MU3", "span dim " + std::to_string(span.dim()), static_cast<double>(n) - span.dim()});

    std::sort(report.violations.begin(), report.violations.end(),
              [](const AxiomViolation& x, const AxiomViolation& y) {
                  return std::tie(x.axiom, x.index) < std::tie(y.axiom, y.index);
              });
    report.passed = report.violations.empty();
    return report;
}

MatrixUnitSystem extract_matrix_units_hermitian(const Grid& g, const ToleranceConfig& tol) {
    if (g.kind.family != GridFamily::Hermitian) throw InputError("expected a hermitian grid");
    AxiomReport rep = verify_grid(g, tol);
    if (!rep.passed) throw Error("extract_matrix_units_hermitian: grid fails verification");

    int n = 0;
    for (const auto& [key, e] : g.elements) {
        (void)e;
        auto comma = key.find(',');
        n = std::max(n, std::stoi(key.substr(comma + 1)));
    }
    BlockElement diag_sum = g.at(pair_key(1, 1));
    for (int k = 2; k <= n; ++k) diag_sum = diag_sum + g.at(pair_key(k, k));

    auto u = [&](int i, int j) { return g.at(pair_key(std::min(i, j), std::max(i, j))); };

    MatrixUnitSystem out;
    out.block_dims = {{n, n}};
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= n; ++j) out.units.emplace(std::make_tuple(1, i, j),
                                                       ternary(u(i, i), diag_sum, u(j, i)));
    return out;
}

SymplecticUnits extract_matrix_units_symplectic(const Grid& g, const ToleranceConfig& tol) {
    if (g.kind.family != GridFamily::Symplectic) throw InputError("expected a symplectic grid");
    AxiomReport rep = verify_grid(g, tol);
    if (!rep.passed) throw Error("extract_matrix_units_symplectic: grid fails verification");

    std::set<int> index_set;
    for (const auto& [key, e] : g.elements) {
        (void)e;
        auto comma = key.find(',');
        index_set.insert(std::stoi(key.substr(0, comma)));
        index_set.insert(std::stoi(key.substr(comma + 1)));
    }
    const int n = static_cast<int>(index_set.size());
    if (n < 5)
        throw InputError("symplectic units need n >= 5; smaller families are covered by the "
                         "rectangular and spin cases");
    std::vector<int> idx(index_set.begin(), index_set.end());

    SymplecticUnits out;
    auto diagonal_unit = [&](int i, int skip) {
        // u_ik u_kl* u_il over the first admissible pairwise-distinct (k,l)
        std::vector<int> others;
        for (int x : idx)
            if (x != i) others.push_back(x);
        int k = others[static_cast<std::size_t>(skip)], l = others[static_cast<std::size_t>(skip + 1)];
        return ternary(symplectic_at(g, i, k), symplectic_at(g, k, l), symplectic_at(g, i, l));
    };

    std::map<int, BlockElement> e_diag;
    for (int i : idx) {
        BlockElement first = diagonal_unit(i, 0);
        BlockElement second = diagonal_unit(i, 2);
        out.well_definedness_residual =
            std::max(out.well_definedness_residual, norm(first - second));
        e_diag.emplace(i, first);
    }

    MatrixUnitSystem units;
    units.block_dims = {{n, n}};
    std::map<int, int> pos;
    for (std::size_t r = 0; r < idx.size(); ++r) pos[idx[r]] = static_cast<int>(r) + 1;
    for (int i : idx)
        for (int j : idx) {
            if (i == j) {
                units.units.emplace(std::make_tuple(1, pos[i], pos[i]), e_diag.at(i));
                continue;
            }
            const BlockElement& ei = e_diag.at(i);
            const BlockElement& ej = e_diag.at(j);
            BlockElement eij = mul(mul(mul_adj(ei, ei), mul(symplectic_at(g, i, j), ej.adjoint())), ej);
            units.units.emplace(std::make_tuple(1, pos[i], pos[j]), eij);
        }

    BlockElement v = e_diag.at(idx[0]);
    for (std::size_t r = 1; r < idx.size(); ++r) v = v + e_diag.at(idx[static_cast<std::size_t>(r)]);
    out.v = v;

    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= n; ++j) {
            BlockElement lhs = ternary(v, units.at(1, i, j), v);
            out.v_relation_residual =
                std::max(out.v_relation_residual, norm(lhs - units.at(1, j, i)));
        }

    AxiomReport mu = verify_matrix_units(units, tol);
    out.delta_relation_residual = mu.max_residual;
    out.units = std::move(units);
    return out;
}

// ---- block decomposition -------------------------------------------------

namespace {

struct EigenData {
    double value = 0.0;
    Index block = 0;
    Vector vec; // within-block eigenvector
};

} // namespace

BlockDecomposition decompose_blocks(const ClosureResult& t, const ToleranceConfig& tol,
                                    std::uint64_t seed) {
    const Index d = t.space.dim();
    if (d == 0) throw InputError("decompose_blocks: zero-dimensional space");
    const BlockShape shape = t.space.ambient;
    const BlockShape left_shape = shape.left_square();

    const std::vector<BlockElement>& gens =
        t.generators.empty() ? t.space.basis : t.generators;
    std::vector<BlockElement> pair_products;
    pair_products.reserve(gens.size() * gens.size());
    for (const auto& x : gens)
        for (const auto& y : gens) pair_products.push_back(mul_adj(x, y));
    Subspace seeds = span_basis(pair_products, tol);
    if (seeds.dim() == 0) throw Error("decompose_blocks: left products vanish");
    Subspace algebra = algebra_closure(seeds.basis, tol);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coeff(1.0, 2.0);

    std::string failure = "decompose_blocks: could not separate central blocks";
    for (int attempt = 0; attempt < 5; ++attempt) {
        // generic self-adjoint element of the left algebra
        BlockElement x = BlockElement::zero(left_shape);
        for (const auto& b : algebra.basis) x = x + coeff(rng) * b;
        BlockElement a = 0.5 * (x + x.adjoint());

        std::vector<EigenData> eig;
        double scale = 0.0;
        for (Index blk = 0; blk < a.block_count(); ++blk) {
            Eigen::SelfAdjointEigenSolver<Matrix> es(a.part(blk));
            if (es.info() != Eigen::Success) throw Error("decompose_blocks: eigensolver failed");
            for (Index i = 0; i < es.eigenvalues().size(); ++i) {
                scale = std::max(scale, std::abs(es.eigenvalues()(i)));
                eig.push_back({es.eigenvalues()(i), blk, es.eigenvectors().col(i)});
            }
        }
        std::sort(eig.begin(), eig.end(),
                  [](const EigenData& l, const EigenData& r) { return l.value < r.value; });

        // cluster by eigenvalue, drop the kernel outside the algebra support
        const double zero_cut = 1e-7 * std::max(1.0, scale);
        const double gap_cut = 1e-7 * std::max(1.0, scale);
        std::vector<std::vector<const EigenData*>> clusters;
        for (const auto& e : eig) {
            if (std::abs(e.value) < zero_cut) continue;
            if (clusters.empty() || e.value - clusters.back().back()->value > gap_cut)
                clusters.emplace_back();
            clusters.back().push_back(&e);
        }
        const int nc = static_cast<int>(clusters.size());
        if (nc == 0) continue;

        // stack eigenvectors per cluster into block-structured frames
        struct Frame {
            std::vector<Matrix> cols; // per ambient block: n_beta x (#vecs in block)
        };
        std::vector<Frame> frames(static_cast<std::size_t>(nc));
        for (int cidx = 0; cidx < nc; ++cidx) {
            Frame& f = frames[static_cast<std::size_t>(cidx)];
            f.cols.resize(static_cast<std::size_t>(left_shape.block_count()));
            for (Index blk = 0; blk < left_shape.block_count(); ++blk)
                f.cols[static_cast<std::size_t>(blk)] =
                    Matrix(left_shape.blocks[static_cast<std::size_t>(blk)].first, 0);
            for (const EigenData* e : clusters[static_cast<std::size_t>(cidx)]) {
                Matrix& m = f.cols[static_cast<std::size_t>(e->block)];
                m.conservativeResize(Eigen::NoChange, m.cols() + 1);
                m.col(m.cols() - 1) = e->vec;
            }
        }

        // connectivity of clusters through the seed elements
        UnionFind uf(nc);
        for (const auto& s : seeds.basis) {
            for (int ci = 0; ci < nc; ++ci)
                for (int cj = 0; cj < nc; ++cj) {
                    if (uf.find(ci) == uf.find(cj)) continue;
                    double w = 0.0;
                    for (Index blk = 0; blk < left_shape.block_count(); ++blk) {
                        const Matrix& u = frames[static_cast<std::size_t>(ci)].cols[static_cast<std::size_t>(blk)];
                        const Matrix& v = frames[static_cast<std::size_t>(cj)].cols[static_cast<std::size_t>(blk)];
                        if (u.cols() == 0 || v.cols() == 0) continue;
                        w += (u.adjoint() * s.part(blk) * v).norm();
                    }
                    if (w > 1e-7) uf.unite(ci, cj);
                }
        }

        std::map<int, std::vector<int>> components;
        for (int c = 0; c < nc; ++c) components[uf.find(c)].push_back(c);

        BlockDecomposition out;
        bool valid = true;
        Index dim_accounted = 0;

        struct PendingUnits {
            std::vector<Vector> left;  // full left-space vectors
            std::vector<Vector> right; // full right-space vectors
            int n = 0, m = 0;
        };
        std::vector<PendingUnits> pending;

        for (const auto& [root, members] : components) {
            (void)root;
            // component frame per ambient block
            std::vector<Matrix> U(static_cast<std::size_t>(left_shape.block_count()));
            Index rank_q = 0;
            for (Index blk = 0; blk < left_shape.block_count(); ++blk) {
                Index nb = left_shape.blocks[static_cast<std::size_t>(blk)].first;
                Index total = 0;
                for (int c : members)
                    total += frames[static_cast<std::size_t>(c)].cols[static_cast<std::size_t>(blk)].cols();
                Matrix m(nb, total);
                Index off = 0;
                for (int c : members) {
                    const Matrix& part = frames[static_cast<std::size_t>(c)].cols[static_cast<std::size_t>(blk)];
                    m.middleCols(off, part.cols()) = part;
                    off += part.cols();
                }
                rank_q += m.cols();
                U[static_cast<std::size_t>(blk)] = std::move(m);
            }

            // n_alpha from the compressed algebra dimension
            std::vector<BlockElement> compressed;
            for (const auto& s : seeds.basis) {
                Matrix c = Matrix::Zero(rank_q, rank_q);
                Index row = 0;
                for (Index blk = 0; blk < left_shape.block_count(); ++blk) {
                    const Matrix& u = U[static_cast<std::size_t>(blk)];
                    if (u.cols() == 0) continue;
                    c.block(row, row, u.cols(), u.cols()) = u.adjoint() * s.part(blk) * u;
                    row += u.cols();
                }
                compressed.push_back(BlockElement::single(std::move(c)));
            }
            Index alg_dim = 0;
            try {
                alg_dim = algebra_closure(compressed, tol).dim();
            } catch (const InputError&) {
                valid = false;
                break;
            }
            const int n_alpha = static_cast<int>(std::llround(std::sqrt(double(alg_dim))));
            if (Index(n_alpha) * Index(n_alpha) != alg_dim || n_alpha == 0) {
                valid = false;
                failure = "decompose_blocks: compressed algebra dimension " +
                          std::to_string(alg_dim) + " is not a square";
                break;
            }

            // q_alpha and the compressed part of the TRO
            BlockElement q = BlockElement::zero(left_shape);
            for (Index blk = 0; blk < left_shape.block_count(); ++blk) {
                const Matrix& u = U[static_cast<std::size_t>(blk)];
                if (u.cols() > 0) q.part(blk) = u * u.adjoint();
            }
            SpanBuilder tq(shape, tol.rank_tol);
            for (const auto& b : t.space.basis) tq.add(mul(q, b));
            const Index dim_tq = tq.dim();
            if (dim_tq % n_alpha != 0) {
                valid = false;
                failure = "decompose_blocks: block dimension bookkeeping failed";
                break;
            }
            const int m_alpha = static_cast<int>(dim_tq / n_alpha);
            dim_accounted += dim_tq;

            out.blocks.emplace_back(n_alpha, m_alpha);
            out.central_projections.push_back(q);

            PendingUnits pu;
            pu.n = n_alpha;
            pu.m = m_alpha;
            if (rank_q == n_alpha) {
                // multiplicity one: left frame columns + right support frame
                Index row_total = 0;
                for (const auto& [r, c2] : left_shape.blocks) {
                    (void)c2;
                    row_total += r;
                }
                Index row_off = 0;
                for (Index blk = 0; blk < left_shape.block_count(); ++blk) {
                    const Matrix& u = U[static_cast<std::size_t>(blk)];
                    for (Index jc = 0; jc < u.cols(); ++jc) {
                        Vector lv = Vector::Zero(row_total);
                        lv.segment(row_off, u.rows()) = u.col(jc);
                        pu.left.push_back(std::move(lv));
                    }
                    row_off += left_shape.blocks[static_cast<std::size_t>(blk)].first;
                }
                // right density of q T
                BlockShape right_shape = shape.right_square();
                BlockElement rho = BlockElement::zero(right_shape);
                for (const auto& b : t.space.basis) {
                    BlockElement qb = mul(q, b);
                    for (Index blk = 0; blk < shape.block_count(); ++blk)
                        rho.part(blk) += qb.part(blk).adjoint() * qb.part(blk);
                }
                double rho_scale = 0.0;
                for (const auto& p : rho.parts())
                    if (p.size() > 0) rho_scale = std::max(rho_scale, p.norm());
                Index col_total = 0;
                for (const auto& [r2, c] : right_shape.blocks) {
                    (void)r2;
                    col_total += c;
                }
                Index col_off = 0;
                for (Index blk = 0; blk < right_shape.block_count(); ++blk) {
                    Eigen::SelfAdjointEigenSolver<Matrix> es(rho.part(blk));
                    for (Index i = 0; i < es.eigenvalues().size(); ++i) {
                        if (es.eigenvalues()(i) < 1e-9 * std::max(1.0, rho_scale)) continue;
                        Vector rv = Vector::Zero(col_total);
                        rv.segment(col_off, es.eigenvectors().rows()) = es.eigenvectors().col(i);
                        pu.right.push_back(std::move(rv));
                    }
                    col_off += right_shape.blocks[static_cast<std::size_t>(blk)].second;
                }
                if (static_cast<int>(pu.right.size()) != m_alpha) {
                    valid = false;
                    failure = "decompose_blocks: right support rank mismatch";
                    break;
                }
            } else {
                out.units_available = false;
            }
            pending.push_back(std::move(pu));
        }

        if (!valid) continue;
        if (dim_accounted != d) {
            failure = "decompose_blocks: block dimensions sum to " +
                      std::to_string(dim_accounted) + ", space has dim " + std::to_string(d);
            continue;
        }

        // deterministic order: descending (n, m)
        std::vector<std::size_t> order(pending.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return std::make_pair(pending[a].n, pending[a].m) >
                   std::make_pair(pending[b].n, pending[b].m);
        });
        BlockDecomposition sorted;
        sorted.units_available = out.units_available;
        int alpha = 0;
        for (std::size_t oi : order) {
            ++alpha;
            sorted.blocks.push_back(out.blocks[oi]);
            sorted.central_projections.push_back(out.central_projections[oi]);
            sorted.units.block_dims.push_back(out.blocks[oi]);
            if (!sorted.units_available) continue;
            const PendingUnits& pu = pending[oi];
            // units xi_i eta_j^* assembled blockwise
            Index row_off = 0, col_off = 0;
            for (int i = 1; i <= pu.n; ++i)
                for (int j = 1; j <= pu.m; ++j) {
                    BlockElement e = BlockElement::zero(shape);
                    row_off = 0;
                    col_off = 0;
                    for (Index blk = 0; blk < shape.block_count(); ++blk) {
                        auto [r, c] = shape.blocks[static_cast<std::size_t>(blk)];
                        e.part(blk) = pu.left[static_cast<std::size_t>(i - 1)].segment(row_off, r) *
                                      pu.right[static_cast<std::size_t>(j - 1)]
                                          .segment(col_off, c)
                                          .adjoint();
                        row_off += r;
                        col_off += c;
                    }
                    sorted.units.units.emplace(std::make_tuple(alpha, i, j), std::move(e));
                }
        }
        return sorted;
    }
    throw Error(failure + " after 5 attempts");
}

// ---- word antiautomorphism -------------------------------------------------

AntiAutomorphism word_antiautomorphism(const std::vector<BlockElement>& gens,
                                       const ClosureResult& t, const ToleranceConfig& tol,
                                       std::uint64_t seed) {
    auto ngens = normalized_generators(gens, tol, "word_antiautomorphism");
    const BlockShape shape = ngens.front().shape();
    if (shape != t.space.ambient)
        throw InputError("word_antiautomorphism: generators and closure shapes differ");
    const Index d = t.space.dim();

    struct OddWord {
        BlockElement w, rev;
    };
    struct EvenWord {
        BlockElement e;
        BlockElement rev_stub; // rev(parent) g*, so rev(h e) = rev_stub h
    };

    SpanBuilder odd(shape, tol.rank_tol), even(shape.right_square(), tol.rank_tol);
    VectorKeySet even_seen;
    std::vector<OddWord> kept, samples;
    std::vector<OddWord> frontier;
    const std::size_t kMaxSamples = 512;
    int word_length = 1;

    for (const auto& g : ngens) {
        if (odd.add(g.vectorize())) {
            kept.push_back({g, g});
            frontier.push_back({g, g});
        } else if (samples.size() < kMaxSamples) {
            samples.push_back({g, g});
        }
    }

    while (!frontier.empty() && odd.dim() < d && word_length + 2 <= kMaxWordLength) {
        word_length += 2;
        // even scaffolding: e = g* w
        std::vector<EvenWord> even_frontier;
        {
            std::vector<EvenWord> chunk;
            std::vector<Vector> vecs;
            auto flush = [&]() {
                if (vecs.empty()) return;
                Eigen::MatrixXcd c(even.ambient_dim(), static_cast<Index>(vecs.size()));
                for (std::size_t j = 0; j < vecs.size(); ++j) c.col(static_cast<Index>(j)) = vecs[j];
                for (int idx : even.add_batch(c))
                    even_frontier.push_back(chunk[static_cast<std::size_t>(idx)]);
                chunk.clear();
                vecs.clear();
            };
            for (const auto& w : frontier)
                for (const auto& g : ngens) {
                    BlockElement e = adj_mul(g, w.w);
                    double n = norm(e);
                    if (n < tol.rank_tol) continue;
                    Vector v = e.vectorize() / n;
                    if (!even_seen.insert(phase_canonical_key(v)).second) continue;
                    chunk.push_back({(1.0 / n) * e, (1.0 / n) * mul_adj(w.rev, g)});
                    vecs.push_back(std::move(v));
                    if (vecs.size() >= static_cast<std::size_t>(kBatchChunk)) flush();
                }
            flush();
        }

        // odd extensions: w' = h e, rev' = rev_stub h
        std::vector<OddWord> next;
        {
            std::vector<OddWord> chunk;
            std::vector<Vector> vecs;
            auto flush = [&]() {
                if (vecs.empty()) return;
                Eigen::MatrixXcd c(odd.ambient_dim(), static_cast<Index>(vecs.size()));
                for (std::size_t j = 0; j < vecs.size(); ++j) c.col(static_cast<Index>(j)) = vecs[j];
                std::vector<int> acc = odd.add_batch(c);
                std::size_t ai = 0;
                for (std::size_t j = 0; j < chunk.size(); ++j) {
                    if (ai < acc.size() && acc[ai] == static_cast<int>(j)) {
                        kept.push_back(chunk[j]);
                        next.push_back(chunk[j]);
                        ++ai;
                    } else if (samples.size() < kMaxSamples) {
                        samples.push_back(chunk[j]);
                    }
                }
                chunk.clear();
                vecs.clear();
            };
            for (const auto& ew : even_frontier)
                for (const auto& h : ngens) {
                    BlockElement w2 = mul(h, ew.e);
                    double n = norm(w2);
                    if (n < tol.rank_tol) continue;
                    chunk.push_back({(1.0 / n) * w2, (1.0 / n) * mul(ew.rev_stub, h)});
                    vecs.push_back(chunk.back().w.vectorize());
                    if (vecs.size() >= static_cast<std::size_t>(kBatchChunk)) flush();
                }
            flush();
        }
        frontier = std::move(next);
    }

    if (odd.dim() < d)
        throw Error("word_antiautomorphism: words up to length " + std::to_string(kMaxWordLength) +
                    " span only " + std::to_string(odd.dim()) + " of " + std::to_string(d) +
                    " dimensions; generators do not generate the given closure");

    // linear fit theta W = R in the closure's coordinates
    Eigen::MatrixXcd W(d, static_cast<Index>(kept.size())), R(d, static_cast<Index>(kept.size()));
    for (std::size_t i = 0; i < kept.size(); ++i) {
        W.col(static_cast<Index>(i)) = t.space.coordinates(kept[i].w);
        R.col(static_cast<Index>(i)) = t.space.coordinates(kept[i].rev);
    }
    AntiAutomorphism out;
    out.domain = t.space;
    out.max_word_length = word_length;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(W.adjoint());
    out.matrix = qr.solve(R.adjoint()).adjoint();

    // reversal images must stay inside the closure
    double embed_res = 0.0;
    for (const auto& kw : kept) embed_res = std::max(embed_res, t.space.residual_norm(kw.rev));

    double word_res = embed_res;
    for (const auto& s : samples) {
        Vector pred = out.matrix * t.space.coordinates(s.w);
        Vector actual = t.space.coordinates(s.rev);
        word_res = std::max(word_res, (pred - actual).norm());
        word_res = std::max(word_res, t.space.residual_norm(s.rev));
    }
    out.residual = word_res;

    out.order2_residual =
        (out.matrix * out.matrix - Eigen::MatrixXcd::Identity(d, d)).norm();
    for (const auto& g : ngens) {
        Vector cg = t.space.coordinates(g);
        out.generator_fix_residual =
            std::max(out.generator_fix_residual, (out.matrix * cg - cg).norm());
    }

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto random_element = [&]() {
        Vector c(d);
        for (Index i = 0; i < d; ++i) c(i) = Complex(gauss(rng), gauss(rng));
        c /= c.norm();
        return t.space.from_coordinates(c);
    };
    auto apply = [&](const BlockElement& x) {
        return t.space.from_coordinates(out.matrix * t.space.coordinates(x));
    };
    for (int s = 0; s < 100; ++s) {
        BlockElement x = random_element(), y = random_element(), z = random_element();
        BlockElement u = ternary(x, y, z);
        BlockElement lhs = apply(u);
        BlockElement rhs = ternary(apply(z), apply(y), apply(x));
        out.antimult_residual =
            std::max(out.antimult_residual, norm(lhs - rhs) / std::max(1.0, norm(u)));
    }
    return out;
}

} // namespace troforge
