#include "troforge/grids.hpp"

#include "troforge/triple.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <set>
#include <sstream>

namespace troforge {

std::string family_name(GridFamily f) {
    switch (f) {
        case GridFamily::Spin: return "spin";
        case GridFamily::Hermitian: return "hermitian";
        case GridFamily::Symplectic: return "symplectic";
        case GridFamily::Rectangular: return "rectangular";
        case GridFamily::RankOne: return "rank1";
    }
    return "?";
}

std::optional<GridFamily> family_from_name(const std::string& s) {
    if (s == "spin") return GridFamily::Spin;
    if (s == "hermitian") return GridFamily::Hermitian;
    if (s == "symplectic") return GridFamily::Symplectic;
    if (s == "rectangular") return GridFamily::Rectangular;
    if (s == "rank1" || s == "rank-one") return GridFamily::RankOne;
    return std::nullopt;
}

const BlockElement& Grid::at(const std::string& key) const {
    auto it = elements.find(key);
    if (it == elements.end()) throw InputError("grid: missing element '" + key + "'");
    return it->second;
}

BlockShape Grid::shape() const {
    if (elements.empty()) throw InputError("grid: no elements");
    BlockShape s = elements.begin()->second.shape();
    for (const auto& [k, e] : elements)
        if (e.shape() != s) throw InputError("grid: element '" + k + "' has a different shape");
    return s;
}

std::string spin_key(int j, bool tilde) {
    return (tilde ? "ut" : "u") + std::to_string(j);
}

std::string pair_key(int i, int j) {
    return std::to_string(i) + "," + std::to_string(j);
}

std::string index_key(int i) { return std::to_string(i); }

std::vector<BlockElement> grid_elements(const Grid& g) {
    std::vector<BlockElement> out;
    out.reserve(g.elements.size());
    for (const auto& [k, e] : g.elements) out.push_back(e);
    return out;
}

Subspace grid_span(const Grid& g, const ToleranceConfig& tol) {
    return span_basis(grid_elements(g), tol);
}

namespace {

int parse_int(const std::string& s, std::size_t begin, std::size_t end) {
    int value = 0;
    auto res = std::from_chars(s.data() + begin, s.data() + end, value);
    if (res.ec != std::errc() || res.ptr != s.data() + end)
        throw InputError("grid: malformed element key '" + s + "'");
    return value;
}

struct SpinLabel {
    int j = 0;
    bool tilde = false;
    bool center() const { return j == 0; }
};

SpinLabel parse_spin_key(const std::string& key) {
    if (key.size() < 2 || key[0] != 'u') throw InputError("grid: malformed spin key '" + key + "'");
    SpinLabel l;
    std::size_t pos = 1;
    if (key[1] == 't') {
        l.tilde = true;
        pos = 2;
    }
    l.j = parse_int(key, pos, key.size());
    if (l.j == 0 && l.tilde) throw InputError("grid: center element must be keyed 'u0'");
    return l;
}

std::pair<int, int> parse_pair_key(const std::string& key) {
    auto comma = key.find(',');
    if (comma == std::string::npos) throw InputError("grid: expected 'i,j' key, got '" + key + "'");
    return {parse_int(key, 0, comma), parse_int(key, comma + 1, key.size())};
}

struct Expected {
    std::string axiom;
    BlockElement value; // may be the zero element
};

std::string triple_index(const std::string& a, const std::string& b, const std::string& c) {
    return "(" + a + "," + b + "," + c + ")";
}

// ---- spin ------------------------------------------------------------

struct SpinGridView {
    std::vector<std::string> keys;
    std::vector<SpinLabel> labels;
    const Grid* grid = nullptr;

    const BlockElement& partner(const SpinLabel& l) const {
        if (l.center()) return grid->at("u0");
        return grid->at(spin_key(l.j, !l.tilde));
    }
    const BlockElement& elem(const SpinLabel& l) const {
        if (l.center()) return grid->at("u0");
        return grid->at(spin_key(l.j, l.tilde));
    }
};

Expected expected_spin(const SpinGridView& v, std::size_t a, std::size_t b, std::size_t c) {
    const SpinLabel &la = v.labels[a], &lb = v.labels[b], &lc = v.labels[c];
    const BlockShape shape = v.grid->shape();
    const BlockElement zero = BlockElement::zero(shape);
    const bool same_ab = a == b, same_bc = b == c;

    if (same_ab && same_bc) return {"TRI", v.elem(la)};

    // center relations (SPG7-SPG9); the center is self-paired
    if (la.center() && lb.center() && !lc.center())
        return {lc.tilde ? "SPG8" : "SPG7", v.elem(lc)};
    if (lc.center() && lb.center() && !la.center())
        return {la.tilde ? "SPG8" : "SPG7", v.elem(la)};
    if (same_ab && !la.center() && lc.center())
        return {la.tilde ? "SPG8" : "SPG7", 0.5 * v.elem(lc)};
    if (same_bc && !lb.center() && la.center())
        return {lb.tilde ? "SPG8" : "SPG7", 0.5 * v.elem(la)};
    if (la.center() && lc.center() && !lb.center()) return {"SPG9", -1.0 * v.partner(lb)};

    // collinear pair rules {x,x,y} (SPG1-SPG3); partners of equal index are orthogonal
    if (same_ab && !la.center() && !lc.center()) {
        if (la.j == lc.j) return {"SPG6", zero};
        const char* id = (la.tilde == lc.tilde) ? (la.tilde ? "SPG3" : "SPG2") : "SPG1";
        return {id, 0.5 * v.elem(lc)};
    }
    if (same_bc && !lb.center() && !la.center()) {
        if (lb.j == la.j) return {"SPG6", zero};
        const char* id = (lb.tilde == la.tilde) ? (lb.tilde ? "SPG3" : "SPG2") : "SPG1";
        return {id, 0.5 * v.elem(la)};
    }

    // outer partners of one index (SPG4/SPG5, extended to a center middle)
    if (!la.center() && !lc.center() && la.j == lc.j && la.tilde != lc.tilde && !same_ab &&
        !same_bc) {
        if (lb.center()) return {"SPG9", -0.5 * v.elem(lb)};
        if (lb.j != la.j) return {lb.tilde ? "SPG5" : "SPG4", -0.5 * v.partner(lb)};
    }
    return {"SPG6", zero};
}

// ---- hermitian / symplectic ------------------------------------------

int other_of(const std::pair<int, int>& p, int x) { return p.first == x ? p.second : p.first; }
bool pair_has(const std::pair<int, int>& p, int x) { return p.first == x || p.second == x; }

Expected expected_hermitian(const Grid& g, const std::vector<std::pair<int, int>>& pairs,
                            std::size_t a, std::size_t b, std::size_t c) {
    const BlockElement zero = BlockElement::zero(g.shape());
    const auto &A = pairs[a], &B = pairs[b], &C = pairs[c];
    if (a == b && b == c) return {"TRI", g.at(pair_key(A.first, A.second))};

    // chain match u_{ij} u_{jk} u_{kl}
    std::vector<std::pair<int, int>> orients = {{B.first, B.second}};
    if (B.second != B.first) orients.push_back({B.second, B.first});
    for (auto [j, k] : orients) {
        if (!pair_has(A, j) || !pair_has(C, k)) continue;
        int i = other_of(A, j), l = other_of(C, k);
        if (i != l) return {"HG5", 0.5 * g.at(pair_key(std::min(i, l), std::max(i, l)))};
        return {"HG6", g.at(pair_key(i, i))};
    }
    auto disjoint = [](const std::pair<int, int>& p, const std::pair<int, int>& q) {
        return !pair_has(p, q.first) && !pair_has(p, q.second);
    };
    if ((a == b && disjoint(A, C)) || (b == c && disjoint(C, A))) return {"HG2", zero};
    return {"HG7", zero};
}

Expected expected_symplectic(const Grid& g, const std::vector<std::pair<int, int>>& pairs,
                             std::size_t a, std::size_t b, std::size_t c) {
    const BlockElement zero = BlockElement::zero(g.shape());
    const auto &A = pairs[a], &B = pairs[b], &C = pairs[c];
    auto shares = [](const std::pair<int, int>& p, const std::pair<int, int>& q) {
        return pair_has(p, q.first) || pair_has(p, q.second);
    };
    if (a == b && b == c) return {"TRI", g.at(pair_key(A.first, A.second))};
    if (a == b) return shares(A, C) ? Expected{"SYG2", 0.5 * g.at(pair_key(C.first, C.second))}
                                    : Expected{"SYG3", zero};
    if (b == c) return shares(B, A) ? Expected{"SYG2", 0.5 * g.at(pair_key(A.first, A.second))}
                                    : Expected{"SYG3", zero};
    if (a != c) {
        for (int i : {B.first, B.second}) {
            int l = other_of(B, i);
            if (!pair_has(A, i) || !pair_has(C, l)) continue;
            int jj = other_of(A, i), kk = other_of(C, l);
            std::set<int> all{i, jj, kk, l};
            if (all.size() != 4) continue;
            double sign = 1.0;
            if (A.first != i) sign = -sign;  // stored element is u_{ji}
            if (B.first != i) sign = -sign;
            if (C.first != kk) sign = -sign;
            double rsign = kk < jj ? 1.0 : -1.0;
            int lo = std::min(kk, jj), hi = std::max(kk, jj);
            return {"SYG4", (0.5 * sign * rsign) * g.at(pair_key(lo, hi))};
        }
    }
    return {"SYG5", zero};
}

// ---- rectangular / rank one -------------------------------------------

Expected expected_rectangular(const Grid& g, const std::vector<std::pair<int, int>>& idx,
                              std::size_t a, std::size_t b, std::size_t c) {
    const BlockElement zero = BlockElement::zero(g.shape());
    const auto &A = idx[a], &B = idx[b], &C = idx[c];
    if (a == b && b == c) return {"TRI", g.at(pair_key(A.first, A.second))};
    if (a == b) {
        int matches = (A.first == C.first) + (A.second == C.second);
        return matches == 1 ? Expected{"RG2", 0.5 * g.at(pair_key(C.first, C.second))}
                            : Expected{"RG1", zero};
    }
    if (b == c) {
        int matches = (B.first == A.first) + (B.second == A.second);
        return matches == 1 ? Expected{"RG2", 0.5 * g.at(pair_key(A.first, A.second))}
                            : Expected{"RG1", zero};
    }
    if (A.first == B.first && A.second != B.second && B.second == C.second && B.first != C.first)
        return {"RG3", 0.5 * g.at(pair_key(C.first, A.second))};
    if (C.first == B.first && C.second != B.second && B.second == A.second && B.first != A.first)
        return {"RG3", 0.5 * g.at(pair_key(A.first, C.second))};
    return {"RG4", zero};
}

Expected expected_rank1(const Grid& g, const std::vector<int>& idx, std::size_t a, std::size_t b,
                        std::size_t c) {
    const BlockElement zero = BlockElement::zero(g.shape());
    if (a == b && b == c) return {"TRI", g.at(index_key(idx[a]))};
    if (a == b) return {"RG'2", 0.5 * g.at(index_key(idx[c]))};
    if (b == c) return {"RG'2", 0.5 * g.at(index_key(idx[a]))};
    if (a == c) return {"RG'1", zero};
    return {"RG'3", zero};
}

// Canonicalized element list. Mirrored keys ("j,i") are merged into the
// canonical representative, reporting HG1/SYG1 when the two disagree.
struct CanonicalPairs {
    std::vector<std::string> keys;
    std::vector<std::pair<int, int>> pairs;
    Grid canonical;
};

CanonicalPairs canonicalize_pairs(const Grid& g, bool hermitian, const ToleranceConfig& tol,
                                  std::vector<AxiomViolation>& violations, double& max_residual) {
    CanonicalPairs out;
    out.canonical.kind = g.kind;
    for (const auto& [key, elem] : g.elements) {
        auto [i, j] = parse_pair_key(key);
        if (!hermitian && i == j) throw InputError("symplectic grid: diagonal key '" + key + "'");
        int lo = std::min(i, j), hi = std::max(i, j);
        std::string ck = pair_key(lo, hi);
        BlockElement canon = (i <= j || hermitian) ? elem : -1.0 * elem;
        auto it = out.canonical.elements.find(ck);
        if (it == out.canonical.elements.end()) {
            out.canonical.elements.emplace(ck, canon);
        } else {
            double res = norm(it->second - canon);
            if (res > tol.eq_tol * std::max(1.0, norm(canon))) {
                violations.push_back({hermitian ? "HG1" : "SYG1", "(" + ck + ")", res});
                max_residual = std::max(max_residual, res);
            }
        }
    }
    for (const auto& [key, elem] : out.canonical.elements) {
        (void)elem;
        out.keys.push_back(key);
        out.pairs.push_back(parse_pair_key(key));
    }
    return out;
}

} // namespace

AxiomReport verify_grid(const Grid& g, const ToleranceConfig& tol) {
    AxiomReport report;
    report.subject = family_name(g.kind.family) + " grid";
    if (g.elements.empty()) throw InputError("verify_grid: empty grid");
    const BlockShape shape = g.shape();
    shape.validate();

    const Grid* work = &g;
    std::vector<std::string> keys;
    std::vector<std::pair<int, int>> pairs;
    std::vector<int> singles;
    std::vector<SpinLabel> spin_labels;
    CanonicalPairs canon;

    switch (g.kind.family) {
        case GridFamily::Hermitian:
        case GridFamily::Symplectic:
            canon = canonicalize_pairs(g, g.kind.family == GridFamily::Hermitian, tol,
                                       report.violations, report.max_residual);
            work = &canon.canonical;
            keys = canon.keys;
            pairs = canon.pairs;
            break;
        case GridFamily::Rectangular:
            for (const auto& [key, e] : g.elements) {
                (void)e;
                keys.push_back(key);
                pairs.push_back(parse_pair_key(key));
            }
            break;
        case GridFamily::RankOne:
            for (const auto& [key, e] : g.elements) {
                (void)e;
                keys.push_back(key);
                singles.push_back(parse_int(key, 0, key.size()));
            }
            break;
        case GridFamily::Spin:
            for (const auto& [key, e] : g.elements) {
                (void)e;
                keys.push_back(key);
                spin_labels.push_back(parse_spin_key(key));
            }
            // every non-center index needs its partner
            for (const auto& l : spin_labels)
                if (!l.center() && !g.has(spin_key(l.j, !l.tilde)))
                    throw InputError("spin grid: missing partner of '" + spin_key(l.j, l.tilde) +
                                     "'");
            break;
    }

    SpinGridView spin_view{keys, spin_labels, work};
    std::vector<const BlockElement*> elems;
    for (const auto& k : keys) elems.push_back(&work->at(k));
    const std::size_t n = elems.size();

    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            for (std::size_t c = 0; c < n; ++c) {
                Expected exp = [&] {
                    switch (g.kind.family) {
                        case GridFamily::Spin: return expected_spin(spin_view, a, b, c);
                        case GridFamily::Hermitian: return expected_hermitian(*work, pairs, a, b, c);
                        case GridFamily::Symplectic:
                            return expected_symplectic(*work, pairs, a, b, c);
                        case GridFamily::Rectangular:
                            return expected_rectangular(*work, pairs, a, b, c);
                        case GridFamily::RankOne: return expected_rank1(*work, singles, a, b, c);
                    }
                    throw Error("unreachable");
                }();
                BlockElement lhs = jordan_triple(*elems[a], *elems[b], *elems[c]);
                double res = norm(lhs - exp.value);
                report.max_residual = std::max(report.max_residual, res);
                if (res > tol.eq_tol * std::max(1.0, norm(exp.value)))
                    report.violations.push_back(
                        {exp.axiom, triple_index(keys[a], keys[b], keys[c]), res});
            }

    std::sort(report.violations.begin(), report.violations.end(),
              [](const AxiomViolation& x, const AxiomViolation& y) {
                  return std::tie(x.axiom, x.index) < std::tie(y.axiom, y.index);
              });
    report.passed = report.violations.empty();
    return report;
}

// ---- constructions -----------------------------------------------------

std::vector<Matrix> build_standard_spin_system(int k) {
    if (k < 2) throw InputError("standard spin system: k must be >= 2");
    const int n = (k + 1) / 2;
    const Index dim = Index(1) << n;
    std::vector<Matrix> out;
    out.push_back(Matrix::Identity(dim, dim));
    for (int idx = 1; idx <= k; ++idx) {
        const int layer = (idx - 1) / 2;
        const int p = (idx % 2 == 1) ? 1 : 2;
        Matrix m = kron(kron_power(pauli(3), layer), pauli(p));
        out.push_back(kron(m, kron_power(Matrix::Identity(2, 2), n - layer - 1)));
    }
    return out;
}

double spin_system_defect(const std::vector<Matrix>& system) {
    if (system.empty()) throw InputError("spin system: empty");
    const Index dim = system[0].rows();
    double worst = (system[0] - Matrix::Identity(dim, dim)).norm();
    for (std::size_t i = 1; i < system.size(); ++i) {
        worst = std::max(worst, (system[i] - system[i].adjoint()).norm());
        for (std::size_t j = 1; j < system.size(); ++j) {
            Matrix anti = system[i] * system[j] + system[j] * system[i];
            if (i == j) anti -= 2.0 * Matrix::Identity(dim, dim);
            worst = std::max(worst, anti.norm());
        }
    }
    return worst;
}

Grid spin_grid_from_spin_system(const std::vector<Matrix>& system) {
    if (system.size() < 3) throw InputError("spin grid: need at least {id, s1, s2}");
    const int k = static_cast<int>(system.size()) - 1;
    const int pairs = (k + 1) / 2;
    const bool center = (k % 2 == 0);
    const Complex I(0, 1);

    Grid g;
    g.kind = {GridFamily::Spin, pairs, 0, center};
    const Matrix& v = system[0];
    auto put = [&g](const std::string& key, const Matrix& m) {
        g.elements.emplace(key, BlockElement::single(m));
    };
    put(spin_key(1, false), -0.5 * I * (v + system[1]));
    put(spin_key(1, true), -0.5 * I * (v - system[1]));
    for (int j = 2; j <= pairs; ++j) {
        const Matrix& s = system[static_cast<std::size_t>(2 * j - 2)];
        const Matrix& t = system[static_cast<std::size_t>(2 * j - 1)];
        put(spin_key(j, false), 0.5 * (s - I * t));
        put(spin_key(j, true), 0.5 * (s + I * t));
    }
    if (center) put("u0", system.back());
    return g;
}

Grid build_spin_grid(int k) { return spin_grid_from_spin_system(build_standard_spin_system(k)); }

SpinSystemFromGrid spin_grid_to_spin_system(const Grid& g, const ToleranceConfig& tol) {
    if (g.kind.family != GridFamily::Spin) throw InputError("expected a spin grid");
    AxiomReport rep = verify_grid(g, tol);
    if (!rep.passed) throw Error("spin_grid_to_spin_system: grid fails verification");
    if (!g.has("u1") || !g.has("ut1")) throw InputError("spin grid: index 1 must be present");

    std::vector<int> indices;
    for (const auto& [key, e] : g.elements) {
        (void)e;
        SpinLabel l = parse_spin_key(key);
        if (!l.center() && !l.tilde) indices.push_back(l.j);
    }
    std::sort(indices.begin(), indices.end());

    const Complex I(0, 1);
    SpinSystemFromGrid out;
    out.v = I * (g.at("u1") + g.at("ut1"));
    out.system.push_back(out.v);
    out.system.push_back(I * (g.at("u1") - g.at("ut1")));
    for (int j : indices) {
        if (j == 1) continue;
        out.system.push_back(g.at(spin_key(j, false)) + g.at(spin_key(j, true)));
        out.system.push_back(I * (g.at(spin_key(j, false)) - g.at(spin_key(j, true))));
    }
    if (g.has("u0")) out.system.push_back(g.at("u0"));
    return out;
}

Grid build_hermitian_grid(int n) {
    if (n < 1) throw InputError("hermitian grid: n must be >= 1");
    Grid g;
    g.kind = {GridFamily::Hermitian, n, 0, false};
    for (int i = 1; i <= n; ++i)
        for (int j = i; j <= n; ++j) {
            Matrix m = matrix_unit(n, n, i - 1, j - 1);
            if (i != j) m += matrix_unit(n, n, j - 1, i - 1);
            g.elements.emplace(pair_key(i, j), BlockElement::single(m));
        }
    return g;
}

Grid build_symplectic_grid(int n) {
    if (n < 4) throw InputError("symplectic grid: n must be >= 4");
    Grid g;
    g.kind = {GridFamily::Symplectic, n, 0, false};
    for (int i = 1; i <= n; ++i)
        for (int j = i + 1; j <= n; ++j)
            g.elements.emplace(pair_key(i, j),
                               BlockElement::single(matrix_unit(n, n, i - 1, j - 1) -
                                                    matrix_unit(n, n, j - 1, i - 1)));
    return g;
}

BlockElement symplectic_at(const Grid& g, int i, int j) {
    if (i == j) throw InputError("symplectic grid: no diagonal elements");
    if (i < j) return g.at(pair_key(i, j));
    return -1.0 * g.at(pair_key(j, i));
}

Grid build_rectangular_grid(int n, int m) {
    if (n < 1 || m < 1) throw InputError("rectangular grid: dimensions must be positive");
    Grid g;
    g.kind = {GridFamily::Rectangular, n, m, false};
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= m; ++j)
            g.elements.emplace(pair_key(i, j), BlockElement::single(matrix_unit(n, m, i - 1, j - 1)));
    return g;
}

std::vector<std::vector<int>> subsets_lex(int n, int k) {
    std::vector<std::vector<int>> out;
    if (k < 0 || k > n) return out;
    std::vector<int> cur(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) cur[static_cast<std::size_t>(i)] = i + 1;
    while (true) {
        out.push_back(cur);
        int i = k - 1;
        while (i >= 0 && cur[static_cast<std::size_t>(i)] == n - (k - 1 - i)) --i;
        if (i < 0) break;
        ++cur[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < k; ++j)
            cur[static_cast<std::size_t>(j)] = cur[static_cast<std::size_t>(j - 1)] + 1;
    }
    if (k == 0) out = {{}};
    return out;
}

int permutation_sign(const std::vector<int>& seq) {
    int inversions = 0;
    for (std::size_t i = 0; i < seq.size(); ++i)
        for (std::size_t j = i + 1; j < seq.size(); ++j)
            if (seq[i] > seq[j]) ++inversions;
    return inversions % 2 == 0 ? 1 : -1;
}

std::vector<Matrix> build_Hkn_basis(int n, int k) {
    if (k < 1 || k > n) throw InputError("H^k_n: k must lie in 1..n");
    const auto I_sets = subsets_lex(n, k - 1);
    const auto J_sets = subsets_lex(n, n - k);
    std::map<std::vector<int>, int> J_pos;
    for (std::size_t r = 0; r < J_sets.size(); ++r) J_pos[J_sets[r]] = static_cast<int>(r);

    const Index p = static_cast<Index>(J_sets.size()); // C(n,k)
    const Index q = static_cast<Index>(I_sets.size()); // C(n,k-1)
    std::vector<Matrix> out(static_cast<std::size_t>(n), Matrix::Zero(p, q));

    for (int i = 1; i <= n; ++i) {
        for (std::size_t col = 0; col < I_sets.size(); ++col) {
            const auto& I_set = I_sets[col];
            if (std::find(I_set.begin(), I_set.end(), i) != I_set.end()) continue;
            std::vector<int> J_set;
            std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
            for (int x : I_set) used[static_cast<std::size_t>(x)] = 1;
            used[static_cast<std::size_t>(i)] = 1;
            for (int x = 1; x <= n; ++x)
                if (!used[static_cast<std::size_t>(x)]) J_set.push_back(x);
            std::vector<int> seq = I_set;
            seq.push_back(i);
            seq.insert(seq.end(), J_set.begin(), J_set.end());
            int row = J_pos.at(J_set);
            out[static_cast<std::size_t>(i - 1)](row, static_cast<Index>(col)) =
                static_cast<double>(permutation_sign(seq));
        }
    }
    return out;
}

Grid rank1_grid_from_elements(const std::vector<BlockElement>& elems) {
    if (elems.empty()) throw InputError("rank-one grid: no elements");
    Grid g;
    g.kind = {GridFamily::RankOne, static_cast<int>(elems.size()), 0, false};
    for (std::size_t i = 0; i < elems.size(); ++i)
        g.elements.emplace(index_key(static_cast<int>(i + 1)), elems[i]);
    return g;
}

} // namespace troforge
