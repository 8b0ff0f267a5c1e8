#include "isac/conic.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <map>
#include <ostream>

namespace isac::conic {

// ---------------------------------------------------------------------------
// Expressions

namespace {

template <class T>
void compress_terms(std::vector<std::pair<int, T>>& terms)
{
    if (terms.empty())
        return;
    std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::size_t out = 0;
    for (std::size_t i = 0; i < terms.size();) {
        int id = terms[i].first;
        T acc = terms[i].second;
        std::size_t j = i + 1;
        for (; j < terms.size() && terms[j].first == id; ++j)
            acc += terms[j].second;
        if (acc != T(0))
            terms[out++] = {id, acc};
        i = j;
    }
    terms.resize(out);
}

int pair_index(int n, int j, int k)  // j < k
{
    return j * (2 * n - j - 1) / 2 + (k - j - 1);
}

}  // namespace

LinExpr& LinExpr::operator+=(const LinExpr& o)
{
    constant += o.constant;
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& o)
{
    constant -= o.constant;
    for (auto [id, c] : o.terms)
        terms.emplace_back(id, -c);
    return *this;
}

LinExpr& LinExpr::operator*=(double a)
{
    constant *= a;
    for (auto& t : terms)
        t.second *= a;
    return *this;
}

void LinExpr::compress() { compress_terms(terms); }

LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
LinExpr operator*(double a, LinExpr e) { return e *= a; }
LinExpr operator-(LinExpr e) { return e *= -1.0; }

CLinExpr::CLinExpr(const LinExpr& e) : constant(e.constant)
{
    terms.reserve(e.terms.size());
    for (auto [id, c] : e.terms)
        terms.emplace_back(id, cplx(c, 0.0));
}

CLinExpr& CLinExpr::operator+=(const CLinExpr& o)
{
    constant += o.constant;
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    return *this;
}

CLinExpr& CLinExpr::operator-=(const CLinExpr& o)
{
    constant -= o.constant;
    for (auto [id, c] : o.terms)
        terms.emplace_back(id, -c);
    return *this;
}

CLinExpr& CLinExpr::operator*=(cplx a)
{
    constant *= a;
    for (auto& t : terms)
        t.second *= a;
    return *this;
}

void CLinExpr::compress() { compress_terms(terms); }

LinExpr CLinExpr::real() const
{
    LinExpr e(constant.real());
    for (auto [id, c] : terms)
        if (c.real() != 0.0)
            e.terms.emplace_back(id, c.real());
    return e;
}

LinExpr CLinExpr::imag() const
{
    LinExpr e(constant.imag());
    for (auto [id, c] : terms)
        if (c.imag() != 0.0)
            e.terms.emplace_back(id, c.imag());
    return e;
}

CLinExpr CLinExpr::conj() const
{
    CLinExpr e(std::conj(constant));
    e.terms.reserve(terms.size());
    for (auto [id, c] : terms)
        e.terms.emplace_back(id, std::conj(c));
    return e;
}

CLinExpr operator+(CLinExpr a, const CLinExpr& b) { return a += b; }
CLinExpr operator-(CLinExpr a, const CLinExpr& b) { return a -= b; }
CLinExpr operator*(cplx a, CLinExpr e) { return e *= a; }

MatExpr MatExpr::constant(const CMat& c)
{
    if (c.rows() != c.cols())
        throw ParameterError("MatExpr::constant: matrix must be square");
    MatExpr m(static_cast<int>(c.rows()));
    for (int i = 0; i < m.n; ++i)
        for (int j = 0; j < m.n; ++j)
            m(i, j).constant = c(i, j);
    return m;
}

MatExpr& MatExpr::operator+=(const MatExpr& o)
{
    if (o.n != n)
        throw ParameterError("MatExpr size mismatch");
    for (std::size_t i = 0; i < entries.size(); ++i)
        entries[i] += o.entries[i];
    return *this;
}

MatExpr& MatExpr::operator-=(const MatExpr& o)
{
    if (o.n != n)
        throw ParameterError("MatExpr size mismatch");
    for (std::size_t i = 0; i < entries.size(); ++i)
        entries[i] -= o.entries[i];
    return *this;
}

MatExpr& MatExpr::operator*=(cplx a)
{
    for (auto& e : entries)
        e *= a;
    return *this;
}

MatExpr operator+(MatExpr a, const MatExpr& b) { return a += b; }
MatExpr operator-(MatExpr a, const MatExpr& b) { return a -= b; }

MatExpr block2x2(const MatExpr& a, const MatExpr& b, const MatExpr& d)
{
    if (a.n != b.n || b.n != d.n)
        throw ParameterError("block2x2: blocks must share one size");
    const int n = a.n;
    MatExpr m(2 * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            m(i, j) = a(i, j);
            m(i, j + n) = b(i, j);
            m(i + n, j) = b(j, i).conj();
            m(i + n, j + n) = d(i, j);
        }
    return m;
}

// ---------------------------------------------------------------------------
// Problem

HermVar Problem::hermitian(int n, bool psd, std::string name)
{
    if (n < 1)
        throw ParameterError("hermitian variable size must be >= 1");
    HermVar v{num_params_, n};
    num_params_ += n * n;
    vars_.push_back({std::move(name), v.first, n});
    if (psd)
        add_psd(matrix(v));
    return v;
}

ScalarVar Problem::scalar(std::string name)
{
    ScalarVar v{num_params_++};
    vars_.push_back({std::move(name), v.index, 0});
    return v;
}

LinExpr Problem::value(ScalarVar v) const
{
    LinExpr e;
    e.terms.emplace_back(v.index, 1.0);
    return e;
}

CLinExpr Problem::entry(HermVar X, int i, int j) const
{
    CLinExpr e;
    if (i == j) {
        e.terms.emplace_back(X.first + i, 1.0);
        return e;
    }
    const int lo = std::min(i, j);
    const int hi = std::max(i, j);
    const int base = X.first + X.n + 2 * pair_index(X.n, lo, hi);
    e.terms.emplace_back(base, 1.0);
    e.terms.emplace_back(base + 1, i < j ? cplx(0.0, 1.0) : cplx(0.0, -1.0));
    return e;
}

MatExpr Problem::matrix(HermVar X) const
{
    MatExpr m(X.n);
    for (int i = 0; i < X.n; ++i)
        for (int j = 0; j < X.n; ++j)
            m(i, j) = entry(X, i, j);
    return m;
}

CLinExpr Problem::trace_product(const CMat& A, HermVar X) const
{
    if (A.rows() != X.n || A.cols() != X.n)
        throw ParameterError("trace_product: size mismatch");
    const int n = X.n;
    CLinExpr e;
    e.terms.reserve(static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j)
        e.terms.emplace_back(X.first + j, A(j, j));
    const cplx I(0.0, 1.0);
    for (int j = 0; j < n; ++j)
        for (int k = j + 1; k < n; ++k) {
            const int base = X.first + n + 2 * pair_index(n, j, k);
            e.terms.emplace_back(base, A(k, j) + A(j, k));
            e.terms.emplace_back(base + 1, I * (A(k, j) - A(j, k)));
        }
    e.compress();
    return e;
}

MatExpr Problem::congruence(const CMat& C, HermVar X) const
{
    if (C.cols() != X.n)
        throw ParameterError("congruence: size mismatch");
    const int p = static_cast<int>(C.rows());
    const int n = X.n;
    const cplx I(0.0, 1.0);
    MatExpr m(p);
    for (int a = 0; a < p; ++a)
        for (int b = 0; b < p; ++b) {
            CLinExpr& e = m(a, b);
            e.terms.reserve(static_cast<std::size_t>(n) * n);
            for (int j = 0; j < n; ++j)
                e.terms.emplace_back(X.first + j, C(a, j) * std::conj(C(b, j)));
            for (int j = 0; j < n; ++j)
                for (int k = j + 1; k < n; ++k) {
                    const int base = X.first + n + 2 * pair_index(n, j, k);
                    const cplx x = C(a, j) * std::conj(C(b, k));
                    const cplx y = C(a, k) * std::conj(C(b, j));
                    e.terms.emplace_back(base, x + y);
                    e.terms.emplace_back(base + 1, I * (x - y));
                }
        }
    return m;
}

void Problem::add_equality(LinExpr e)
{
    e.compress();
    equalities_.push_back(std::move(e));
}

void Problem::add_nonneg(LinExpr e)
{
    e.compress();
    inequalities_.push_back(std::move(e));
}

void Problem::add_psd(const MatExpr& m)
{
    if (m.n < 1)
        throw ParameterError("add_psd: empty matrix");
    MatExpr c = m;
    for (auto& e : c.entries)
        e.compress();
    psd_.push_back(std::move(c));
}

void Problem::maximize(LinExpr objective)
{
    objective.compress();
    objective_ = std::move(objective);
    maximize_ = true;
}

void Problem::minimize(LinExpr objective)
{
    objective.compress();
    objective_ = std::move(objective);
    maximize_ = false;
}

std::string to_string(Status s)
{
    switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::NumericalFailure: return "numerical_failure";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// Embedding

RMat embed_real(const CMat& H)
{
    const CMat h = hermitian_part(H, 1e-10);
    const auto n = h.rows();
    RMat R(2 * n, 2 * n);
    R.topLeftCorner(n, n) = h.real();
    R.bottomRightCorner(n, n) = h.real();
    R.topRightCorner(n, n) = -h.imag();
    R.bottomLeftCorner(n, n) = h.imag();
    return R;
}

CMat extract_complex(const RMat& R)
{
    if (R.rows() != R.cols() || R.rows() % 2 != 0)
        throw ParameterError("extract_complex: expected an even square matrix");
    const auto n = R.rows() / 2;
    CMat H(n, n);
    H.real() = R.topLeftCorner(n, n);
    H.imag() = R.bottomLeftCorner(n, n);
    return H;
}

// ---------------------------------------------------------------------------
// Lowering

namespace {

LinExpr substitute(const LinExpr& e, const std::vector<LinExpr>& map, bool identity)
{
    if (identity)
        return e;
    LinExpr out(e.constant);
    for (auto [id, c] : e.terms) {
        const LinExpr& m = map[static_cast<std::size_t>(id)];
        out.constant += c * m.constant;
        for (auto [r, w] : m.terms)
            out.terms.emplace_back(r, c * w);
    }
    out.compress();
    return out;
}

CLinExpr substitute(const CLinExpr& e, const std::vector<LinExpr>& map, bool identity)
{
    if (identity)
        return e;
    CLinExpr out(e.constant);
    for (auto [id, c] : e.terms) {
        const LinExpr& m = map[static_cast<std::size_t>(id)];
        out.constant += c * m.constant;
        for (auto [r, w] : m.terms)
            out.terms.emplace_back(r, c * w);
    }
    out.compress();
    return out;
}

// Reduced row echelon elimination of the equality system. Returns false if
// the system is inconsistent.
bool eliminate(const Problem& p, std::vector<LinExpr>& map, int& reduced)
{
    const int m = p.num_params();
    const auto& eqs = p.equalities();
    const auto k = static_cast<int>(eqs.size());
    RMat E = RMat::Zero(k, m + 1);
    for (int i = 0; i < k; ++i) {
        for (auto [id, c] : eqs[static_cast<std::size_t>(i)].terms)
            E(i, id) += c;
        E(i, m) = -eqs[static_cast<std::size_t>(i)].constant;
    }
    const double scale = std::max(1.0, E.leftCols(m).cwiseAbs().maxCoeff());
    std::vector<int> pivot_col(static_cast<std::size_t>(k), -1);
    std::vector<bool> is_pivot(static_cast<std::size_t>(m), false);
    int row = 0;
    for (; row < k; ++row) {
        Eigen::Index r = 0, c = 0;
        const double best = E.block(row, 0, k - row, m).cwiseAbs().maxCoeff(&r, &c);
        if (best <= 1e-12 * scale)
            break;
        r += row;
        E.row(row).swap(E.row(r));
        E.row(row) /= E(row, c);
        for (int i = 0; i < k; ++i)
            if (i != row && E(i, c) != 0.0)
                E.row(i) -= E(i, c) * E.row(row);
        pivot_col[static_cast<std::size_t>(row)] = static_cast<int>(c);
        is_pivot[static_cast<std::size_t>(c)] = true;
    }
    for (int i = row; i < k; ++i)
        if (std::abs(E(i, m)) > 1e-9 * std::max(1.0, E.col(m).cwiseAbs().maxCoeff()))
            return false;

    std::vector<int> reduced_index(static_cast<std::size_t>(m), -1);
    reduced = 0;
    for (int q = 0; q < m; ++q)
        if (!is_pivot[static_cast<std::size_t>(q)])
            reduced_index[static_cast<std::size_t>(q)] = reduced++;
    map.assign(static_cast<std::size_t>(m), LinExpr{});
    for (int q = 0; q < m; ++q)
        if (!is_pivot[static_cast<std::size_t>(q)])
            map[static_cast<std::size_t>(q)].terms.emplace_back(reduced_index[static_cast<std::size_t>(q)], 1.0);
    for (int i = 0; i < row; ++i) {
        LinExpr& e = map[static_cast<std::size_t>(pivot_col[static_cast<std::size_t>(i)])];
        e.constant = E(i, m);
        for (int q = 0; q < m; ++q)
            if (!is_pivot[static_cast<std::size_t>(q)] && E(i, q) != 0.0)
                e.terms.emplace_back(reduced_index[static_cast<std::size_t>(q)], -E(i, q));
    }
    return true;
}

void symmetrize_checked(RMat& A)
{
    const double scale = std::max(1e-300, A.cwiseAbs().maxCoeff());
    const double asym = (A - A.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10 * scale)
        throw ParameterError("PSD constraint is not Hermitian (relative asymmetry " + std::to_string(asym / scale) +
                             ")");
    A = 0.5 * (A + A.transpose());
}

}  // namespace

Lowered lower(const Problem& p)
{
    Lowered out;
    const int m = p.num_params();
    int reduced = m;
    const bool identity = p.equalities().empty();
    if (identity) {
        out.param_map.resize(static_cast<std::size_t>(m));
        for (int q = 0; q < m; ++q)
            out.param_map[static_cast<std::size_t>(q)].terms.emplace_back(q, 1.0);
    } else if (!eliminate(p, out.param_map, reduced)) {
        out.inconsistent = true;
        return out;
    }
    RealSdp& sdp = out.sdp;
    sdp.m = reduced;

    const LinExpr obj = substitute(p.objective(), out.param_map, identity);
    sdp.b = RVec::Zero(reduced);
    const double sign = p.maximizing() ? 1.0 : -1.0;
    for (auto [id, c] : obj.terms)
        sdp.b(id) += sign * c;

    std::vector<LinExpr> rows;
    for (const auto& e : p.inequalities()) {
        LinExpr r = substitute(e, out.param_map, identity);
        r.compress();
        if (r.terms.empty()) {
            if (r.constant < -1e-12)
                out.inconsistent = true;
            continue;
        }
        rows.push_back(std::move(r));
    }

    for (const auto& me : p.psd_constraints()) {
        const int n = me.n;
        std::vector<CLinExpr> entries;
        entries.reserve(me.entries.size());
        bool complex = false;
        for (const auto& e : me.entries) {
            entries.push_back(substitute(e, out.param_map, identity));
            if (entries.back().constant.imag() != 0.0)
                complex = true;
            for (auto [id, c] : entries.back().terms)
                if (c.imag() != 0.0)
                    complex = true;
        }
        if (n == 1) {
            // Hermitian 1x1: the real part is the constraint.
            rows.push_back(entries[0].real());
            continue;
        }
        const int bn = complex ? 2 * n : n;
        RealBlock blk;
        blk.n = bn;
        blk.constant = RMat::Zero(bn, bn);
        std::map<int, RMat> coeff;
        auto put = [&](RMat& A, int i, int j, cplx v) {
            if (!complex) {
                A(i, j) += v.real();
                return;
            }
            A(i, j) += v.real();
            A(i + n, j + n) += v.real();
            A(i, j + n) -= v.imag();
            A(i + n, j) += v.imag();
        };
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const CLinExpr& e = entries[static_cast<std::size_t>(i) * n + j];
                put(blk.constant, i, j, e.constant);
                for (auto [id, c] : e.terms) {
                    auto it = coeff.find(id);
                    if (it == coeff.end())
                        it = coeff.emplace(id, RMat::Zero(bn, bn)).first;
                    put(it->second, i, j, c);
                }
            }
        if (blk.constant.size() > 0 && blk.constant.cwiseAbs().maxCoeff() > 0.0)
            symmetrize_checked(blk.constant);
        for (auto& [id, A] : coeff) {
            symmetrize_checked(A);
            Coefficient c;
            c.param = id;
            const auto nnz = (A.array() != 0.0).count();
            if (nnz == 0)
                continue;
            if (nnz <= 2 * bn) {
                for (int i = 0; i < bn; ++i)
                    for (int j = 0; j < bn; ++j)
                        if (A(i, j) != 0.0)
                            c.sparse.emplace_back(i, j, A(i, j));
            } else {
                c.dense = std::move(A);
            }
            blk.coeffs.push_back(std::move(c));
        }
        sdp.blocks.push_back(std::move(blk));
    }

    sdp.lp_a = RMat::Zero(static_cast<Eigen::Index>(rows.size()), reduced);
    sdp.lp_c = RVec::Zero(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        sdp.lp_c(static_cast<Eigen::Index>(r)) = rows[r].constant;
        for (auto [id, c] : rows[r].terms)
            sdp.lp_a(static_cast<Eigen::Index>(r), id) += c;
    }
    return out;
}

void write_sdpa(const RealSdp& sdp, std::ostream& out)
{
    const bool lp = sdp.lp_c.size() > 0;
    const auto nblocks = sdp.blocks.size() + (lp ? 1 : 0);
    out << "* real standard form: minimize -b^T y\n";
    out << sdp.m << "\n" << nblocks << "\n";
    for (const auto& b : sdp.blocks)
        out << b.n << " ";
    if (lp)
        out << -sdp.lp_c.size();
    out << "\n";
    out.precision(17);
    for (int p = 0; p < sdp.m; ++p)
        out << -sdp.b(p) << (p + 1 < sdp.m ? " " : "\n");
    if (sdp.m == 0)
        out << "\n";
    for (std::size_t k = 0; k < sdp.blocks.size(); ++k) {
        const auto& b = sdp.blocks[k];
        for (int i = 0; i < b.n; ++i)
            for (int j = i; j < b.n; ++j)
                if (b.constant(i, j) != 0.0)
                    out << 0 << " " << k + 1 << " " << i + 1 << " " << j + 1 << " " << -b.constant(i, j) << "\n";
        for (const auto& c : b.coeffs) {
            if (c.is_dense()) {
                for (int i = 0; i < b.n; ++i)
                    for (int j = i; j < b.n; ++j)
                        if (c.dense(i, j) != 0.0)
                            out << c.param + 1 << " " << k + 1 << " " << i + 1 << " " << j + 1 << " " << c.dense(i, j)
                                << "\n";
            } else {
                for (auto [i, j, v] : c.sparse)
                    if (i <= j)
                        out << c.param + 1 << " " << k + 1 << " " << i + 1 << " " << j + 1 << " " << v << "\n";
            }
        }
    }
    if (lp) {
        const auto k = sdp.blocks.size() + 1;
        for (Eigen::Index r = 0; r < sdp.lp_c.size(); ++r) {
            if (sdp.lp_c(r) != 0.0)
                out << 0 << " " << k << " " << r + 1 << " " << r + 1 << " " << -sdp.lp_c(r) << "\n";
            for (int p = 0; p < sdp.m; ++p)
                if (sdp.lp_a(r, p) != 0.0)
                    out << p + 1 << " " << k << " " << r + 1 << " " << r + 1 << " " << sdp.lp_a(r, p) << "\n";
        }
    }
}

// ---------------------------------------------------------------------------
// Solve

double Solution::value(const LinExpr& e) const
{
    double v = e.constant;
    for (auto [id, c] : e.terms)
        v += c * params[static_cast<std::size_t>(id)];
    return v;
}

cplx Solution::value(const CLinExpr& e) const
{
    cplx v = e.constant;
    for (auto [id, c] : e.terms)
        v += c * params[static_cast<std::size_t>(id)];
    return v;
}

CMat Solution::value(HermVar X) const
{
    const int n = X.n;
    CMat M(n, n);
    for (int j = 0; j < n; ++j)
        M(j, j) = params[static_cast<std::size_t>(X.first + j)];
    for (int j = 0; j < n; ++j)
        for (int k = j + 1; k < n; ++k) {
            const auto base = static_cast<std::size_t>(X.first + n + 2 * pair_index(n, j, k));
            M(j, k) = cplx(params[base], params[base + 1]);
            M(k, j) = std::conj(M(j, k));
        }
    return M;
}

Solution solve(const Problem& p, const Tolerances& tol, const Backend* backend)
{
    static const InteriorPoint default_backend;
    if (!backend)
        backend = &default_backend;
    Solution sol;
    const Lowered low = lower(p);
    if (low.inconsistent) {
        sol.status = Status::Infeasible;
        return sol;
    }
    const RealSolution rs = backend->solve(low.sdp, tol);
    sol.status = rs.status;
    sol.stats = rs.stats;
    sol.params.resize(static_cast<std::size_t>(p.num_params()));
    if (rs.y.size() == low.sdp.m) {
        for (std::size_t q = 0; q < sol.params.size(); ++q) {
            const LinExpr& e = low.param_map[q];
            double v = e.constant;
            for (auto [id, c] : e.terms)
                v += c * rs.y(id);
            sol.params[q] = v;
        }
        sol.objective = sol.value(p.objective());
    }
    return sol;
}

}  // namespace isac::conic
