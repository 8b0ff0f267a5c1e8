#pragma once

#include "isac/core.hpp"

#include <iosfwd>
#include <memory>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace isac::conic {

// ---------------------------------------------------------------------------
// Affine expressions over the real parameters of a Problem.

struct LinExpr {
    double constant = 0.0;
    std::vector<std::pair<int, double>> terms;

    LinExpr() = default;
    LinExpr(double c) : constant(c) {}  // NOLINT: implicit on purpose

    LinExpr& operator+=(const LinExpr& o);
    LinExpr& operator-=(const LinExpr& o);
    LinExpr& operator*=(double a);
    /// Merge duplicate parameters and drop exact zeros.
    void compress();
};

LinExpr operator+(LinExpr a, const LinExpr& b);
LinExpr operator-(LinExpr a, const LinExpr& b);
LinExpr operator*(double a, LinExpr e);
LinExpr operator-(LinExpr e);

/// Complex-valued affine expression (real parameters, complex coefficients).
struct CLinExpr {
    cplx constant{0.0, 0.0};
    std::vector<std::pair<int, cplx>> terms;

    CLinExpr() = default;
    CLinExpr(cplx c) : constant(c) {}  // NOLINT
    CLinExpr(double c) : constant(c, 0.0) {}  // NOLINT
    CLinExpr(const LinExpr& e);         // NOLINT

    CLinExpr& operator+=(const CLinExpr& o);
    CLinExpr& operator-=(const CLinExpr& o);
    CLinExpr& operator*=(cplx a);
    void compress();

    LinExpr real() const;
    LinExpr imag() const;
    CLinExpr conj() const;
};

CLinExpr operator+(CLinExpr a, const CLinExpr& b);
CLinExpr operator-(CLinExpr a, const CLinExpr& b);
CLinExpr operator*(cplx a, CLinExpr e);

/// Square matrix of complex affine expressions, row-major.
struct MatExpr {
    int n = 0;
    std::vector<CLinExpr> entries;

    explicit MatExpr(int size = 0) : n(size), entries(static_cast<std::size_t>(size) * size) {}
    CLinExpr& operator()(int i, int j) { return entries[static_cast<std::size_t>(i) * n + j]; }
    const CLinExpr& operator()(int i, int j) const { return entries[static_cast<std::size_t>(i) * n + j]; }

    static MatExpr constant(const CMat& c);
    MatExpr& operator+=(const MatExpr& o);
    MatExpr& operator-=(const MatExpr& o);
    MatExpr& operator*=(cplx a);
};

MatExpr operator+(MatExpr a, const MatExpr& b);
MatExpr operator-(MatExpr a, const MatExpr& b);

/// Place blocks on a 2x2 grid: [[a, b], [b^H, d]].
MatExpr block2x2(const MatExpr& a, const MatExpr& b, const MatExpr& d);

// ---------------------------------------------------------------------------
// Problem

struct HermVar {
    int first = 0;  // index of the first real parameter
    int n = 0;
};

struct ScalarVar {
    int index = 0;
};

enum class Status { Optimal, Infeasible, Unbounded, NumericalFailure };
std::string to_string(Status s);

class Problem {
public:
    /// Hermitian n x n variable: n^2 real parameters (diagonal, then Re/Im of
    /// the strict upper triangle). Adds X >= 0 when `psd` is set.
    HermVar hermitian(int n, bool psd = true, std::string name = {});
    ScalarVar scalar(std::string name = {});

    LinExpr value(ScalarVar v) const;
    CLinExpr entry(HermVar X, int i, int j) const;
    MatExpr matrix(HermVar X) const;
    /// tr(A X) for arbitrary complex A.
    CLinExpr trace_product(const CMat& A, HermVar X) const;
    /// C X C^H as a matrix expression (C is p x n).
    MatExpr congruence(const CMat& C, HermVar X) const;

    void add_equality(LinExpr e);  // e == 0
    void add_nonneg(LinExpr e);    // e >= 0
    /// Hermitian affine matrix constrained PSD. Asymmetry below 1e-10
    /// (relative) is symmetrized away; larger asymmetry throws ParameterError.
    void add_psd(const MatExpr& m);

    void maximize(LinExpr objective);
    void minimize(LinExpr objective);

    int num_params() const { return num_params_; }
    const std::vector<LinExpr>& equalities() const { return equalities_; }
    const std::vector<LinExpr>& inequalities() const { return inequalities_; }
    const std::vector<MatExpr>& psd_constraints() const { return psd_; }
    const LinExpr& objective() const { return objective_; }
    bool maximizing() const { return maximize_; }

    struct VarInfo {
        std::string name;
        int first;
        int n;  // 0 for scalars
    };
    const std::vector<VarInfo>& variables() const { return vars_; }

private:
    int num_params_ = 0;
    std::vector<VarInfo> vars_;
    std::vector<LinExpr> equalities_;
    std::vector<LinExpr> inequalities_;
    std::vector<MatExpr> psd_;
    LinExpr objective_;
    bool maximize_ = true;
};

// ---------------------------------------------------------------------------
// Real standard form:  maximize b^T y  s.t.  F0_k + sum_p y_p F_pk >= 0 for
// every block k, and c_r + a_r^T y >= 0 for every linear row r.

struct Coefficient {
    int param = 0;
    // Either a dense symmetric matrix or a list of (row, col, value) entries
    // covering both triangles.
    RMat dense;
    std::vector<std::tuple<int, int, double>> sparse;
    bool is_dense() const { return dense.size() > 0; }
};

struct RealBlock {
    int n = 0;
    RMat constant;
    std::vector<Coefficient> coeffs;
};

struct RealSdp {
    int m = 0;
    RVec b;
    std::vector<RealBlock> blocks;
    RMat lp_a;  // rows x m
    RVec lp_c;
};

struct Tolerances {
    double feasibility = 1e-9;  // relative primal and dual residuals
    double gap = 1e-9;          // relative duality gap
    double accept = 1e-7;       // dual residual accepted on stagnation
    double certificate = 1e-5;  // primal residual and gap accepted on stagnation
    double psd = 1e-8;          // min eigenvalue floor on returned PSD variables
    int max_iterations = 100;
};

struct Stats {
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double gap = 0.0;
    double primal_objective = 0.0;  // of the real form, before unscaling
    double dual_objective = 0.0;
};

struct RealSolution {
    Status status = Status::NumericalFailure;
    RVec y;
    Stats stats;
};

/// Pluggable solver for the real standard form.
class Backend {
public:
    virtual ~Backend() = default;
    virtual RealSolution solve(const RealSdp& sdp, const Tolerances& tol) const = 0;
};

/// Infeasible-start primal-dual path following (HKM direction with Mehrotra
/// predictor-corrector).
class InteriorPoint : public Backend {
public:
    RealSolution solve(const RealSdp& sdp, const Tolerances& tol) const override;
};

struct Solution {
    Status status = Status::NumericalFailure;
    double objective = 0.0;
    std::vector<double> params;
    Stats stats;

    double value(ScalarVar v) const { return params[static_cast<std::size_t>(v.index)]; }
    double value(const LinExpr& e) const;
    cplx value(const CLinExpr& e) const;
    CMat value(HermVar X) const;
};

/// Real embedding [[Re H, -Im H], [Im H, Re H]] of a Hermitian matrix.
RMat embed_real(const CMat& H);
/// Inverse of embed_real (reads the top-left and bottom-left blocks).
CMat extract_complex(const RMat& R);

/// Lower the problem to real standard form (equalities eliminated). Exposed
/// for inspection and for dumping to external solvers.
struct Lowered {
    RealSdp sdp;
    // Original parameter p equals param_map[p] evaluated at the reduced y.
    std::vector<LinExpr> param_map;
    bool inconsistent = false;  // equalities have no solution
};
Lowered lower(const Problem& p);

/// Write the real form in SDPA sparse format (minimization of -b^T y).
void write_sdpa(const RealSdp& sdp, std::ostream& out);

Solution solve(const Problem& p, const Tolerances& tol = {}, const Backend* backend = nullptr);

}  // namespace isac::conic
