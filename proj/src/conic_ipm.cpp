#include "isac/conic.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <limits>

namespace isac::conic {

namespace {

// Internal convention: S = C - sum_p y_p A_p with A_p = -F_p, which makes the
// real form the dual of   min <C, X>  s.t.  <A_p, X> = b_p,  X >= 0.
struct Block {
    int n = 0;
    RMat C;
    std::vector<int> dense_param;
    std::vector<RMat> dense;
    std::vector<int> sparse_param;
    std::vector<std::vector<std::tuple<int, int, double>>> sparse;
};

struct Scaled {
    int m = 0;
    RVec b;
    std::vector<Block> blocks;
    RMat A;  // lp rows x m, already negated
    RVec c;
    RVec col;  // y = col .* y_scaled
};

Scaled scale_problem(const RealSdp& in)
{
    const int m = in.m;
    const auto nb = in.blocks.size();
    const auto nr = in.lp_c.size();
    RVec col = RVec::Ones(m);
    RVec blk_scale = RVec::Ones(static_cast<Eigen::Index>(nb));
    RVec row_scale = RVec::Ones(nr);

    auto coef_max = [](const Coefficient& c) {
        if (c.is_dense())
            return c.dense.cwiseAbs().maxCoeff();
        double v = 0.0;
        for (auto [i, j, x] : c.sparse)
            v = std::max(v, std::abs(x));
        return v;
    };
    std::vector<std::vector<double>> cm(nb);
    for (std::size_t k = 0; k < nb; ++k)
        for (const auto& c : in.blocks[k].coeffs)
            cm[k].push_back(coef_max(c));

    // Geometric (Ruiz) equilibration of constraint rows/blocks against parameters.
    for (int round = 0; round < 6; ++round) {
        for (std::size_t k = 0; k < nb; ++k) {
            double mx = 0.0;
            for (std::size_t q = 0; q < in.blocks[k].coeffs.size(); ++q)
                mx = std::max(mx, cm[k][q] * col(in.blocks[k].coeffs[q].param));
            if (mx > 0.0)
                blk_scale(static_cast<Eigen::Index>(k)) = 1.0 / std::sqrt(mx / blk_scale(static_cast<Eigen::Index>(k)));
        }
        for (Eigen::Index r = 0; r < nr; ++r) {
            const double mx = (in.lp_a.row(r).cwiseAbs().transpose().cwiseProduct(col)).maxCoeff();
            if (mx > 0.0)
                row_scale(r) = 1.0 / std::sqrt(mx / row_scale(r));
        }
        RVec cmax = RVec::Zero(m);
        for (std::size_t k = 0; k < nb; ++k)
            for (std::size_t q = 0; q < in.blocks[k].coeffs.size(); ++q) {
                const int p = in.blocks[k].coeffs[q].param;
                cmax(p) = std::max(cmax(p), cm[k][q] * blk_scale(static_cast<Eigen::Index>(k)) * col(p));
            }
        for (Eigen::Index r = 0; r < nr; ++r)
            for (int p = 0; p < m; ++p)
                cmax(p) = std::max(cmax(p), std::abs(in.lp_a(r, p)) * row_scale(r) * col(p));
        for (int p = 0; p < m; ++p)
            if (cmax(p) > 0.0)
                col(p) /= std::sqrt(cmax(p));
    }

    Scaled s;
    s.m = m;
    s.col = col;
    s.b = in.b.cwiseProduct(col);
    const double bmax = s.b.size() ? s.b.cwiseAbs().maxCoeff() : 0.0;
    if (bmax > 0.0)
        s.b /= bmax;
    for (std::size_t k = 0; k < nb; ++k) {
        const RealBlock& src = in.blocks[k];
        const double bs = blk_scale(static_cast<Eigen::Index>(k));
        Block b;
        b.n = src.n;
        b.C = bs * src.constant;
        for (const auto& c : src.coeffs) {
            const double f = -bs * col(c.param);
            if (c.is_dense()) {
                b.dense_param.push_back(c.param);
                b.dense.push_back(f * c.dense);
            } else {
                b.sparse_param.push_back(c.param);
                auto t = c.sparse;
                for (auto& [i, j, v] : t)
                    v *= f;
                b.sparse.push_back(std::move(t));
            }
        }
        s.blocks.push_back(std::move(b));
    }
    s.A = -(row_scale.asDiagonal() * in.lp_a * col.asDiagonal());
    s.c = row_scale.cwiseProduct(in.lp_c);
    return s;
}

// sum_p y_p A_p restricted to a block.
RMat apply_adjoint(const Block& b, const RVec& y)
{
    RMat out = RMat::Zero(b.n, b.n);
    for (std::size_t q = 0; q < b.dense.size(); ++q)
        out += y(b.dense_param[q]) * b.dense[q];
    for (std::size_t q = 0; q < b.sparse.size(); ++q) {
        const double v = y(b.sparse_param[q]);
        if (v != 0.0)
            for (auto [i, j, a] : b.sparse[q])
                out(i, j) += v * a;
    }
    return out;
}

// out_p += <A_p, Y>.
void apply_forward(const Block& b, const RMat& Y, RVec& out)
{
    for (std::size_t q = 0; q < b.dense.size(); ++q)
        out(b.dense_param[q]) += b.dense[q].cwiseProduct(Y).sum();
    for (std::size_t q = 0; q < b.sparse.size(); ++q) {
        double acc = 0.0;
        for (auto [i, j, a] : b.sparse[q])
            acc += a * Y(i, j);
        out(b.sparse_param[q]) += acc;
    }
}

// M_pq += tr(A_p X A_q Sinv).
void accumulate_schur(const Block& b, const RMat& X, const RMat& Sinv, RMat& M)
{
    const auto nd = b.dense.size();
    const auto ns = b.sparse.size();
    for (std::size_t i = 0; i < nd; ++i) {
        const RMat P = X * b.dense[i] * Sinv;  // tr(A_j P) = M_ji
        const int pi = b.dense_param[i];
        for (std::size_t j = i; j < nd; ++j) {
            const double v = b.dense[j].cwiseProduct(P.transpose()).sum();
            const int pj = b.dense_param[j];
            M(pj, pi) += v;
            if (pj != pi)
                M(pi, pj) += v;
        }
        for (std::size_t j = 0; j < ns; ++j) {
            double v = 0.0;
            for (auto [r, c, a] : b.sparse[j])
                v += a * P(c, r);
            const int pj = b.sparse_param[j];
            M(pj, pi) += v;
            M(pi, pj) += v;
        }
    }
    for (std::size_t i = 0; i < ns; ++i) {
        const int pi = b.sparse_param[i];
        for (std::size_t j = i; j < ns; ++j) {
            double v = 0.0;
            for (auto [a1, b1, v1] : b.sparse[i])
                for (auto [c2, d2, v2] : b.sparse[j])
                    v += v1 * v2 * X(b1, c2) * Sinv(d2, a1);
            const int pj = b.sparse_param[j];
            M(pi, pj) += v;
            if (pi != pj)
                M(pj, pi) += v;
        }
    }
}

constexpr double kBig = 1e30;

// Largest alpha with X + alpha D >= 0 (X positive definite).
double max_step(const Eigen::LLT<RMat>& chol, const RMat& D)
{
    RMat W = chol.matrixL().solve(D);
    W = chol.matrixL().solve(W.transpose()).transpose();
    Eigen::SelfAdjointEigenSolver<RMat> es(0.5 * (W + W.transpose()), Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues()(0);
    return lo >= 0.0 ? kBig : -1.0 / lo;
}

double max_step(const RVec& x, const RVec& d)
{
    double a = kBig;
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (d(i) < 0.0)
            a = std::min(a, -x(i) / d(i));
    return a;
}

struct Iterate {
    std::vector<RMat> X, S;
    RVec x, s, y;
};

}  // namespace

RealSolution InteriorPoint::solve(const RealSdp& in, const Tolerances& tol) const
{
    RealSolution out;
    const Scaled P = scale_problem(in);
    const int m = P.m;
    const auto nb = P.blocks.size();
    const auto nr = P.c.size();

    // Parameters that appear nowhere: pinned at zero, or unbounded if the objective uses them.
    std::vector<bool> used(static_cast<std::size_t>(m), false);
    for (const auto& b : P.blocks) {
        for (int p : b.dense_param)
            used[static_cast<std::size_t>(p)] = true;
        for (int p : b.sparse_param)
            used[static_cast<std::size_t>(p)] = true;
    }
    for (Eigen::Index r = 0; r < nr; ++r)
        for (int p = 0; p < m; ++p)
            if (P.A(r, p) != 0.0)
                used[static_cast<std::size_t>(p)] = true;
    for (int p = 0; p < m; ++p)
        if (!used[static_cast<std::size_t>(p)] && P.b(p) != 0.0) {
            out.status = Status::Unbounded;
            out.y = RVec::Zero(m);
            return out;
        }

    int ntot = static_cast<int>(nr);
    double normC = P.c.squaredNorm();
    for (const auto& b : P.blocks) {
        ntot += b.n;
        normC += b.C.squaredNorm();
    }
    normC = std::sqrt(normC);
    const double normB = P.b.norm();

    // Starting point.
    Iterate it;
    it.y = RVec::Zero(m);
    for (const auto& b : P.blocks) {
        double amax = 0.0, ratio = 0.0;
        for (std::size_t q = 0; q < b.dense.size(); ++q) {
            const double na = b.dense[q].norm();
            amax = std::max(amax, na);
            ratio = std::max(ratio, (1.0 + std::abs(P.b(b.dense_param[q]))) / (1.0 + na));
        }
        for (std::size_t q = 0; q < b.sparse.size(); ++q) {
            double na = 0.0;
            for (auto [i, j, a] : b.sparse[q])
                na += a * a;
            na = std::sqrt(na);
            amax = std::max(amax, na);
            ratio = std::max(ratio, (1.0 + std::abs(P.b(b.sparse_param[q]))) / (1.0 + na));
        }
        const double sn = std::sqrt(static_cast<double>(b.n));
        const double xi = std::max({10.0, sn, b.n * ratio});
        const double eta = std::max({10.0, sn, amax, b.C.norm()});
        it.X.push_back(xi * RMat::Identity(b.n, b.n));
        it.S.push_back(eta * RMat::Identity(b.n, b.n));
    }
    {
        double amax = 0.0, ratio = 0.0;
        for (Eigen::Index r = 0; r < nr; ++r)
            amax = std::max(amax, P.A.row(r).norm());
        for (int p = 0; p < m; ++p)
            ratio = std::max(ratio, (1.0 + std::abs(P.b(p))) / (1.0 + P.A.col(p).norm()));
        const double xi = std::max(10.0, nr * ratio);
        const double eta = std::max({10.0, amax, P.c.size() ? P.c.cwiseAbs().maxCoeff() : 0.0});
        it.x = RVec::Constant(nr, xi);
        it.s = RVec::Constant(nr, eta);
    }

    Iterate best = it;
    double best_err = std::numeric_limits<double>::infinity();
    Stats best_stats;
    double gamma = 0.9;
    int stalls = 0;
    const bool trace = std::getenv("ISAC_CONIC_TRACE") != nullptr;

    for (int iter = 0; iter <= tol.max_iterations; ++iter) {
        // Residuals.
        RVec AX = RVec::Zero(m);
        double pobj = P.c.dot(it.x), mu = it.x.dot(it.s);
        std::vector<RMat> Rd(nb);
        double rd2 = 0.0;
        for (std::size_t k = 0; k < nb; ++k) {
            const Block& b = P.blocks[k];
            apply_forward(b, it.X[k], AX);
            pobj += b.C.cwiseProduct(it.X[k]).sum();
            mu += it.X[k].cwiseProduct(it.S[k]).sum();
            Rd[k] = b.C - apply_adjoint(b, it.y) - it.S[k];
            rd2 += Rd[k].squaredNorm();
        }
        AX += P.A.transpose() * it.x;
        const RVec rd_lp = P.c - P.A * it.y - it.s;
        rd2 += rd_lp.squaredNorm();
        const RVec rp = P.b - AX;
        const double dobj = P.b.dot(it.y);
        const double complementarity = mu;
        mu /= std::max(ntot, 1);

        Stats st;
        st.iterations = iter;
        st.primal_residual = rp.norm() / (1.0 + normB);
        st.dual_residual = std::sqrt(rd2) / (1.0 + normC);
        st.gap = std::max(complementarity, std::abs(pobj - dobj)) / (1.0 + std::abs(pobj) + std::abs(dobj));
        st.primal_objective = pobj;
        st.dual_objective = dobj;
        // The returned point is y, whose feasibility is the dual residual; the
        // primal residual and the gap only measure the optimality certificate.
        const double err =
            std::max(std::max(st.primal_residual, st.gap) * tol.accept / tol.certificate, st.dual_residual);
        if (trace)
            std::fprintf(stderr, "ipm %3d pres %.3e dres %.3e gap %.3e pobj %.6e dobj %.6e mu %.3e\n", iter,
                         st.primal_residual, st.dual_residual, st.gap, pobj, dobj, mu);
        if (err < best_err) {
            best_err = err;
            best = it;
            best_stats = st;
        }
        if (st.primal_residual <= tol.feasibility && st.dual_residual <= tol.feasibility && st.gap <= tol.gap) {
            out.status = Status::Optimal;
            out.y = it.y.cwiseProduct(P.col);
            out.stats = st;
            return out;
        }
        // Certificates of infeasibility of the real form and of its dual.
        if (pobj < 0.0 && AX.norm() <= 1e-8 * -pobj && st.dual_residual > tol.feasibility) {
            out.status = Status::Infeasible;
            out.y = it.y.cwiseProduct(P.col);
            out.stats = st;
            return out;
        }
        if (dobj > 0.0) {
            double r2 = (P.c - rd_lp).squaredNorm();
            for (std::size_t k = 0; k < nb; ++k)
                r2 += (P.blocks[k].C - Rd[k]).squaredNorm();
            if (std::sqrt(r2) <= 1e-8 * dobj && st.primal_residual > tol.feasibility) {
                out.status = Status::Unbounded;
                out.y = it.y.cwiseProduct(P.col);
                out.stats = st;
                return out;
            }
        }
        if (iter == tol.max_iterations)
            break;

        // Schur complement.
        std::vector<RMat> Sinv(nb);
        std::vector<Eigen::LLT<RMat>> cholX(nb), cholS(nb);
        bool ok = true;
        for (std::size_t k = 0; k < nb && ok; ++k) {
            cholS[k].compute(it.S[k]);
            cholX[k].compute(it.X[k]);
            if (cholS[k].info() != Eigen::Success || cholX[k].info() != Eigen::Success) {
                ok = false;
                break;
            }
            Sinv[k] = cholS[k].solve(RMat::Identity(P.blocks[k].n, P.blocks[k].n));
            Sinv[k] = 0.5 * (Sinv[k] + Sinv[k].transpose());
        }
        if (!ok)
            break;
        RMat M = RMat::Zero(m, m);
        for (std::size_t k = 0; k < nb; ++k)
            accumulate_schur(P.blocks[k], it.X[k], Sinv[k], M);
        const RVec xs = it.x.cwiseQuotient(it.s);
        if (nr > 0)
            M.noalias() += P.A.transpose() * xs.asDiagonal() * P.A;
        for (int p = 0; p < m; ++p)
            if (!used[static_cast<std::size_t>(p)])
                M(p, p) = 1.0;
        Eigen::LLT<RMat> cholM;
        double reg = 0.0;
        const double dmax = std::max(M.diagonal().maxCoeff(), 1e-300);
        for (int attempt = 0; attempt < 6; ++attempt) {
            RMat Mr = M;
            Mr.diagonal().array() += reg;
            cholM.compute(Mr);
            if (cholM.info() == Eigen::Success)
                break;
            reg = reg == 0.0 ? 1e-14 * dmax : reg * 100.0;
        }
        if (cholM.info() != Eigen::Success)
            break;

        // X Rd Sinv contribution (constant between predictor and corrector).
        RVec base = rp;
        {
            RVec tmp = RVec::Zero(m);
            for (std::size_t k = 0; k < nb; ++k)
                apply_forward(P.blocks[k], it.X[k] * Rd[k] * Sinv[k], tmp);
            tmp += P.A.transpose() * xs.cwiseProduct(rd_lp);
            base += tmp;
        }

        auto direction = [&](const std::vector<RMat>& T, const RVec& t, RVec& dy, std::vector<RMat>& dX,
                             std::vector<RMat>& dS, RVec& dx, RVec& ds) {
            RVec rhs = base;
            RVec tmp = RVec::Zero(m);
            for (std::size_t k = 0; k < nb; ++k)
                apply_forward(P.blocks[k], T[k], tmp);
            tmp += P.A.transpose() * t;
            rhs -= tmp;
            for (int p = 0; p < m; ++p)
                if (!used[static_cast<std::size_t>(p)])
                    rhs(p) = 0.0;
            dy = cholM.solve(rhs);
            dX.resize(nb);
            dS.resize(nb);
            for (std::size_t k = 0; k < nb; ++k) {
                dS[k] = Rd[k] - apply_adjoint(P.blocks[k], dy);
                RMat d = T[k] - it.X[k] * dS[k] * Sinv[k];
                dX[k] = 0.5 * (d + d.transpose());
            }
            ds = rd_lp - P.A * dy;
            dx = t - it.x.cwiseProduct(ds).cwiseQuotient(it.s);
        };
        auto steps = [&](const std::vector<RMat>& dX, const std::vector<RMat>& dS, const RVec& dx, const RVec& ds,
                         double& ap, double& ad) {
            ap = max_step(it.x, dx);
            ad = max_step(it.s, ds);
            for (std::size_t k = 0; k < nb; ++k) {
                ap = std::min(ap, max_step(cholX[k], dX[k]));
                ad = std::min(ad, max_step(cholS[k], dS[k]));
            }
        };

        // Predictor.
        std::vector<RMat> T(nb);
        for (std::size_t k = 0; k < nb; ++k)
            T[k] = -it.X[k];
        RVec t = -it.x;
        RVec dy;
        std::vector<RMat> dX, dS;
        RVec dx, ds;
        direction(T, t, dy, dX, dS, dx, ds);
        double ap = 0.0, ad = 0.0;
        steps(dX, dS, dx, ds, ap, ad);
        ap = std::min(1.0, ap);
        ad = std::min(1.0, ad);
        double mu_aff = (it.x + ap * dx).dot(it.s + ad * ds);
        for (std::size_t k = 0; k < nb; ++k)
            mu_aff += (it.X[k] + ap * dX[k]).cwiseProduct(it.S[k] + ad * dS[k]).sum();
        mu_aff /= std::max(ntot, 1);
        const double expon = std::max(1.0, 3.0 * std::min(ap, ad) * std::min(ap, ad));
        const double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, expon), 0.0, 1.0);

        // Corrector.
        for (std::size_t k = 0; k < nb; ++k)
            T[k] = sigma * mu * Sinv[k] - it.X[k] - dX[k] * dS[k] * Sinv[k];
        t = (RVec::Constant(nr, sigma * mu) - dx.cwiseProduct(ds)).cwiseQuotient(it.s) - it.x;
        direction(T, t, dy, dX, dS, dx, ds);
        steps(dX, dS, dx, ds, ap, ad);
        ap = std::min(1.0, gamma * ap);
        ad = std::min(1.0, gamma * ad);

        for (std::size_t k = 0; k < nb; ++k) {
            it.X[k] += ap * dX[k];
            it.S[k] += ad * dS[k];
            it.X[k] = 0.5 * (it.X[k] + it.X[k].transpose());
            it.S[k] = 0.5 * (it.S[k] + it.S[k].transpose());
        }
        it.x += ap * dx;
        it.s += ad * ds;
        it.y += ad * dy;
        gamma = 0.9 + 0.09 * std::min(ap, ad);

        stalls = (ap < 1e-6 && ad < 1e-6) ? stalls + 1 : 0;
        if (stalls >= 3)
            break;
    }

    out.y = best.y.cwiseProduct(P.col);
    out.stats = best_stats;
    out.status = best_err <= tol.accept ? Status::Optimal : Status::NumericalFailure;
    return out;
}

}  // namespace isac::conic
