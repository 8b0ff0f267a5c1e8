#include "isac/txbf.hpp"

#include "isac/crb.hpp"

#include <limits>

namespace isac {

namespace {

using conic::CLinExpr;
using conic::HermVar;
using conic::LinExpr;
using conic::MatExpr;
using conic::ScalarVar;

void check_reflect(const Scenario& s, const ReflectSolution& reflect)
{
    if (static_cast<int>(reflect.phases.size()) != s.L())
        throw ParameterError("need one phase vector per IRS");
    for (const auto& phi : reflect.phases) {
        if (phi.size() != s.N())
            throw ParameterError("phase vector must have N entries");
        for (Eigen::Index n = 0; n < phi.size(); ++n)
            if (std::abs(std::abs(phi(n)) - 1.0) > 1e-9)
                throw ParameterError("reflection coefficients must have unit modulus");
    }
}

// Normalized model: every covariance is divided by P and every channel is
// scaled by sqrt(P / sigma^2), so SINR rows and the power row are O(1).
struct Program {
    conic::Problem prob;
    HermVar rx;
    std::vector<std::vector<std::optional<HermVar>>> W;
    std::vector<std::vector<std::optional<ScalarVar>>> p;
    std::vector<std::vector<CVec>> g;  // normalized effective channels
    std::vector<LinExpr> rows;
    std::vector<std::pair<int, int>> row_user;
};

LinExpr signal(const Program& pg, int l, int k, const CVec& g, const TxOptions& opts)
{
    if (pg.W[l][k])
        return pg.prob.trace_product(g * g.adjoint(), *pg.W[l][k]).real();
    if (pg.p[l][k]) {
        const cplx a = g.dot((*opts.directions)[l][k]);
        return std::norm(a) * pg.prob.value(*pg.p[l][k]);
    }
    return LinExpr(0.0);
}

void build_common(Program& pg, const Scenario& s, const ReflectSolution& reflect, Receiver rx, const TxOptions& opts)
{
    const int L = s.L(), K = s.K(), M = s.M();
    const auto& cfg = s.config;
    const double chan = std::sqrt(cfg.max_power / cfg.comm_noise_power);
    auto& prob = pg.prob;

    pg.rx = prob.hermitian(M, false, "Rx");
    pg.W.assign(L, std::vector<std::optional<HermVar>>(K));
    pg.p.assign(L, std::vector<std::optional<ScalarVar>>(K));
    pg.g.assign(L, std::vector<CVec>(K));
    for (int l = 0; l < L; ++l)
        for (int k = 0; k < K; ++k) {
            pg.g[l][k] = chan * effective_channel(s, l, k, reflect.phases[l]);
            if (cfg.sinr(l, k) <= 0.0)
                continue;  // a user without a requirement gets no dedicated covariance
            if (opts.directions) {
                pg.p[l][k] = prob.scalar("p");
                prob.add_nonneg(prob.value(*pg.p[l][k]));
            } else {
                pg.W[l][k] = prob.hermitian(M, true, "W");
            }
        }

    // R_0 = Rx - sum W >= 0
    MatExpr r0 = prob.matrix(pg.rx);
    for (int l = 0; l < L; ++l)
        for (int k = 0; k < K; ++k) {
            if (pg.W[l][k]) {
                r0 -= prob.matrix(*pg.W[l][k]);
            } else if (pg.p[l][k]) {
                const CVec& u = (*opts.directions)[l][k];
                const int id = pg.p[l][k]->index;
                for (int i = 0; i < M; ++i)
                    for (int j = 0; j < M; ++j)
                        r0(i, j).terms.emplace_back(id, -u(i) * std::conj(u(j)));
            }
        }
    prob.add_psd(r0);
    prob.add_nonneg(1.0 - prob.trace_product(CMat::Identity(M, M), pg.rx).real());

    for (int l = 0; l < L; ++l)
        for (int k = 0; k < K; ++k) {
            const double gamma = cfg.sinr(l, k);
            if (gamma <= 0.0)
                continue;
            const CVec& g = pg.g[l][k];
            LinExpr row = (1.0 + 1.0 / gamma) * signal(pg, l, k, g, opts) - 1.0;
            if (rx == Receiver::TypeI) {
                row -= prob.trace_product(g * g.adjoint(), pg.rx).real();
            } else {
                for (int l2 = 0; l2 < L; ++l2)
                    for (int k2 = 0; k2 < K; ++k2)
                        row -= signal(pg, l2, k2, g, opts);
            }
            row.compress();
            pg.rows.push_back(std::move(row));
            pg.row_user.emplace_back(l, k);
        }
}

TransmitSolution relaxed_solution(const Program& pg, const conic::Solution& sol, const Scenario& s,
                                  const TxOptions& opts)
{
    const double P = s.config.max_power;
    const int L = s.L(), K = s.K(), M = s.M();
    TransmitSolution tx;
    tx.info.assign(L, std::vector<CMat>(K, CMat::Zero(M, M)));
    const CMat rx = P * sol.value(pg.rx);
    CMat sum = CMat::Zero(M, M);
    for (int l = 0; l < L; ++l)
        for (int k = 0; k < K; ++k) {
            if (pg.W[l][k]) {
                tx.info[l][k] = P * sol.value(*pg.W[l][k]);
            } else if (pg.p[l][k]) {
                const CVec& u = (*opts.directions)[l][k];
                tx.info[l][k] = P * std::max(sol.value(*pg.p[l][k]), 0.0) * (u * u.adjoint());
            }
            sum += tx.info[l][k];
        }
    tx.sense = rx - sum;
    tx.sense = 0.5 * (tx.sense + tx.sense.adjoint());
    return tx;
}

// Called when the main program did not solve: decide between a provably
// infeasible SINR set and a solver failure.
[[noreturn]] void diagnose_failure(const Scenario& s, const ReflectSolution& reflect, Receiver rx,
                                   const TxOptions& opts, conic::Status status)
{
    Program pg;
    build_common(pg, s, reflect, rx, opts);
    const ScalarVar t = pg.prob.scalar("t");
    for (const auto& row : pg.rows)
        pg.prob.add_nonneg(row - pg.prob.value(t));
    pg.prob.add_nonneg(1.0 - pg.prob.value(t));
    pg.prob.maximize(pg.prob.value(t));
    const conic::Solution sol = conic::solve(pg.prob, opts.tolerances);
    if (sol.status == conic::Status::Optimal && sol.value(t) < -1e-6) {
        std::vector<InfeasibleError::User> binding;
        const double tstar = sol.value(t);
        for (std::size_t i = 0; i < pg.rows.size(); ++i) {
            if (sol.value(pg.rows[i]) - tstar > 1e-5 * (1.0 + std::abs(tstar)))
                continue;
            const auto [l, k] = pg.row_user[i];
            const double probe = effective_channel(s, l, k, reflect.phases[l]).squaredNorm() * s.config.max_power /
                                 s.config.comm_noise_power;
            binding.push_back({l, k, probe});
        }
        throw InfeasibleError("SINR targets are not attainable within the power budget", std::move(binding));
    }
    throw SolverError("transmit program not solved (" + conic::to_string(status) + ")");
}

TxResult finish(const Program& pg, const conic::Solution& sol, const Scenario& s, const ReflectSolution& reflect,
                const TxOptions& opts)
{
    TxResult res;
    res.relaxed = relaxed_solution(pg, sol, s, opts);
    res.solution = extract_rank_one(s, reflect, res.relaxed, opts.unserved_tol);
    res.stats = sol.stats;
    return res;
}

}  // namespace

CVec effective_channel(const Scenario& s, int l, int k, const CVec& phi)
{
    return s.bs_irs[l].adjoint() * (phi.conjugate().asDiagonal() * s.irs_cu[l][k]);
}

double sinr(Receiver rx, const Scenario& s, int l, int k, const TransmitSolution& tx, const CVec& phi)
{
    const CVec h = effective_channel(s, l, k, phi);
    auto q = [&h](const CMat& W) { return h.dot(W * h).real(); };
    double interference = s.config.comm_noise_power;
    for (int l2 = 0; l2 < s.L(); ++l2)
        for (int k2 = 0; k2 < s.K(); ++k2)
            if (l2 != l || k2 != k)
                interference += q(tx.info[l2][k2]);
    if (rx == Receiver::TypeI)
        interference += q(tx.sense);
    return q(tx.info[l][k]) / interference;
}

double sinr_margin(Receiver rx, const Scenario& s, const TransmitSolution& tx, const ReflectSolution& reflect)
{
    double margin = std::numeric_limits<double>::infinity();
    for (int l = 0; l < s.L(); ++l)
        for (int k = 0; k < s.K(); ++k) {
            const double g = s.config.sinr(l, k);
            if (g > 0.0)
                margin = std::min(margin, sinr(rx, s, l, k, tx, reflect.phases[l]) / g);
        }
    return margin;
}

CVec rank_one_extract(const CMat& W, const CVec& h, double tol)
{
    if (W.rows() != h.size() || W.cols() != h.size())
        throw ParameterError("rank_one_extract: size mismatch");
    const CVec Wh = W * h;
    const double q = h.dot(Wh).real();
    const double scale = h.squaredNorm() * std::abs(W.trace().real());
    if (!(q > tol * scale) || scale == 0.0)
        throw ExtractionError("user receives no signal power in the relaxed solution", -1, -1);
    return Wh / std::sqrt(q);
}

TransmitSolution extract_rank_one(const Scenario& s, const ReflectSolution& reflect, const TransmitSolution& relaxed,
                                  double tol)
{
    const int L = s.L(), K = s.K(), M = s.M();
    TransmitSolution out;
    out.info = relaxed.info;
    out.sense = relaxed.sense;
    out.beams.assign(L, std::vector<CVec>(K, CVec::Zero(M)));
    for (int l = 0; l < L; ++l)
        for (int k = 0; k < K; ++k) {
            if (s.config.sinr(l, k) <= 0.0) {
                out.sense += relaxed.info[l][k];
                out.info[l][k].setZero();
                continue;
            }
            CVec w;
            try {
                w = rank_one_extract(relaxed.info[l][k], effective_channel(s, l, k, reflect.phases[l]), tol);
            } catch (const ExtractionError& e) {
                throw ExtractionError(e.what(), l, k);
            }
            const CMat Wr = w * w.adjoint();
            out.sense += relaxed.info[l][k] - Wr;
            out.info[l][k] = Wr;
            out.beams[l][k] = w;
        }
    out.sense = 0.5 * (out.sense + out.sense.adjoint());
    return out;
}

TxResult solve_point_tx(const Scenario& s, const ReflectSolution& reflect, Receiver rx,
                        const std::vector<double>& assumed_theta, const TxOptions& opts)
{
    check_reflect(s, reflect);
    const int L = s.L(), M = s.M(), Ns = s.Ns();
    if (static_cast<int>(assumed_theta.size()) != L)
        throw ParameterError("need one assumed angle per IRS");
    for (double th : assumed_theta)
        if (!(std::abs(th) <= 89.0 * kPi / 180.0))
            throw GeometryError("assumed angle outside the identifiable cone");

    Program pg;
    build_common(pg, s, reflect, rx, opts);
    auto& prob = pg.prob;
    const double P = s.config.max_power;
    const double c1 = (Ns - 1.0) * Ns * (Ns + 1.0) / 12.0;

    // Per IRS: a = B^H phi*, d = B^H D phi*, weighted so that c1 s + Ns v - Ns|u|^2/s = rho P / CRB_l.
    std::vector<CVec> av(L), dv(L);
    std::vector<double> weight(L);
    double ref = 0.0;
    for (int l = 0; l < L; ++l) {
        const SensingDerived d = sensing_derived(s, l, CMat::Identity(M, M), assumed_theta[l]);
        const CVec pc = reflect.phases[l].conjugate();
        av[l] = d.B.adjoint() * pc;
        dv[l] = d.B.adjoint() * (d.d_n.asDiagonal() * pc);
        weight[l] = P / point_prefactor(s, l, assumed_theta[l]);
        PointForms f;
        f.s = av[l].squaredNorm() / M;
        f.u = av[l].dot(dv[l]) / double(M);
        f.v = dv[l].squaredNorm() / M;
        ref = std::max(ref, weight[l] * point_denominator(f, Ns));
    }
    const double rho = ref > 0.0 ? 1.0 / ref : 1.0;

    const ScalarVar nu1 = prob.scalar("nu1");
    prob.add_nonneg(prob.value(nu1));
    for (int l = 0; l < L; ++l) {
        const double w = std::sqrt(rho * weight[l]);
        const CVec a = w * av[l], d = w * dv[l];
        const LinExpr sv = prob.trace_product(a * a.adjoint(), pg.rx).real();
        const LinExpr vv = prob.trace_product(d * d.adjoint(), pg.rx).real();
        const CLinExpr uv = prob.trace_product(d * a.adjoint(), pg.rx);
        const ScalarVar nu2 = prob.scalar("nu2");
        MatExpr lmi(2);
        lmi(0, 0) = sv;
        lmi(0, 1) = std::sqrt(double(Ns)) * uv;
        lmi(1, 0) = std::sqrt(double(Ns)) * uv.conj();
        lmi(1, 1) = prob.value(nu2);
        prob.add_psd(lmi);
        prob.add_nonneg(c1 * sv + double(Ns) * vv - prob.value(nu2) - prob.value(nu1));
    }
    for (const auto& row : pg.rows)
        prob.add_nonneg(row);
    prob.maximize(prob.value(nu1));

    const conic::Solution sol = conic::solve(prob, opts.tolerances);
    if (sol.status != conic::Status::Optimal)
        diagnose_failure(s, reflect, rx, opts, sol.status);
    TxResult res = finish(pg, sol, s, reflect, opts);
    const double v = sol.value(nu1);
    res.design_objective = v > 0.0 ? rho / v : std::numeric_limits<double>::infinity();
    return res;
}

TxResult solve_extended_tx(const Scenario& s, const ReflectSolution& reflect, Receiver rx, const TxOptions& opts)
{
    check_reflect(s, reflect);
    const int L = s.L(), M = s.M(), N = s.N();
    if (M < N)
        throw ParameterError("extended-target design needs M >= N for an estimable response");
    const auto& cfg = s.config;
    const double P = cfg.max_power;
    const double unit = cfg.num_irs_sensors * cfg.sense_noise_power / cfg.dwell_symbols;

    Program pg;
    build_common(pg, s, reflect, rx, opts);
    auto& prob = pg.prob;

    // Q_l = G_l Rx G_l^H = P q_l (Gn Rx~ Gn^H) with Gn = G_l / sqrt(q_l / P)...
    std::vector<double> q(L);
    double rho = 0.0;
    for (int l = 0; l < L; ++l) {
        q[l] = P * s.bs_irs[l].squaredNorm() / (double(M) * N);
        rho = std::max(rho, unit * N / q[l]);
    }
    const ScalarVar u = prob.scalar("u");
    for (int l = 0; l < L; ++l) {
        const CMat Gn = s.bs_irs[l] * std::sqrt(P / q[l]);
        const HermVar Z = prob.hermitian(N, false, "Z");
        prob.add_psd(conic::block2x2(prob.matrix(Z), MatExpr::constant(CMat::Identity(N, N)),
                                     prob.congruence(Gn, pg.rx)));
        const double c = unit / (q[l] * rho);
        prob.add_nonneg(prob.value(u) - c * prob.trace_product(CMat::Identity(N, N), Z).real());
    }
    for (const auto& row : pg.rows)
        prob.add_nonneg(row);
    prob.minimize(prob.value(u));

    const conic::Solution sol = conic::solve(prob, opts.tolerances);
    if (sol.status != conic::Status::Optimal)
        diagnose_failure(s, reflect, rx, opts, sol.status);
    TxResult res = finish(pg, sol, s, reflect, opts);
    res.design_objective = rho * sol.value(u);
    return res;
}

}  // namespace isac
