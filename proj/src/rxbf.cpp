#include "isac/rxbf.hpp"

#include "isac/crb.hpp"
#include "isac/txbf.hpp"

#include <cmath>
#include <limits>

namespace isac {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double quad(const CMat& A, const CVec& pc) { return pc.dot(A * pc).real(); }

CVec normalize_phase(CVec phi)
{
    if (phi.size() > 0)
        phi *= std::conj(phi(0));
    return phi;
}

// phi from a vector proportional to phi*.
CVec candidate_from(const CVec& x) { return normalize_phase(unit_phases(x).conjugate()); }

void check_index(const Scenario& s, int l, const TransmitSolution& tx, const CVec& incumbent)
{
    if (l < 0 || l >= s.L())
        throw ParameterError("IRS index out of range");
    if (incumbent.size() != s.N())
        throw ParameterError("incumbent phase vector must have N entries");
    if (static_cast<int>(tx.info.size()) != s.L())
        throw ParameterError("transmit solution does not match the scenario");
}

double min_ratio(const std::vector<LiftedSinr>& cons, double noise, const CVec& phi)
{
    const CVec pc = phi.conjugate();
    double r = kInf;
    for (const auto& c : cons)
        r = std::min(r, quad(c.signal, pc) / ((quad(c.interference, pc) + noise) * c.gamma));
    return r;
}

RVec eigenvalues(const CMat& h)
{
    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (h + h.adjoint()), Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

double rank_ratio(const CMat& theta)
{
    if (theta.rows() < 2)
        return 0.0;
    const RVec ev = eigenvalues(theta);
    const double top = ev(ev.size() - 1);
    return top > 0.0 ? std::max(ev(ev.size() - 2), 0.0) / top : 1.0;
}

CVec top_candidate(const CMat& theta)
{
    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (theta + theta.adjoint()));
    return candidate_from(es.eigenvectors().col(theta.rows() - 1));
}

conic::HermVar unit_diagonal(conic::Problem& prob, int N)
{
    const conic::HermVar theta = prob.hermitian(N, true, "Theta");
    for (int n = 0; n < N; ++n)
        prob.add_equality(prob.entry(theta, n, n).real() - 1.0);
    return theta;
}

// A stalled solve still returns a feasible lifted point; it only seeds the
// randomization, whose candidates are checked directly.
bool usable(const conic::Solution& sol, const conic::Tolerances& tol)
{
    if (sol.status == conic::Status::Optimal)
        return true;
    return sol.status == conic::Status::NumericalFailure && !sol.params.empty() &&
           sol.stats.dual_residual <= tol.certificate;
}

[[noreturn]] void irs_infeasible(const Scenario& s, int l, const TransmitSolution& tx,
                                 const std::vector<LiftedSinr>& cons)
{
    std::vector<InfeasibleError::User> users;
    for (const auto& c : cons) {
        // best reflection for this user alone: co-phased signal, no interference
        double root = 0.0;
        for (Eigen::Index n = 0; n < c.signal.rows(); ++n)
            root += std::sqrt(std::max(c.signal(n, n).real(), 0.0));
        users.push_back({l, c.k, root * root / s.config.comm_noise_power});
    }
    (void)tx;
    throw InfeasibleError("SINR targets at this IRS are not attainable for the given transmit beams", users);
}

// Chooses between the lifted solution's candidates and the incumbent.
// `score` is minimized.
void pick(ReflectResult& res, const CMat& theta, const std::function<double(const CVec&)>& score,
          const std::function<bool(const CVec&)>& feasible, const CVec& incumbent, Rng& rng,
          const ReflectOptions& opts)
{
    res.lifted = theta;
    res.diag.rank_ratio = rank_ratio(theta);
    CVec best;
    bool found = false;
    if (res.diag.rank_ratio < opts.rank_one_ratio) {
        best = top_candidate(theta);
        found = feasible(best);
        res.diag.feasible_candidates = found ? 1 : 0;
    }
    if (!found) {
        res.diag.randomized = true;
        try {
            best = gaussian_randomize(theta, opts.draws, score, feasible, rng, &res.diag.feasible_candidates);
            found = true;
        } catch (const NoFeasibleCandidate&) {
            res.diag.fallback_used = true;
            res.proposal = gaussian_randomize(
                theta, opts.draws, score, [](const CVec&) { return true; }, rng);
        }
    }
    if (!found || score(incumbent) < score(best)) {
        best = incumbent;
        res.diag.incumbent_kept = true;
    }
    res.phases = best;
    res.diag.score = score(best);
}

}  // namespace

CVec gaussian_randomize(const CMat& theta, int draws, const std::function<double(const CVec&)>& score,
                        const std::function<bool(const CVec&)>& feasible, Rng& rng, int* feasible_count)
{
    if (draws < 1)
        throw ParameterError("need at least one randomization draw");
    const int N = static_cast<int>(theta.rows());
    const CMat root = psd_sqrt(0.5 * (theta + theta.adjoint()));
    CVec best;
    double best_score = kInf;
    int count = 0;
    auto consider = [&](const CVec& phi) {
        if (!feasible(phi))
            return;
        ++count;
        const double v = score(phi);
        if (best.size() == 0 || v < best_score) {
            best = phi;
            best_score = v;
        }
    };
    consider(top_candidate(theta));
    for (int i = 0; i < draws; ++i)
        consider(candidate_from(root * rng.cn_vector(N)));
    if (feasible_count)
        *feasible_count = count;
    if (best.size() == 0)
        throw NoFeasibleCandidate("no randomized candidate satisfies the constraints");
    return best;
}

std::vector<LiftedSinr> lifted_sinr(const Scenario& s, int l, const TransmitSolution& tx, Receiver rx)
{
    const CMat& G = s.bs_irs[l];
    const CMat Rx = tx.total_covariance();
    CMat all_info = CMat::Zero(s.M(), s.M());
    for (const auto& row : tx.info)
        for (const auto& W : row)
            all_info += W;
    std::vector<LiftedSinr> out;
    for (int k = 0; k < s.K(); ++k) {
        const double gamma = s.config.sinr(l, k);
        if (gamma <= 0.0)
            continue;
        const CVec& h = s.irs_cu[l][k];
        auto lift = [&](const CMat& X) {
            const CMat A = h.conjugate().asDiagonal() * (G * X * G.adjoint()) * h.asDiagonal();
            return CMat(0.5 * (A + A.adjoint()));
        };
        const CMat& W = tx.info[l][k];
        LiftedSinr c;
        c.k = k;
        c.gamma = gamma;
        c.signal = lift(W);
        c.interference = lift(rx == Receiver::TypeI ? CMat(Rx - W) : CMat(all_info - W));
        out.push_back(std::move(c));
    }
    return out;
}

double irs_sinr_margin(const Scenario& s, int l, const TransmitSolution& tx, Receiver rx, const CVec& phi)
{
    double m = kInf;
    for (int k = 0; k < s.K(); ++k) {
        const double g = s.config.sinr(l, k);
        if (g > 0.0)
            m = std::min(m, sinr(rx, s, l, k, tx, phi) / g);
    }
    return m;
}

ReflectResult solve_point_reflect(const Scenario& s, int l, const TransmitSolution& tx, Receiver rx,
                                  double assumed_theta, const CVec& incumbent, Rng& rng, const ReflectOptions& opts)
{
    check_index(s, l, tx, incumbent);
    const int N = s.N(), Ns = s.Ns();
    const double noise = s.config.comm_noise_power;
    const CMat Rx = tx.total_covariance();
    const SensingDerived d = sensing_derived(s, l, Rx, assumed_theta);
    const double pref = point_prefactor(s, l, assumed_theta);
    const double c1 = (Ns - 1.0) * Ns * (Ns + 1.0) / 12.0;
    const auto cons = lifted_sinr(s, l, tx, rx);

    auto score = [&](const CVec& phi) {
        const double den = point_denominator(point_forms(d.U, d.d_n, phi), Ns);
        return den > 0.0 ? pref / den : kInf;
    };
    auto feasible = [&](const CVec& phi) { return min_ratio(cons, noise, phi) >= 1.0 - opts.sinr_tol; };

    ReflectResult res;
    if (N == 1) {
        res.phases = CVec::Ones(1);
        res.lifted = CMat::Ones(1, 1);
        res.diag.score = score(res.phases);
        return res;
    }

    double den0 = point_denominator(point_forms(d.U, d.d_n, incumbent), Ns);
    if (!(den0 > 0.0))
        den0 = c1 * d.U.trace().real();
    if (!(den0 > 0.0))
        throw ParameterError("transmit covariance illuminates nothing at this IRS");
    const CMat U = d.U / den0;
    const RVec dn = d.d_n;
    const CMat UD = U * dn.asDiagonal();
    const CMat DUD = dn.asDiagonal() * U * dn.asDiagonal();

    conic::Problem prob;
    const conic::HermVar theta = unit_diagonal(prob, N);
    const conic::LinExpr sv = prob.trace_product(U, theta).real();
    const conic::LinExpr vv = prob.trace_product(DUD, theta).real();
    const conic::CLinExpr uv = prob.trace_product(UD, theta);
    const conic::ScalarVar tau = prob.scalar("tau");
    conic::MatExpr lmi(2);
    lmi(0, 0) = sv;
    lmi(0, 1) = std::sqrt(double(Ns)) * uv;
    lmi(1, 0) = std::sqrt(double(Ns)) * uv.conj();
    lmi(1, 1) = prob.value(tau);
    prob.add_psd(lmi);
    for (const auto& c : cons)
        prob.add_nonneg((1.0 / (c.gamma * noise)) * prob.trace_product(c.signal, theta).real() -
                        (1.0 / noise) * prob.trace_product(c.interference, theta).real() - 1.0);
    prob.maximize(c1 * sv + double(Ns) * vv - prob.value(tau));

    const conic::Solution sol = conic::solve(prob, opts.tolerances);
    res.diag.status = sol.status;
    if (sol.status == conic::Status::Infeasible)
        irs_infeasible(s, l, tx, cons);
    if (!usable(sol, opts.tolerances))
        throw SolverError("reflection program not solved (" + conic::to_string(sol.status) + ")");
    pick(res, sol.value(theta), score, feasible, incumbent, rng, opts);
    return res;
}

ReflectResult solve_extended_reflect(const Scenario& s, int l, const TransmitSolution& tx, Receiver rx,
                                     const CVec& incumbent, Rng& rng, const ReflectOptions& opts)
{
    check_index(s, l, tx, incumbent);
    const int N = s.N();
    const double noise = s.config.comm_noise_power;
    const auto cons = lifted_sinr(s, l, tx, rx);

    ReflectResult res;
    res.lifted = incumbent.conjugate() * incumbent.transpose();
    if (cons.empty() || N == 1) {
        res.phases = N == 1 ? CVec::Ones(1) : incumbent;
        res.diag.score = min_ratio(cons, noise, res.phases);
        return res;
    }

    // Co-phasing bound: pc^H S pc <= (sum_n sqrt(S_nn))^2 for unit-modulus pc.
    double hi = 0.0;
    for (const auto& c : cons) {
        double root = 0.0;
        for (int n = 0; n < N; ++n)
            root += std::sqrt(std::max(c.signal(n, n).real(), 0.0));
        hi = std::max(hi, root * root / (noise * c.gamma));
    }
    double lo = 0.0;
    res.diag.bracket_high = hi;
    if (!(hi > 0.0))
        throw ParameterError("degenerate channel: no user of this IRS can receive any signal");

    auto attempt = [&](double w, CMat& theta_out) {
        conic::Problem prob;
        const conic::HermVar theta = unit_diagonal(prob, N);
        const conic::ScalarVar t = prob.scalar("t");
        const double scale = 1.0 / (1.0 + w);
        for (const auto& c : cons)
            prob.add_nonneg(scale * ((1.0 / (c.gamma * noise)) * prob.trace_product(c.signal, theta).real() -
                                     (w / noise) * prob.trace_product(c.interference, theta).real() - w) -
                            prob.value(t));
        prob.add_nonneg(1.0 - prob.value(t));
        prob.maximize(prob.value(t));
        const conic::Solution sol = conic::solve(prob, opts.tolerances);
        if (!usable(sol, opts.tolerances) || sol.value(t) < 0.0)
            return false;
        theta_out = sol.value(theta);
        return true;
    };

    CMat best_theta = res.lifted;
    const int steps = static_cast<int>(std::ceil(std::log2((hi - lo) / opts.bisection_eps)));
    for (int i = 0; i < std::max(steps, 0); ++i) {
        const double mid = 0.5 * (lo + hi);
        CMat th;
        if (attempt(mid, th)) {
            lo = mid;
            best_theta = th;
        } else {
            hi = mid;
        }
        ++res.diag.bisection_steps;
    }
    res.diag.bracket_low = lo;
    res.diag.bracket_high = hi;

    auto score = [&](const CVec& phi) { return -min_ratio(cons, noise, phi); };
    auto feasible = [&](const CVec& phi) { return min_ratio(cons, noise, phi) >= 1.0 - opts.sinr_tol; };
    pick(res, best_theta, score, feasible, incumbent, rng, opts);
    res.diag.score = -res.diag.score;
    return res;
}

}  // namespace isac
