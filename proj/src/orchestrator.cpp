#include "isac/orchestrator.hpp"

#include <cmath>
#include <limits>

namespace isac {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Iterate evaluate(const Scenario& s, TargetModel model, Receiver rx, const TransmitSolution& tx,
                 const ReflectSolution& reflect, int index)
{
    const CrbReport rep = crb_report(s, tx, reflect, model);
    Iterate it;
    it.index = index;
    it.max_crb = rep.max_crb;
    it.per_irs = rep.per_irs;
    it.min_sinr = kInf;
    for (int l = 0; l < s.L(); ++l)
        for (int k = 0; k < s.K(); ++k)
            it.min_sinr = std::min(it.min_sinr, sinr(rx, s, l, k, tx, reflect.phases[l]));
    it.power = tx.power();
    return it;
}

// Relative improvement that ends the loop; NaN (inf - inf) also ends it.
bool small_improvement(double prev, double cur, double tol)
{
    const double rel = (prev - cur) / prev;
    return std::isinf(tol) || !(rel >= tol);
}

Trajectory alternate(Variant v, Scheme scheme, const Scenario& s, const OrchestratorOptions& opts)
{
    const TargetModel model = target_model(v);
    const Receiver rx = receiver(v);
    const bool zf = scheme == Scheme::ZeroForcing;
    const std::vector<double> theta = opts.assumed_theta.empty() ? s.target_doa : opts.assumed_theta;
    if (model == TargetModel::Extended && s.M() < s.N())
        throw ParameterError("extended-target variants need M >= N");

    Trajectory traj;
    traj.variant = v;
    traj.scheme = scheme;
    ReflectSolution reflect;
    reflect.phases = opts.initial_phases.empty() ? initial_phases(s, opts.seed) : opts.initial_phases;
    reflect.lifted.assign(s.L(), CMat());

    auto solve_tx = [&](const ReflectSolution& r) {
        TxOptions to = opts.tx;
        if (zf)
            to.directions = zf_directions(s, r);
        return model == TargetModel::Point ? solve_point_tx(s, r, rx, theta, to) : solve_extended_tx(s, r, rx, to);
    };
    auto fail = [&](StopReason why, const std::string& msg) {
        traj.stop = why;
        traj.message = msg;
        traj.converged = false;
    };

    TransmitSolution tx;
    try {
        tx = solve_tx(reflect).solution;
    } catch (const InfeasibleError& e) {
        fail(StopReason::Infeasible, e.what());
        traj.binding = e.binding();
        traj.reflect = reflect;
        return traj;
    } catch (const Error& e) {
        fail(StopReason::SolverFailure, e.what());
        traj.reflect = reflect;
        return traj;
    }
    traj.tx = tx;
    traj.reflect = reflect;

    // Returns the phases to try with a re-solved transmitter when some IRS found
    // no candidate feasible for the current beams (empty otherwise).
    auto reflect_step = [&](int iter) {
        std::vector<CVec> proposal;
        for (int l = 0; l < s.L(); ++l) {
            Rng rng = Rng::stream(opts.seed, "reflect", {iter, l});
            try {
                const ReflectResult r =
                    model == TargetModel::Point
                        ? solve_point_reflect(s, l, tx, rx, theta[l], reflect.phases[l], rng, opts.reflect)
                        : solve_extended_reflect(s, l, tx, rx, reflect.phases[l], rng, opts.reflect);
                if (r.proposal.size() > 0) {
                    if (proposal.empty())
                        proposal = reflect.phases;
                    proposal[l] = r.proposal;
                }
                reflect.phases[l] = r.phases;
                reflect.lifted[l] = r.lifted;
                if (!proposal.empty() && r.proposal.size() == 0)
                    proposal[l] = r.phases;
            } catch (const Error& e) {
                traj.message = e.what();  // keep the incumbent phases of this IRS
            }
        }
        return proposal;
    };
    auto finish = [&](StopReason why) {
        traj.converged = why == StopReason::Tolerance;
        traj.stop = why;
        return traj;
    };

    if (zf) {
        // Beams are tied to the phases, so every recorded iterate is a fresh
        // transmit solve; a worse solve ends the run at the last consistent pair.
        traj.iterations.push_back(evaluate(s, model, rx, tx, reflect, 1));
        double prev = traj.iterations.back().max_crb;
        for (int iter = 2; iter <= opts.max_iters; ++iter) {
            reflect_step(iter - 1);
            Iterate cand;
            TransmitSolution next;
            try {
                next = solve_tx(reflect).solution;
                cand = evaluate(s, model, rx, next, reflect, iter);
            } catch (const Error& e) {
                traj.message = e.what();
                return finish(StopReason::Tolerance);
            }
            if (!(cand.max_crb <= prev))
                return finish(StopReason::Tolerance);
            tx = next;
            traj.tx = tx;
            traj.reflect = reflect;
            traj.iterations.push_back(cand);
            if (small_improvement(prev, cand.max_crb, opts.tol_conv))
                return finish(StopReason::Tolerance);
            prev = cand.max_crb;
        }
        return finish(opts.max_iters <= 1 ? StopReason::Tolerance : StopReason::MaxIterations);
    }

    double prev = evaluate(s, model, rx, tx, reflect, 0).max_crb;
    bool tx_current = true;  // tx already solved for the current phases
    for (int iter = 1; iter <= opts.max_iters; ++iter) {
        bool guard = false;
        if (!tx_current) {
            try {
                const TransmitSolution next = solve_tx(reflect).solution;
                if (evaluate(s, model, rx, next, reflect, iter).max_crb <= prev)
                    tx = next;
                else
                    guard = true;
            } catch (const Error& e) {
                fail(StopReason::SolverFailure, e.what());
                return traj;
            }
        }
        const std::vector<CVec> proposal = reflect_step(iter);
        tx_current = false;
        Iterate it = evaluate(s, model, rx, tx, reflect, iter);
        if (!proposal.empty()) {
            // accepted only when the re-solved pair beats the feasible update
            ReflectSolution alt = reflect;
            alt.phases = proposal;
            try {
                const TransmitSolution alt_tx = solve_tx(alt).solution;
                const Iterate alt_it = evaluate(s, model, rx, alt_tx, alt, iter);
                if (alt_it.max_crb < it.max_crb) {
                    tx = alt_tx;
                    reflect = alt;
                    it = alt_it;
                    tx_current = true;
                }
            } catch (const Error&) {
            }
        }
        it.tx_guard = guard;
        traj.tx = tx;
        traj.reflect = reflect;
        traj.iterations.push_back(it);
        // The first pass has nothing to compare with: for extended targets the
        // reflect step only buys SINR headroom, which pays off in the next pass.
        if ((iter > 1 || std::isinf(opts.tol_conv)) && small_improvement(prev, it.max_crb, opts.tol_conv))
            return finish(StopReason::Tolerance);
        prev = it.max_crb;
    }
    traj.stop = StopReason::MaxIterations;
    return traj;
}

}  // namespace

std::string to_string(Variant v)
{
    switch (v) {
    case Variant::P1_I: return "P1-I";
    case Variant::P1_II: return "P1-II";
    case Variant::P4_I: return "P4-I";
    case Variant::P4_II: return "P4-II";
    }
    return "?";
}

std::string to_string(Scheme s)
{
    switch (s) {
    case Scheme::Proposed: return "proposed";
    case Scheme::TxOnly: return "tx_only";
    case Scheme::ZeroForcing: return "zf";
    case Scheme::SensingOnly: return "sensing_only";
    }
    return "?";
}

std::string to_string(StopReason r)
{
    switch (r) {
    case StopReason::Tolerance: return "tolerance";
    case StopReason::MaxIterations: return "max_iters";
    case StopReason::Infeasible: return "infeasible";
    case StopReason::SolverFailure: return "solver_failure";
    }
    return "?";
}

Variant variant_from_string(const std::string& s)
{
    for (Variant v : {Variant::P1_I, Variant::P1_II, Variant::P4_I, Variant::P4_II})
        if (to_string(v) == s)
            return v;
    throw ParameterError("unknown variant '" + s + "' (expected P1-I, P1-II, P4-I or P4-II)");
}

Scheme scheme_from_string(const std::string& s)
{
    for (Scheme c : {Scheme::Proposed, Scheme::TxOnly, Scheme::ZeroForcing, Scheme::SensingOnly})
        if (to_string(c) == s)
            return c;
    throw ParameterError("unknown scheme '" + s + "'");
}

TargetModel target_model(Variant v)
{
    return v == Variant::P1_I || v == Variant::P1_II ? TargetModel::Point : TargetModel::Extended;
}

Receiver receiver(Variant v) { return v == Variant::P1_I || v == Variant::P4_I ? Receiver::TypeI : Receiver::TypeII; }

std::string Trajectory::tag() const { return to_string(scheme) + ":" + to_string(variant); }

double Trajectory::final_crb() const { return iterations.empty() ? kInf : iterations.back().max_crb; }

std::vector<CVec> initial_phases(const Scenario& s, std::uint64_t seed)
{
    std::vector<CVec> out;
    for (int l = 0; l < s.L(); ++l) {
        Rng rng = Rng::stream(seed, "init_phases", {l});
        CVec p(s.N());
        for (int n = 0; n < s.N(); ++n)
            p(n) = std::polar(1.0, rng.uniform(0.0, 2.0 * kPi));
        out.push_back(p);
    }
    return out;
}

std::vector<std::vector<CVec>> zf_directions(const Scenario& s, const ReflectSolution& reflect)
{
    const int U = s.L() * s.K();
    if (U > s.M())
        throw ParameterError("zero-forcing needs at most M users");
    CMat H(s.M(), U);
    for (int l = 0; l < s.L(); ++l)
        for (int k = 0; k < s.K(); ++k)
            H.col(l * s.K() + k) = effective_channel(s, l, k, reflect.phases[l]);
    Eigen::JacobiSVD<CMat> svd(H);
    const RVec sv = svd.singularValues();
    if (!(sv(U - 1) > 1e-10 * sv(0)))
        throw ParameterError("zero-forcing needs linearly independent user channels");
    const CMat Z = H * (H.adjoint() * H).inverse();
    std::vector<std::vector<CVec>> out(s.L());
    for (int l = 0; l < s.L(); ++l)
        for (int k = 0; k < s.K(); ++k)
            out[l].push_back(Z.col(l * s.K() + k).normalized());
    return out;
}

Trajectory optimize(Variant v, const Scenario& s, const OrchestratorOptions& opts)
{
    return alternate(v, Scheme::Proposed, s, opts);
}

Trajectory benchmark_tx_only(Variant v, const Scenario& s, const OrchestratorOptions& opts)
{
    OrchestratorOptions o = opts;
    o.max_iters = 1;
    o.tol_conv = kInf;
    Trajectory traj;
    traj.variant = v;
    traj.scheme = Scheme::TxOnly;
    ReflectSolution reflect;
    reflect.phases = opts.initial_phases.empty() ? initial_phases(s, opts.seed) : opts.initial_phases;
    reflect.lifted.assign(s.L(), CMat());
    const std::vector<double> theta = opts.assumed_theta.empty() ? s.target_doa : opts.assumed_theta;
    traj.reflect = reflect;
    try {
        traj.tx = target_model(v) == TargetModel::Point ? solve_point_tx(s, reflect, receiver(v), theta, opts.tx).solution
                                                        : solve_extended_tx(s, reflect, receiver(v), opts.tx).solution;
    } catch (const InfeasibleError& e) {
        traj.stop = StopReason::Infeasible;
        traj.message = e.what();
        traj.binding = e.binding();
        return traj;
    } catch (const Error& e) {
        traj.stop = StopReason::SolverFailure;
        traj.message = e.what();
        return traj;
    }
    traj.iterations.push_back(evaluate(s, target_model(v), receiver(v), traj.tx, reflect, 1));
    traj.converged = true;
    traj.stop = StopReason::Tolerance;
    return traj;
}

Trajectory benchmark_zf(Variant v, const Scenario& s, const OrchestratorOptions& opts)
{
    return alternate(v, Scheme::ZeroForcing, s, opts);
}

Trajectory benchmark_sensing_only(Variant v, const Scenario& s, const OrchestratorOptions& opts)
{
    Scenario open = s;
    open.config.sinr_threshold = 0.0;
    open.config.sinr_per_user.clear();
    Trajectory t = alternate(v, Scheme::SensingOnly, open, opts);
    return t;
}

Trajectory run_scheme(Scheme scheme, Variant v, const Scenario& s, const OrchestratorOptions& opts)
{
    switch (scheme) {
    case Scheme::Proposed: return optimize(v, s, opts);
    case Scheme::TxOnly: return benchmark_tx_only(v, s, opts);
    case Scheme::ZeroForcing: return benchmark_zf(v, s, opts);
    case Scheme::SensingOnly: return benchmark_sensing_only(v, s, opts);
    }
    throw ParameterError("unknown scheme");
}

SchemeSet compare_schemes(TargetModel model, const Scenario& s, const OrchestratorOptions& opts)
{
    const bool point = model == TargetModel::Point;
    const Variant vi = point ? Variant::P1_I : Variant::P4_I;
    const Variant vii = point ? Variant::P1_II : Variant::P4_II;

    auto best_of = [&](Scheme scheme, Variant v, const Trajectory& from) {
        Trajectory seeded = run_scheme(scheme, v, s, opts);
        if (from.iterations.empty())
            return seeded;
        OrchestratorOptions warm = opts;
        warm.initial_phases = from.reflect.phases;
        Trajectory chained = run_scheme(scheme, v, s, warm);
        return chained.final_crb() < seeded.final_crb() ? chained : seeded;
    };

    SchemeSet out;
    out.tx_only = benchmark_tx_only(vi, s, opts);
    out.zf = benchmark_zf(vi, s, opts);
    out.proposed_i = best_of(Scheme::Proposed, vi, out.zf);
    out.proposed_ii = best_of(Scheme::Proposed, vii, out.proposed_i);
    out.sensing_only = best_of(Scheme::SensingOnly, vii, out.proposed_ii);
    return out;
}

}  // namespace isac
