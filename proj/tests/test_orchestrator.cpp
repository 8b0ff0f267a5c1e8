#include "doctest.h"
#include "helpers.hpp"

#include "isac/crb.hpp"
#include "isac/orchestrator.hpp"
#include "isac/rxbf.hpp"
#include "isac/txbf.hpp"

using namespace isac;
using namespace testing_util;

namespace {

Scenario small(std::uint64_t seed, double gamma, int M = 4, int N = 4, int L = 2, int K = 2)
{
    Scenario s = random_scenario(M, N, 4, L, K, seed);
    s.config.max_power = 10.0;
    s.config.comm_noise_power = 1.0;
    s.config.sense_noise_power = 1.0;
    s.config.sinr_threshold = gamma;
    return s;
}

void check_trajectory(const Trajectory& t, const Scenario& s)
{
    REQUIRE_FALSE(t.iterations.empty());
    for (std::size_t i = 1; i < t.iterations.size(); ++i)
        CHECK(t.iterations[i].max_crb <= t.iterations[i - 1].max_crb * (1.0 + 1e-8));
    for (const Iterate& it : t.iterations) {
        CHECK(it.min_sinr >= 1.0 - 1e-6);
        CHECK(it.power <= s.config.max_power * (1.0 + 1e-6));
    }
}

}  // namespace

TEST_CASE("trajectories are monotone and feasible on random scenarios")
{
    for (Variant v : {Variant::P1_I, Variant::P1_II, Variant::P4_I, Variant::P4_II}) {
        int ran = 0;
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            const Scenario s = small(seed, 1.0 + 0.1 * double(seed % 5));
            OrchestratorOptions o;
            o.seed = seed;
            o.max_iters = 8;
            o.reflect.draws = 200;
            const Trajectory t = optimize(v, s, o);
            if (t.stop == StopReason::Infeasible)
                continue;
            INFO(to_string(v) << " seed " << seed << " " << t.message);
            ++ran;
            check_trajectory(t, s);
            CHECK(t.final_crb() == t.iterations.back().max_crb);
        }
        CHECK(ran >= 15);
    }
}

TEST_CASE("infinite tolerance gives exactly one pass")
{
    const Scenario s = small(3, 1.0);
    OrchestratorOptions o;
    o.seed = 3;
    o.tol_conv = std::numeric_limits<double>::infinity();
    for (Variant v : {Variant::P1_I, Variant::P4_II}) {
        const Trajectory t = optimize(v, s, o);
        CHECK(t.iterations.size() == 1);
        CHECK(t.converged);
        CHECK(t.stop == StopReason::Tolerance);
    }
}

TEST_CASE("extended-target reflect steps leave the CRB unchanged")
{
    const Scenario s = small(5, 1.5);
    OrchestratorOptions o;
    o.seed = 5;
    const std::vector<CVec> init = initial_phases(s, 5);
    for (Variant v : {Variant::P4_I, Variant::P4_II}) {
        const Trajectory t = optimize(v, s, o);
        REQUIRE_FALSE(t.iterations.empty());
        const CMat Rx = t.tx.total_covariance();
        for (int l = 0; l < s.L(); ++l) {
            const double a = extended_crb(s, l, Rx);
            const ReflectSolution before{init, {}};
            const CrbReport r0 = crb_report(s, t.tx, before, TargetModel::Extended);
            const CrbReport r1 = crb_report(s, t.tx, t.reflect, TargetModel::Extended);
            CHECK(std::abs(r0.per_irs[l] - r1.per_irs[l]) <= 1e-9 * a);
        }
    }
}

TEST_CASE("zero-forcing directions null the cross interference")
{
    const Scenario s = small(7, 1.0, 6, 4, 2, 2);
    Rng rng(8);
    ReflectSolution r;
    for (int l = 0; l < 2; ++l)
        r.phases.push_back(random_phases(4, rng));
    const auto dirs = zf_directions(s, r);
    for (int l = 0; l < 2; ++l)
        for (int k = 0; k < 2; ++k) {
            const CVec h = effective_channel(s, l, k, r.phases[l]);
            for (int lp = 0; lp < 2; ++lp)
                for (int kp = 0; kp < 2; ++kp) {
                    CHECK(std::abs(dirs[lp][kp].norm() - 1.0) < 1e-12);
                    const double c = std::abs(h.dot(dirs[lp][kp])) / h.norm();
                    if (lp == l && kp == k)
                        CHECK(c > 1e-3);
                    else
                        CHECK(c <= 1e-8);
                }
        }

    // square case: the columns of H^-H
    const Scenario q = small(9, 1.0, 4, 4, 2, 2);
    ReflectSolution rq;
    for (int l = 0; l < 2; ++l)
        rq.phases.push_back(random_phases(4, rng));
    CMat H(4, 4);
    for (int l = 0; l < 2; ++l)
        for (int k = 0; k < 2; ++k)
            H.col(2 * l + k) = effective_channel(q, l, k, rq.phases[l]);
    const CMat inv = H.adjoint().inverse();
    const auto dq = zf_directions(q, rq);
    for (int l = 0; l < 2; ++l)
        for (int k = 0; k < 2; ++k) {
            const CVec ref = inv.col(2 * l + k).normalized();
            CHECK(std::abs(std::abs(ref.dot(dq[l][k])) - 1.0) < 1e-9);
        }

    CHECK_THROWS_AS(zf_directions(small(10, 1.0, 3, 4, 2, 2), r), ParameterError);
}

TEST_CASE("zero-forcing trajectories keep the beams orthogonal to other users")
{
    const Scenario s = small(11, 1.0, 6, 4, 2, 2);
    OrchestratorOptions o;
    o.seed = 11;
    o.reflect.draws = 200;
    const Trajectory t = benchmark_zf(Variant::P1_I, s, o);
    check_trajectory(t, s);
    for (int l = 0; l < 2; ++l)
        for (int k = 0; k < 2; ++k) {
            const CVec h = effective_channel(s, l, k, t.reflect.phases[l]);
            const double own = (h.adjoint() * t.tx.info[l][k] * h).real()(0);
            for (int lp = 0; lp < 2; ++lp)
                for (int kp = 0; kp < 2; ++kp)
                    if (lp != l || kp != k)
                        CHECK((h.adjoint() * t.tx.info[lp][kp] * h).real()(0) <= 1e-8 * own);
        }
}

TEST_CASE("runs are deterministic in the seed")
{
    const Scenario s = small(13, 1.2);
    OrchestratorOptions o;
    o.seed = 13;
    o.reflect.draws = 100;
    const Trajectory a = optimize(Variant::P1_II, s, o);
    const Trajectory b = optimize(Variant::P1_II, s, o);
    REQUIRE(a.iterations.size() == b.iterations.size());
    for (std::size_t i = 0; i < a.iterations.size(); ++i)
        CHECK(a.iterations[i].max_crb == b.iterations[i].max_crb);
    for (int l = 0; l < s.L(); ++l)
        CHECK(a.reflect.phases[l] == b.reflect.phases[l]);
    o.seed = 14;
    CHECK(initial_phases(s, 13)[0] != initial_phases(s, 14)[0]);
}

TEST_CASE("tx-only regression values on the default topology")
{
    const double golden[3] = {1.0307019635254607e-06, 2.2836949501126053e-06, 1.3746069289795609e-06};
    for (int seed = 1; seed <= 3; ++seed) {
        SystemConfig cfg;
        cfg.rng_seed = seed;
        const Scenario s = build_scenario(cfg);
        OrchestratorOptions o;
        o.seed = seed;
        const Trajectory t = benchmark_tx_only(Variant::P1_I, s, o);
        REQUIRE(t.iterations.size() == 1);
        CHECK(rel_diff(t.final_crb(), golden[seed - 1]) < 1e-6);
        CHECK(t.iterations[0].power <= cfg.max_power * (1.0 + 1e-6));
    }
}

TEST_CASE("sensing-only equals the proposed scheme without SINR constraints")
{
    Scenario s = small(15, 2.0);
    OrchestratorOptions o;
    o.seed = 15;
    o.reflect.draws = 100;
    const Trajectory a = benchmark_sensing_only(Variant::P1_I, s, o);
    s.config.sinr_threshold = 0.0;
    const Trajectory b = optimize(Variant::P1_I, s, o);
    REQUIRE(a.iterations.size() == b.iterations.size());
    CHECK(rel_diff(a.final_crb(), b.final_crb()) < 1e-12);
}

TEST_CASE("scheme ordering on small scenarios")
{
    for (std::uint64_t seed : {21u, 22u}) {
        const Scenario s = small(seed, 2.0, 4, 4, 2, 1);
        OrchestratorOptions o;
        o.seed = seed;
        o.reflect.draws = 200;
        for (TargetModel m : {TargetModel::Point, TargetModel::Extended}) {
            const SchemeSet r = compare_schemes(m, s, o);
            const double tol = 1.0 + 1e-6;
            INFO("seed " << seed << " " << to_string(m));
            CHECK(r.sensing_only.final_crb() <= r.proposed_ii.final_crb() * tol);
            CHECK(r.proposed_ii.final_crb() <= r.proposed_i.final_crb() * tol);
            CHECK(r.proposed_i.final_crb() <= r.zf.final_crb() * tol);
            CHECK(r.proposed_i.final_crb() <= r.tx_only.final_crb() * tol);
            CHECK(std::isfinite(r.tx_only.final_crb()));
        }
    }
}

TEST_CASE("infeasible first solve yields an infeasible trajectory")
{
    const Scenario s = small(17, 1e4);
    const Trajectory t = optimize(Variant::P1_I, s, {});
    CHECK(t.stop == StopReason::Infeasible);
    CHECK(t.iterations.empty());
    CHECK_FALSE(t.binding.empty());
    CHECK(std::isinf(t.final_crb()));
}

TEST_CASE("names round-trip")
{
    for (Variant v : {Variant::P1_I, Variant::P1_II, Variant::P4_I, Variant::P4_II})
        CHECK(variant_from_string(to_string(v)) == v);
    for (Scheme sc : {Scheme::Proposed, Scheme::TxOnly, Scheme::ZeroForcing, Scheme::SensingOnly})
        CHECK(scheme_from_string(to_string(sc)) == sc);
    CHECK_THROWS_AS(variant_from_string("P2-I"), ParameterError);
}
