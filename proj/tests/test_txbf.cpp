#include "helpers.hpp"

#include "isac/crb.hpp"
#include "isac/txbf.hpp"

#include "doctest.h"

using namespace isac;
using namespace testing_util;

namespace {

ReflectSolution random_reflect(const Scenario& s, Rng& rng)
{
    ReflectSolution r;
    for (int l = 0; l < s.L(); ++l)
        r.phases.push_back(random_phases(s.N(), rng));
    return r;
}

Scenario small(std::uint64_t seed, double gamma, int M = 4, int N = 4, int L = 2, int K = 2)
{
    Scenario s = random_scenario(M, N, 4, L, K, seed);
    s.config.max_power = 1.0;
    s.config.comm_noise_power = 1.0;
    s.config.sense_noise_power = 1.0;
    s.config.sinr_threshold = gamma;
    return s;
}

bool psd(const CMat& m, double tol) { return min_eigenvalue(m) >= -tol * std::max(1.0, m.norm()); }

}  // namespace

TEST_CASE("sinr follows the receiver definitions")
{
    Scenario s = small(3, 1.0);
    Rng rng(4);
    ReflectSolution r = random_reflect(s, rng);
    TransmitSolution tx;
    tx.info.assign(2, std::vector<CMat>(2));
    for (auto& row : tx.info)
        for (auto& W : row)
            W = random_psd(4, rng, 1, 0.2);
    tx.sense = random_psd(4, rng, 4, 0.2);

    const CVec h = effective_channel(s, 1, 0, r.phases[1]);
    const CVec direct = s.bs_irs[1].adjoint() * r.phases[1].conjugate().asDiagonal() * s.irs_cu[1][0];
    CHECK((h - direct).norm() < 1e-12);

    auto q = [&](const CMat& W) { return h.dot(W * h).real(); };
    double interf = 1.0;
    for (int l = 0; l < 2; ++l)
        for (int k = 0; k < 2; ++k)
            if (l != 1 || k != 0)
                interf += q(tx.info[l][k]);
    CHECK(sinr(Receiver::TypeII, s, 1, 0, tx, r.phases[1]) == doctest::Approx(q(tx.info[1][0]) / interf));
    CHECK(sinr(Receiver::TypeI, s, 1, 0, tx, r.phases[1]) ==
          doctest::Approx(q(tx.info[1][0]) / (interf + q(tx.sense))));
}

TEST_CASE("rank-one extraction keeps the served power and stays below W")
{
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const CMat W = random_psd(5, rng, 1 + trial % 5, 1.0 + trial);
        const CVec h = rng.cn_vector(5);
        const CVec w = rank_one_extract(W, h);
        CHECK(std::abs(h.dot(w * w.adjoint() * h).real() - h.dot(W * h).real()) < 1e-9 * (1.0 + trial));
        CHECK(psd(W - w * w.adjoint(), 1e-9));
    }
    CMat W = CMat::Zero(3, 3);
    W(0, 0) = 1.0;
    CVec h = CVec::Zero(3);
    h(1) = 1.0;
    CHECK_THROWS_AS(rank_one_extract(W, h), ExtractionError);
}

TEST_CASE("point design meets every constraint and reports its own CRB")
{
    const Scenario s = build_scenario(SystemConfig{});
    ReflectSolution r;
    Rng rng(5);
    r = random_reflect(s, rng);
    const TxResult res = solve_point_tx(s, r, Receiver::TypeI, s.target_doa);
    const auto& tx = res.solution;
    CHECK(sinr_margin(Receiver::TypeI, s, tx, r) >= 1.0 - 1e-6);
    CHECK(tx.power() <= s.config.max_power * (1.0 + 1e-7));
    CHECK(psd(tx.sense, 1e-7));
    const CrbReport rep = crb_report(s, tx, r, TargetModel::Point);
    CHECK(rel_diff(rep.max_crb, res.design_objective) < 1e-5);
    // extraction leaves R_x untouched
    CHECK((tx.total_covariance() - res.relaxed.total_covariance()).norm() <
          1e-9 * res.relaxed.total_covariance().norm());
    for (int l = 0; l < s.L(); ++l)
        for (int k = 0; k < s.K(); ++k)
            CHECK(tx.beams[l][k].norm() > 0.0);
}

TEST_CASE("without SINR constraints the point design beats random covariances")
{
    const Scenario s = small(21, 0.0);
    Rng rng(22);
    const ReflectSolution r = random_reflect(s, rng);
    const TxResult res = solve_point_tx(s, r, Receiver::TypeI, s.target_doa);
    const double opt = crb_report(s, res.solution, r, TargetModel::Point).max_crb;
    CHECK(rel_diff(opt, res.design_objective) < 1e-6);
    int worse = 0;
    for (int i = 0; i < 200; ++i) {
        const CMat Rx = random_psd(4, rng, 1 + i % 4, 1.0);
        const double c = crb_report(s, Rx, r.phases, TargetModel::Point).max_crb;
        if (c < opt * (1.0 - 1e-6))
            ++worse;
    }
    CHECK(worse == 0);
}

TEST_CASE("extended design reaches the isotropic optimum when G is the identity")
{
    Scenario s = small(31, 0.0, 4, 4, 1, 1);
    s.bs_irs[0] = CMat::Identity(4, 4);
    s.config.max_power = 2.5;
    s.config.sense_noise_power = 0.3;
    Rng rng(32);
    const ReflectSolution r = random_reflect(s, rng);
    const TxResult res = solve_extended_tx(s, r, Receiver::TypeI);
    const double expected = 4 * 0.3 * 16.0 / (s.config.dwell_symbols * 2.5);
    CHECK(rel_diff(res.design_objective, expected) < 1e-6);
    CHECK((res.solution.total_covariance() - 2.5 / 4 * CMat::Identity(4, 4)).norm() < 1e-5);
    CHECK(rel_diff(extended_crb(s, 0, res.solution.total_covariance()), expected) < 1e-6);
}

TEST_CASE("extended design needs at least as many antennas as elements")
{
    const Scenario s = small(41, 0.5, 3, 4, 1, 1);
    Rng rng(42);
    CHECK_THROWS_AS(solve_extended_tx(s, random_reflect(s, rng), Receiver::TypeI), ParameterError);
}

TEST_CASE("unattainable thresholds raise InfeasibleError with the binding users")
{
    Scenario s = small(51, 1e4);
    Rng rng(52);
    const ReflectSolution r = random_reflect(s, rng);
    try {
        solve_point_tx(s, r, Receiver::TypeI, s.target_doa);
        FAIL("expected InfeasibleError");
    } catch (const InfeasibleError& e) {
        CHECK(!e.binding().empty());
        for (const auto& u : e.binding()) {
            const double probe = effective_channel(s, u.l, u.k, r.phases[u.l]).squaredNorm();
            CHECK(u.standalone_sinr == doctest::Approx(probe));
        }
    }
    CHECK_THROWS_AS(solve_extended_tx(s, r, Receiver::TypeII), InfeasibleError);
}

TEST_CASE("receiver type, power and beam restrictions order the optima")
{
    Scenario s = small(61, 2.0);
    s.config.max_power = 10.0;
    Rng rng(62);
    const ReflectSolution r = random_reflect(s, rng);
    const double t1 = solve_point_tx(s, r, Receiver::TypeI, s.target_doa).design_objective;
    const double t2 = solve_point_tx(s, r, Receiver::TypeII, s.target_doa).design_objective;
    CHECK(t2 <= t1 * (1.0 + 1e-6));

    double prev = t1;
    for (double p : {15.0, 30.0, 60.0}) {
        s.config.max_power = p;
        const double v = solve_point_tx(s, r, Receiver::TypeI, s.target_doa).design_objective;
        CHECK(v <= prev * (1.0 + 1e-6));
        prev = v;
    }
    s.config.max_power = 10.0;

    // zero-forcing directions restrict the search
    TxOptions zf;
    zf.directions.emplace();
    CMat H(4, 4);
    for (int l = 0; l < 2; ++l)
        for (int k = 0; k < 2; ++k)
            H.col(2 * l + k) = effective_channel(s, l, k, r.phases[l]);
    const CMat Z = H * (H.adjoint() * H).inverse();
    for (int l = 0; l < 2; ++l) {
        zf.directions->emplace_back();
        for (int k = 0; k < 2; ++k)
            zf.directions->back().push_back(Z.col(2 * l + k).normalized());
    }
    const TxResult zr = solve_point_tx(s, r, Receiver::TypeI, s.target_doa, zf);
    CHECK(zr.design_objective >= t1 * (1.0 - 1e-6));
    CHECK(sinr_margin(Receiver::TypeI, s, zr.solution, r) >= 1.0 - 1e-6);
}

TEST_CASE("extracted beams keep the relaxed bound and the SINR constraints")
{
    Scenario s = small(71, 3.0, 5, 4, 2, 2);
    s.config.max_power = 10.0;
    Rng rng(72);
    const ReflectSolution r = random_reflect(s, rng);
    for (Receiver rx : {Receiver::TypeI, Receiver::TypeII}) {
        const TxResult res = solve_extended_tx(s, r, rx);
        const double relaxed = crb_report(s, res.relaxed, r, TargetModel::Extended).max_crb;
        const double extracted = crb_report(s, res.solution, r, TargetModel::Extended).max_crb;
        CHECK(rel_diff(relaxed, extracted) < 1e-8);
        CHECK(rel_diff(extracted, res.design_objective) < 1e-5);
        CHECK(sinr_margin(rx, s, res.solution, r) >= 1.0 - 1e-6);
        for (int l = 0; l < 2; ++l)
            for (int k = 0; k < 2; ++k) {
                const CMat& W = res.solution.info[l][k];
                CHECK(W.norm() > 0.0);
                // rank one by construction
                CHECK((W - res.solution.beams[l][k] * res.solution.beams[l][k].adjoint()).norm() < 1e-12 * W.norm());
            }
    }
}
