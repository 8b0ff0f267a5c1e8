#pragma once

#include "isac/scenario.hpp"

#include <random>

namespace testing_util {

using namespace isac;

// Scenario with i.i.d. channels of controlled scale; bypasses geometry.
inline Scenario random_scenario(int M, int N, int Ns, int L, int K, std::uint64_t seed, double g_scale = 1.0,
                                double h_scale = 1.0)
{
    SystemConfig cfg;
    cfg.num_bs_antennas = M;
    cfg.num_irs_elements = N;
    cfg.num_irs_sensors = Ns;
    cfg.num_irs = L;
    cfg.users_per_irs = K;
    cfg.rng_seed = seed;
    Rng rng(seed * 7919 + 13);
    Scenario s;
    s.config = cfg;
    s.topology = Topology::fig2();
    for (int l = 0; l < L; ++l) {
        s.bs_irs.push_back(g_scale * rng.cn_matrix(N, M));
        std::vector<CVec> users;
        for (int k = 0; k < K; ++k)
            users.push_back(h_scale * rng.cn_vector(N));
        s.irs_cu.push_back(users);
        s.target_doa.push_back(rng.uniform(-1.1, 1.1));
        s.target_coeff.push_back(std::polar(rng.uniform(0.5, 2.0) * 1e-6, rng.uniform(0.0, 6.283)));
        s.extended_response.push_back(1e-6 * rng.cn_matrix(Ns, N));
    }
    return s;
}

inline CMat random_psd(int M, Rng& rng, int rank = -1, double trace = 1.0)
{
    if (rank < 0)
        rank = M;
    const CMat A = rng.cn_matrix(M, rank);
    CMat R = A * A.adjoint();
    R *= trace / R.trace().real();
    return 0.5 * (R + R.adjoint());
}

inline CVec random_phases(int N, Rng& rng)
{
    CVec p(N);
    for (int n = 0; n < N; ++n)
        p(n) = std::polar(1.0, rng.uniform(0.0, 2.0 * kPi));
    return p;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

}  // namespace testing_util
