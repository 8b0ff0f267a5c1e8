#pragma once

#include "isac/scenario.hpp"
#include "isac/solution.hpp"

namespace isac {

struct MleOptions {
    double grid_step_deg = 0.05;
    double search_lo_deg = -89.0;
    double search_hi_deg = 89.0;
    double refine_tol = 1e-10;  // golden-section bracket width, rad
};

struct MleResult {
    double mse = 0.0;        // rad^2
    double mean_bias = 0.0;  // rad
    double mse_se = 0.0;     // standard error of mse
    int trials = 0;
    int boundary_hits = 0;   // grid maximum at an end of the search range (kept in mse)
};

/// Monte-Carlo ML estimation of the DoA at IRS l. Each trial draws a waveform
/// whose sample covariance is tx.total_covariance(), adds noise of power
/// sigma_s^2, and maximizes the likelihood with beta concentrated out: a grid
/// search followed by golden-section refinement around the best grid point.
MleResult mle_point(const Scenario& s, int l, const TransmitSolution& tx, const CVec& phi, int trials, Rng& rng,
                    const MleOptions& opts = {});

struct LsResult {
    double error_trace = 0.0;  // mean ||E_hat - E||_F^2
    double se = 0.0;
    int trials = 0;
};

/// Monte-Carlo least-squares estimation of the extended response of IRS l.
LsResult ls_extended(const Scenario& s, int l, const TransmitSolution& tx, const CVec& phi, int trials, Rng& rng);

}  // namespace isac
