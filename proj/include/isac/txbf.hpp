#pragma once

#include "isac/conic.hpp"
#include "isac/scenario.hpp"
#include "isac/solution.hpp"

#include <optional>
#include <vector>

namespace isac {

/// h~_{l,k} = G_l^H Phi_l^H h_{l,k}, so that h~^H x is the signal the user receives.
CVec effective_channel(const Scenario& s, int l, int k, const CVec& phi);

/// Received SINR; Type-I counts h~^H R_0 h~ as interference, Type-II does not.
double sinr(Receiver rx, const Scenario& s, int l, int k, const TransmitSolution& tx, const CVec& phi);

/// Smallest SINR over all users with a positive threshold, divided by that threshold
/// (>= 1 means every constraint holds). +inf when no user has a threshold.
double sinr_margin(Receiver rx, const Scenario& s, const TransmitSolution& tx, const ReflectSolution& reflect);

/// w = (h^H W h)^(-1/2) W h. Throws ExtractionError(-1, -1) when h^H W h <= tol * |h|^2 tr(W).
CVec rank_one_extract(const CMat& W, const CVec& h, double tol = 1e-12);

/// Replaces every W_{l,k} by w w^H and moves the remainder into R_0, keeping R_x.
TransmitSolution extract_rank_one(const Scenario& s, const ReflectSolution& reflect, const TransmitSolution& relaxed,
                                  double tol = 1e-12);

struct TxOptions {
    conic::Tolerances tolerances;
    double unserved_tol = 1e-12;
    /// Fixed unit-norm beam directions per user (zero-forcing benchmark); the
    /// program then allocates one power per user instead of a full covariance.
    std::optional<std::vector<std::vector<CVec>>> directions;
};

struct TxResult {
    TransmitSolution solution;  // after rank-one extraction
    TransmitSolution relaxed;   // as returned by the conic program
    double design_objective = 0.0;  // max CRB implied by the program's optimum (design angles)
    conic::Stats stats;
};

TxResult solve_point_tx(const Scenario& s, const ReflectSolution& reflect, Receiver rx,
                        const std::vector<double>& assumed_theta, const TxOptions& opts = {});

/// Requires M >= N.
TxResult solve_extended_tx(const Scenario& s, const ReflectSolution& reflect, Receiver rx, const TxOptions& opts = {});

}  // namespace isac
