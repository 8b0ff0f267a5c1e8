#pragma once

#include "isac/conic.hpp"
#include "isac/scenario.hpp"
#include "isac/solution.hpp"

#include <functional>

namespace isac {

/// Raised by gaussian_randomize when no candidate passes the feasibility test.
class NoFeasibleCandidate : public Error {
public:
    using Error::Error;
};

/// Candidates exp(-j arg(Theta^(1/2) r)) for `draws` standard complex Gaussian r,
/// plus the top-eigenvector candidate. Every candidate is rotated so that its
/// first entry is 1. Returns the feasible candidate with the smallest score.
CVec gaussian_randomize(const CMat& theta, int draws, const std::function<double(const CVec&)>& score,
                        const std::function<bool(const CVec&)>& feasible, Rng& rng, int* feasible_count = nullptr);

struct ReflectOptions {
    conic::Tolerances tolerances;
    int draws = 1000;
    double bisection_eps = 1e-3;
    double sinr_tol = 1e-6;     // relative slack accepted on SINR >= Gamma
    double rank_one_ratio = 1e-8;
};

struct ReflectDiagnostics {
    conic::Status status = conic::Status::Optimal;
    double rank_ratio = 0.0;   // lambda_2 / lambda_1 of the lifted solution
    int feasible_candidates = 0;
    double score = 0.0;        // design CRB (point) or min SINR / Gamma (extended)
    bool fallback_used = false;  // no feasible candidate; incumbent returned
    bool incumbent_kept = false;  // incumbent returned (fallback or better score)
    bool randomized = false;
    int bisection_steps = 0;
    double bracket_low = 0.0;
    double bracket_high = 0.0;
};

struct ReflectResult {
    CVec phases;
    /// Best-scoring candidate ignoring the SINR test; set only when no candidate
    /// was feasible. Usable after the transmitter is re-solved for it.
    CVec proposal;
    CMat lifted;
    ReflectDiagnostics diag;
};

/// SINR constraints of the users served through IRS l, as quadratic forms in
/// Theta = phi* phi^T: signal tr(S Theta), interference tr(I Theta).
struct LiftedSinr {
    int k = 0;
    double gamma = 0.0;
    CMat signal;
    CMat interference;
};
std::vector<LiftedSinr> lifted_sinr(const Scenario& s, int l, const TransmitSolution& tx, Receiver rx);

/// Smallest SINR_k / Gamma_k over users of IRS l with Gamma_k > 0 (+inf if none).
double irs_sinr_margin(const Scenario& s, int l, const TransmitSolution& tx, Receiver rx, const CVec& phi);

/// Point target: minimizes the design CRB of IRS l over its phases. `incumbent`
/// must satisfy the SINR constraints; it is returned (fallback_used) when no
/// randomized candidate is feasible.
ReflectResult solve_point_reflect(const Scenario& s, int l, const TransmitSolution& tx, Receiver rx,
                                  double assumed_theta, const CVec& incumbent, Rng& rng,
                                  const ReflectOptions& opts = {});

/// Extended target: the CRB does not depend on the phases, so IRS l maximizes
/// the smallest SINR / Gamma of its users by bisection.
ReflectResult solve_extended_reflect(const Scenario& s, int l, const TransmitSolution& tx, Receiver rx,
                                     const CVec& incumbent, Rng& rng, const ReflectOptions& opts = {});

}  // namespace isac
