#pragma once

#include "isac/crb.hpp"
#include "isac/rxbf.hpp"
#include "isac/txbf.hpp"

#include <optional>
#include <string>
#include <vector>

namespace isac {

/// P1: point target, P4: extended target; suffix is the receiver type.
enum class Variant { P1_I, P1_II, P4_I, P4_II };
enum class Scheme { Proposed, TxOnly, ZeroForcing, SensingOnly };
enum class StopReason { Tolerance, MaxIterations, Infeasible, SolverFailure };

std::string to_string(Variant v);
std::string to_string(Scheme s);
std::string to_string(StopReason r);
Variant variant_from_string(const std::string& s);
Scheme scheme_from_string(const std::string& s);

TargetModel target_model(Variant v);
Receiver receiver(Variant v);

struct OrchestratorOptions {
    double tol_conv = 1e-3;
    int max_iters = 30;
    std::uint64_t seed = 0;
    /// Design angles; the true DoAs when empty.
    std::vector<double> assumed_theta;
    /// Starting phases; seeded uniform random phases when empty.
    std::vector<CVec> initial_phases;
    TxOptions tx;
    ReflectOptions reflect;
};

struct Iterate {
    int index = 0;
    double max_crb = 0.0;  // at the true DoAs
    std::vector<double> per_irs;
    double min_sinr = 0.0;  // over users with a positive threshold
    double power = 0.0;
    bool tx_guard = false;  // the new transmit solution was worse and was discarded
};

struct Trajectory {
    Variant variant = Variant::P1_I;
    Scheme scheme = Scheme::Proposed;
    std::vector<Iterate> iterations;
    TransmitSolution tx;
    ReflectSolution reflect;
    bool converged = false;
    StopReason stop = StopReason::MaxIterations;
    std::string message;
    std::vector<InfeasibleError::User> binding;

    std::string tag() const;
    double final_crb() const;  // +inf when nothing feasible was found
};

/// Seeded uniform phases, one vector per IRS.
std::vector<CVec> initial_phases(const Scenario& s, std::uint64_t seed);

/// Normalized columns of H (H^H H)^-1 with H = [h~_{1,1}, ..., h~_{L,K}].
/// Needs L K <= M and a full-column-rank H.
std::vector<std::vector<CVec>> zf_directions(const Scenario& s, const ReflectSolution& reflect);

Trajectory optimize(Variant v, const Scenario& s, const OrchestratorOptions& opts = {});
Trajectory benchmark_tx_only(Variant v, const Scenario& s, const OrchestratorOptions& opts = {});
Trajectory benchmark_zf(Variant v, const Scenario& s, const OrchestratorOptions& opts = {});
Trajectory benchmark_sensing_only(Variant v, const Scenario& s, const OrchestratorOptions& opts = {});

Trajectory run_scheme(Scheme scheme, Variant v, const Scenario& s, const OrchestratorOptions& opts = {});

/// All schemes for one target model. Benchmarks use the Type-I receiver.
struct SchemeSet {
    Trajectory sensing_only, proposed_ii, proposed_i, zf, tx_only;
};

/// Runs every scheme. Each proposed and sensing-only run is repeated from the
/// final phases of the scheme below it in the chain ZF -> I -> II -> sensing-only,
/// whose solution stays feasible there; the better of the two runs is kept.
SchemeSet compare_schemes(TargetModel model, const Scenario& s, const OrchestratorOptions& opts = {});

}  // namespace isac
