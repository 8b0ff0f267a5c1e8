#include "isac/experiment.hpp"

namespace isac {

Scenario make_scenario(const ExperimentConfig& c, std::uint64_t seed)
{
    SystemConfig cfg = c.system;
    cfg.rng_seed = seed;
    return build_scenario(cfg, c.topology);
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& c, std::uint64_t seed)
{
    std::vector<SweepRow> rows;
    for (double x : c.sweep.values) {
        ExperimentConfig point = c;
        if (c.sweep.axis == "power") {
            point.system.max_power = x;
        } else {
            point.system.sinr_threshold = db_to_linear(x);
            point.system.sinr_per_user.clear();
        }
        point.system.validate();
        rows.push_back({x, compare_schemes(c.sweep.model, make_scenario(point, seed), point.orchestrator(seed))});
    }
    return rows;
}

ValidateReport run_validate(const ExperimentConfig& c, std::uint64_t seed)
{
    Scenario s = make_scenario(c, seed);
    s.config.sinr_threshold = 0.0;
    s.config.sinr_per_user.clear();
    const int l = c.validate.irs;
    const OrchestratorOptions o = c.orchestrator(seed);
    const std::vector<CVec> phases = initial_phases(s, seed);

    auto design = [&](Variant v) {
        const Trajectory t = benchmark_tx_only(v, s, o);
        if (t.iterations.empty())
            throw SolverError("sensing design failed: " + t.message);
        return t.tx;
    };

    ValidateReport r;
    const TransmitSolution point_tx = design(Variant::P1_I);
    Scenario scaled = s;
    const double crb0 = point_crb(s, l, point_tx.total_covariance(), phases[l]);
    if (!std::isfinite(crb0))
        throw ParameterError("the point-target bound is infinite for this design");
    const double std_rad = c.validate.target_std_deg * kPi / 180.0;
    scaled.config.sense_noise_power *= std_rad * std_rad / crb0;
    r.mle_crb = point_crb(scaled, l, point_tx.total_covariance(), phases[l]);
    Rng rm = Rng::stream(seed, "validate_mle");
    r.mle = mle_point(scaled, l, point_tx, phases[l], c.validate.trials, rm);

    const TransmitSolution ext_tx = design(Variant::P4_I);
    r.ls_crb = extended_crb(s, l, ext_tx.total_covariance());
    Rng rl = Rng::stream(seed, "validate_ls");
    r.ls = ls_extended(s, l, ext_tx, phases[l], c.validate.trials, rl);
    return r;
}

}  // namespace isac
