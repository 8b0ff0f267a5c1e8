#include "isac/cli.hpp"

#include "isac/experiment.hpp"

#include "CLI11.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

#ifndef ISAC_CONFIG_DIR
#define ISAC_CONFIG_DIR "configs"
#endif

namespace isac {

namespace {

using json = nlohmann::json;

class UsageError : public Error {
public:
    using Error::Error;
};

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
};

std::string resolve_config(const std::string& name)
{
    namespace fs = std::filesystem;
    if (fs::is_regular_file(name))
        return name;
    std::vector<std::string> dirs;
    if (const char* env = std::getenv("ISAC_CONFIG_DIR"))
        dirs.emplace_back(env);
    dirs.emplace_back(ISAC_CONFIG_DIR);
    for (const auto& d : dirs) {
        const fs::path p = fs::path(d) / (name + ".json");
        if (fs::is_regular_file(p))
            return p.string();
    }
    throw UsageError("config '" + name + "' not found");
}

// Defaults, then the config file, then --key=value overrides.
ExperimentConfig load_config(const Common& c, const std::vector<std::string>& extras)
{
    json doc = config_to_json(ExperimentConfig{});
    if (!c.config.empty())
        doc.merge_patch(read_json_file(resolve_config(c.config)));
    for (const auto& e : extras) {
        const auto eq = e.find('=');
        if (e.rfind("--", 0) != 0 || eq == std::string::npos || eq == 2)
            throw UsageError("unexpected argument '" + e + "'");
        try {
            apply_override(doc, e.substr(2, eq - 2), e.substr(eq + 1));
        } catch (const ParameterError& p) {
            throw UsageError(p.what());
        }
    }
    return config_from_json(doc);
}

std::uint64_t need_seed(const Common& c)
{
    if (!c.seed)
        throw UsageError("--seed is required");
    return *c.seed;
}

void emit(const Common& c, const std::string& text, std::ostream& out)
{
    if (c.out.empty())
        out << text;
    else
        write_text_file(c.out, text);
}

void add_common(CLI::App* sub, Common& c, bool run)
{
    sub->add_option("--config", c.config, "config file or shipped recipe name");
    if (run)
        sub->add_option("--seed", c.seed, "random seed (required)");
    sub->add_option("--out", c.out, "output file (default: stdout)");
    sub->allow_extras();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Joint transmit and reflective beamforming for multi-IRS ISAC", "isacbf"};
    app.require_subcommand(1);

    Common c;
    std::string variant, scheme = "proposed", scenario_path, solution_path, solution_out;

    auto* opt = app.add_subcommand("optimize", "run one scheme and write its trajectory");
    add_common(opt, c, true);
    opt->add_option("--variant", variant, "P1-I, P1-II, P4-I or P4-II");
    opt->add_option("--scheme", scheme, "proposed, tx_only, zf or sensing_only");
    opt->add_option("--scenario", scenario_path, "scenario file (default: generated from the config)");
    opt->add_option("--solution-out", solution_out, "also write the final solution");

    auto* sweep = app.add_subcommand("sweep", "compare all schemes over a power or SINR grid");
    add_common(sweep, c, true);

    auto* val = app.add_subcommand("validate", "Monte-Carlo estimation oracles");
    add_common(val, c, true);

    auto* crb = app.add_subcommand("crb", "evaluate the CRBs of a saved solution");
    add_common(crb, c, false);
    crb->add_option("--scenario", scenario_path, "scenario file")->required();
    crb->add_option("--solution", solution_path, "solution file")->required();
    crb->add_option("--variant", variant, "P1-* for the point target, P4-* for the extended target");

    auto* scen = app.add_subcommand("scenario", "generate a scenario file, or re-emit a checked one");
    add_common(scen, c, true);
    scen->add_option("--scenario", scenario_path, "existing scenario file to check and re-emit");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n" << app.help();
        return kExitUsage;
    }

    try {
        if (opt->parsed()) {
            const ExperimentConfig cfg = load_config(c, opt->remaining());
            const std::uint64_t seed = need_seed(c);
            const Variant v = variant.empty() ? cfg.variant : variant_from_string(variant);
            const Scheme sc = scheme_from_string(scheme);
            const Scenario s = scenario_path.empty() ? make_scenario(cfg, seed) : load_scenario(scenario_path);
            const Trajectory t = run_scheme(sc, v, s, cfg.orchestrator(seed));
            emit(c, trajectory_csv(t).str(), out);
            if (!solution_out.empty() && !t.iterations.empty())
                write_text_file(solution_out, solution_to_json(t.tx, t.reflect).dump(1) + "\n");
            if (t.stop == StopReason::Infeasible) {
                err << "infeasible: " << t.message << "\n";
                for (const auto& u : t.binding)
                    err << "  user (" << u.l << "," << u.k << ") standalone SINR " << format_double(u.standalone_sinr)
                        << "\n";
                return kExitInfeasible;
            }
            if (t.stop == StopReason::SolverFailure) {
                err << "solver failure: " << t.message << "\n";
                return t.iterations.empty() ? kExitSolver : kExitOk;
            }
            return kExitOk;
        }
        if (sweep->parsed()) {
            const ExperimentConfig cfg = load_config(c, sweep->remaining());
            const std::uint64_t seed = need_seed(c);
            emit(c, sweep_csv(cfg.sweep, run_sweep(cfg, seed)).str(), out);
            return kExitOk;
        }
        if (val->parsed()) {
            const ExperimentConfig cfg = load_config(c, val->remaining());
            const std::uint64_t seed = need_seed(c);
            emit(c, validate_csv(cfg.validate, run_validate(cfg, seed)).str(), out);
            return kExitOk;
        }
        if (crb->parsed()) {
            const ExperimentConfig cfg = load_config(c, crb->remaining());
            const Variant v = variant.empty() ? cfg.variant : variant_from_string(variant);
            const Scenario s = load_scenario(scenario_path);
            TransmitSolution tx;
            ReflectSolution reflect;
            solution_from_json(read_json_file(solution_path), tx, reflect);
            const CrbReport r = crb_report(s, tx, reflect, target_model(v));
            emit(c, crb_csv(r, to_string(v), 0).str(), out);
            return kExitOk;
        }
        if (scen->parsed()) {
            const ExperimentConfig cfg = load_config(c, scen->remaining());
            Scenario s;
            if (scenario_path.empty()) {
                s = make_scenario(cfg, need_seed(c));
            } else {
                s = load_scenario(scenario_path);
                s.validate();
            }
            emit(c, scenario_to_json(s).dump(1) + "\n", out);
            return kExitOk;
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const InfeasibleError& e) {
        err << "infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const SolverError& e) {
        err << "solver failure: " << e.what() << "\n";
        return kExitSolver;
    } catch (const ExtractionError& e) {
        err << "solver failure: " << e.what() << "\n";
        return kExitSolver;
    } catch (const ParameterError& e) {
        err << "invalid input: " << e.what() << "\n";
        return kExitUsage;
    } catch (const GeometryError& e) {
        err << "invalid input: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitUsage;
}

}  // namespace isac
