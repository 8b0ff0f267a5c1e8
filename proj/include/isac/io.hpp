#pragma once

#include "isac/crb.hpp"
#include "isac/orchestrator.hpp"
#include "isac/validate.hpp"

#include <nlohmann/json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace isac {

struct SweepSpec {
    TargetModel model = TargetModel::Point;
    std::string axis = "power";  // "power" (watts) or "sinr_db"
    std::vector<double> values{10.0, 20.0, 30.0, 40.0};
};

struct ValidateSpec {
    int irs = 0;
    int trials = 2000;
    double target_std_deg = 0.1;  // the point-target bound is set to this by scaling sigma_s^2
};

/// Everything a run needs besides the seed.
struct ExperimentConfig {
    SystemConfig system;
    Topology topology = Topology::fig2();
    Variant variant = Variant::P1_II;
    double tol_conv = 1e-3;
    int max_iters = 30;
    int draws = 1000;
    double bisection_eps = 1e-3;
    SweepSpec sweep;
    ValidateSpec validate;

    OrchestratorOptions orchestrator(std::uint64_t seed) const;
};

nlohmann::json config_to_json(const ExperimentConfig& c);
/// Missing keys keep their defaults; unknown keys raise ParameterError.
ExperimentConfig config_from_json(const nlohmann::json& j);

/// Applies `key=value` to a config document. `key` is a dotted path
/// ("system.max_power") or a leaf name that is unique in the document
/// ("max_power"). The value is parsed as JSON, falling back to a string.
void apply_override(nlohmann::json& doc, const std::string& key, const std::string& value);

nlohmann::json solution_to_json(const TransmitSolution& tx, const ReflectSolution& reflect);
void solution_from_json(const nlohmann::json& j, TransmitSolution& tx, ReflectSolution& reflect);

nlohmann::json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

/// CSV with a leading "#schema=<name>/<version>" line; numbers as %.17g.
class CsvTable {
public:
    CsvTable(std::string schema, std::vector<std::string> header);

    CsvTable& add(const std::string& v);
    CsvTable& add(double v);
    CsvTable& add(long long v);
    CsvTable& add(int v) { return add(static_cast<long long>(v)); }
    void end_row();

    std::string str() const;

private:
    std::string schema_;
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
    std::vector<std::string> row_;
};

std::string format_double(double v);

CsvTable trajectory_csv(const Trajectory& t);
CsvTable crb_csv(const CrbReport& r, const std::string& variant, int iteration);

struct SweepRow {
    double x = 0.0;
    SchemeSet schemes;
};
CsvTable sweep_csv(const SweepSpec& spec, const std::vector<SweepRow>& rows);

struct ValidateReport {
    MleResult mle;
    double mle_crb = 0.0;
    LsResult ls;
    double ls_crb = 0.0;
};
CsvTable validate_csv(const ValidateSpec& spec, const ValidateReport& r);

}  // namespace isac
