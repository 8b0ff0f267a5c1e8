#include "isac/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace isac {

using json = nlohmann::json;

namespace {

constexpr int kConfigVersion = 1;
constexpr int kSolutionVersion = 1;

TargetModel model_from_string(const std::string& s)
{
    if (s == to_string(TargetModel::Point))
        return TargetModel::Point;
    if (s == to_string(TargetModel::Extended))
        return TargetModel::Extended;
    throw ParameterError("unknown target model '" + s + "' (expected point or extended)");
}

// Reports keys of `j` that do not occur in `known`, recursing into objects.
void check_keys(const json& j, const json& known, const std::string& prefix)
{
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto k = known.find(it.key());
        if (k == known.end())
            throw ParameterError("unknown config key '" + prefix + it.key() + "'");
        if (it->is_object() && k->is_object())
            check_keys(*it, *k, prefix + it.key() + ".");
    }
}

void collect_leaves(const json& j, const std::string& prefix, const std::string& leaf, std::vector<std::string>& out)
{
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (it.key() == leaf)
            out.push_back(path);
        if (it->is_object())
            collect_leaves(*it, path, leaf, out);
    }
}

}  // namespace

OrchestratorOptions ExperimentConfig::orchestrator(std::uint64_t seed) const
{
    OrchestratorOptions o;
    o.seed = seed;
    o.tol_conv = tol_conv;
    o.max_iters = max_iters;
    o.reflect.draws = draws;
    o.reflect.bisection_eps = bisection_eps;
    return o;
}

json config_to_json(const ExperimentConfig& c)
{
    return json{{"schema", "isac-config"},
                {"version", kConfigVersion},
                {"system", c.system},
                {"topology", c.topology},
                {"variant", to_string(c.variant)},
                {"orchestrator",
                 {{"tol_conv", c.tol_conv},
                  {"max_iters", c.max_iters},
                  {"draws", c.draws},
                  {"bisection_eps", c.bisection_eps}}},
                {"sweep", {{"model", to_string(c.sweep.model)}, {"axis", c.sweep.axis}, {"values", c.sweep.values}}},
                {"validate",
                 {{"irs", c.validate.irs},
                  {"trials", c.validate.trials},
                  {"target_std_deg", c.validate.target_std_deg}}}};
}

ExperimentConfig config_from_json(const json& j)
{
    if (!j.is_object())
        throw ParameterError("config must be a JSON object");
    ExperimentConfig c;
    check_keys(j, config_to_json(c), "");
    if (j.contains("schema") && j.at("schema") != "isac-config")
        throw ParameterError("not a config file (schema tag)");
    if (j.value("version", kConfigVersion) != kConfigVersion)
        throw ParameterError("unsupported config version");
    try {
        if (j.contains("system"))
            j.at("system").get_to(c.system);
        if (j.contains("topology"))
            j.at("topology").get_to(c.topology);
        if (j.contains("variant"))
            c.variant = variant_from_string(j.at("variant").get<std::string>());
        if (auto o = j.find("orchestrator"); o != j.end()) {
            c.tol_conv = o->value("tol_conv", c.tol_conv);
            c.max_iters = o->value("max_iters", c.max_iters);
            c.draws = o->value("draws", c.draws);
            c.bisection_eps = o->value("bisection_eps", c.bisection_eps);
        }
        if (auto s = j.find("sweep"); s != j.end()) {
            if (s->contains("model"))
                c.sweep.model = model_from_string(s->at("model").get<std::string>());
            c.sweep.axis = s->value("axis", c.sweep.axis);
            if (s->contains("values"))
                c.sweep.values = s->at("values").get<std::vector<double>>();
        }
        if (auto v = j.find("validate"); v != j.end()) {
            c.validate.irs = v->value("irs", c.validate.irs);
            c.validate.trials = v->value("trials", c.validate.trials);
            c.validate.target_std_deg = v->value("target_std_deg", c.validate.target_std_deg);
        }
    } catch (const json::exception& e) {
        throw ParameterError(std::string("bad config value: ") + e.what());
    }
    if (c.sweep.axis != "power" && c.sweep.axis != "sinr_db")
        throw ParameterError("sweep.axis must be power or sinr_db");
    if (c.sweep.values.empty())
        throw ParameterError("sweep.values is empty");
    if (!(c.tol_conv > 0.0) || c.max_iters < 1 || c.draws < 1 || !(c.bisection_eps > 0.0))
        throw ParameterError("orchestrator options out of range");
    if (c.validate.trials < 100 || !(c.validate.target_std_deg > 0.0))
        throw ParameterError("validate options out of range");
    c.system.validate();
    c.topology.check_against(c.system);
    if (c.validate.irs < 0 || c.validate.irs >= c.system.num_irs)
        throw ParameterError("validate.irs out of range");
    return c;
}

void apply_override(json& doc, const std::string& key, const std::string& value)
{
    std::string path = key;
    if (key.find('.') == std::string::npos) {
        std::vector<std::string> hits;
        collect_leaves(doc, "", key, hits);
        if (hits.empty())
            throw ParameterError("unknown option --" + key);
        if (hits.size() > 1)
            throw ParameterError("ambiguous option --" + key + "; use the dotted path");
        path = hits.front();
    }
    json::json_pointer ptr("/" + [&] {
        std::string p = path;
        for (auto& ch : p)
            if (ch == '.')
                ch = '/';
        return p;
    }());
    if (!doc.contains(ptr))
        throw ParameterError("unknown option --" + key);
    json parsed = json::parse(value, nullptr, false);
    if (parsed.is_discarded())
        parsed = value;
    doc[ptr] = parsed;
}

json solution_to_json(const TransmitSolution& tx, const ReflectSolution& reflect)
{
    json info = json::array(), beams = json::array(), phases = json::array();
    for (const auto& row : tx.info) {
        json r = json::array();
        for (const auto& W : row)
            r.push_back(matrix_to_json(W));
        info.push_back(std::move(r));
    }
    for (const auto& row : tx.beams) {
        json r = json::array();
        for (const auto& w : row)
            r.push_back(vector_to_json(w));
        beams.push_back(std::move(r));
    }
    for (const auto& p : reflect.phases)
        phases.push_back(vector_to_json(p));
    return json{{"schema", "isac-solution"},
                {"version", kSolutionVersion},
                {"info", info},
                {"sense", matrix_to_json(tx.sense)},
                {"beams", beams},
                {"phases", phases}};
}

void solution_from_json(const json& j, TransmitSolution& tx, ReflectSolution& reflect)
{
    if (j.value("schema", "") != "isac-solution")
        throw ParameterError("not a solution file (schema tag missing)");
    if (j.value("version", 0) != kSolutionVersion)
        throw ParameterError("unsupported solution schema version");
    tx = {};
    reflect = {};
    for (const auto& row : j.at("info")) {
        std::vector<CMat> r;
        for (const auto& W : row)
            r.push_back(matrix_from_json(W));
        tx.info.push_back(std::move(r));
    }
    tx.sense = matrix_from_json(j.at("sense"));
    for (const auto& row : j.at("beams")) {
        std::vector<CVec> r;
        for (const auto& w : row)
            r.push_back(vector_from_json(w));
        tx.beams.push_back(std::move(r));
    }
    for (const auto& p : j.at("phases"))
        reflect.phases.push_back(vector_from_json(p));
}

json read_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ParameterError("cannot open " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded())
        throw ParameterError(path + " is not valid JSON");
    return j;
}

void write_text_file(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ParameterError("cannot write " + path);
    out << text;
}

std::string format_double(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CsvTable::CsvTable(std::string schema, std::vector<std::string> header)
    : schema_(std::move(schema)), header_(std::move(header))
{
}

CsvTable& CsvTable::add(const std::string& v)
{
    row_.push_back(v);
    return *this;
}

CsvTable& CsvTable::add(double v)
{
    row_.push_back(format_double(v));
    return *this;
}

CsvTable& CsvTable::add(long long v)
{
    row_.push_back(std::to_string(v));
    return *this;
}

void CsvTable::end_row()
{
    if (row_.size() != header_.size())
        throw ParameterError("CSV row has " + std::to_string(row_.size()) + " fields, header has " +
                             std::to_string(header_.size()));
    rows_.push_back(std::move(row_));
    row_.clear();
}

std::string CsvTable::str() const
{
    std::ostringstream os;
    os << "#schema=" << schema_ << '\n';
    auto line = [&os](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i)
            os << (i ? "," : "") << fields[i];
        os << '\n';
    };
    line(header_);
    for (const auto& r : rows_)
        line(r);
    return os.str();
}

CsvTable trajectory_csv(const Trajectory& t)
{
    CsvTable csv("isac-trajectory/1",
                 {"scheme", "variant", "iteration", "irs", "crb", "max_crb", "min_sinr", "power", "tx_guard", "stop"});
    for (const Iterate& it : t.iterations)
        for (std::size_t l = 0; l < it.per_irs.size(); ++l) {
            csv.add(to_string(t.scheme)).add(to_string(t.variant)).add(it.index).add(static_cast<int>(l));
            csv.add(it.per_irs[l]).add(it.max_crb).add(it.min_sinr).add(it.power).add(it.tx_guard ? 1 : 0);
            csv.add(to_string(t.stop)).end_row();
        }
    return csv;
}

CsvTable crb_csv(const CrbReport& r, const std::string& variant, int iteration)
{
    CsvTable csv("isac-crb/1", {"variant", "irs", "crb", "max_crb", "iteration"});
    for (std::size_t l = 0; l < r.per_irs.size(); ++l)
        csv.add(variant).add(static_cast<int>(l)).add(r.per_irs[l]).add(r.max_crb).add(iteration).end_row();
    return csv;
}

CsvTable sweep_csv(const SweepSpec& spec, const std::vector<SweepRow>& rows)
{
    CsvTable csv("isac-sweep/1", {"model", "axis", "x", "scheme", "variant", "max_crb", "iterations", "stop"});
    for (const SweepRow& r : rows) {
        for (const Trajectory* t : {&r.schemes.sensing_only, &r.schemes.proposed_ii, &r.schemes.proposed_i,
                                    &r.schemes.zf, &r.schemes.tx_only}) {
            csv.add(to_string(spec.model)).add(spec.axis).add(r.x).add(to_string(t->scheme));
            csv.add(to_string(t->variant)).add(t->final_crb()).add(static_cast<int>(t->iterations.size()));
            csv.add(to_string(t->stop)).end_row();
        }
    }
    return csv;
}

CsvTable validate_csv(const ValidateSpec& spec, const ValidateReport& r)
{
    CsvTable csv("isac-validate/1", {"oracle", "irs", "trials", "estimate", "crb", "se", "ratio", "bias", "boundary_hits"});
    csv.add("mle_point").add(spec.irs).add(r.mle.trials).add(r.mle.mse).add(r.mle_crb).add(r.mle.mse_se);
    csv.add(r.mle.mse / r.mle_crb).add(r.mle.mean_bias).add(r.mle.boundary_hits).end_row();
    csv.add("ls_extended").add(spec.irs).add(r.ls.trials).add(r.ls.error_trace).add(r.ls_crb).add(r.ls.se);
    csv.add(r.ls.error_trace / r.ls_crb).add(0.0).add(0).end_row();
    return csv;
}

}  // namespace isac
