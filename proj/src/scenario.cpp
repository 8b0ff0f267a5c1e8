#include "isac/scenario.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace isac {

using nlohmann::json;

namespace {

constexpr double kMaxDoa = 89.0 * kPi / 180.0;

double distance(Vec2 a, Vec2 b) { return std::hypot(b.x - a.x, b.y - a.y); }

void require(bool ok, const std::string& what)
{
    if (!ok)
        throw ParameterError(what);
}

}  // namespace

double SystemConfig::sinr(int l, int k) const
{
    if (sinr_per_user.empty())
        return sinr_threshold;
    return sinr_per_user.at(static_cast<std::size_t>(l * users_per_irs + k));
}

void SystemConfig::validate() const
{
    require(num_bs_antennas >= 1 && num_irs_elements >= 1 && num_irs_sensors >= 1 && num_irs >= 1 &&
                users_per_irs >= 1 && dwell_symbols >= 1,
            "SystemConfig: all dimensions must be >= 1");
    require(wavelength > 0 && reflect_spacing > 0 && sensor_spacing > 0 && bs_spacing > 0,
            "SystemConfig: wavelength and spacings must be > 0");
    require(comm_noise_power > 0 && sense_noise_power > 0, "SystemConfig: noise powers must be > 0");
    require(max_power > 0, "SystemConfig: max_power must be > 0");
    require(sinr_threshold >= 0, "SystemConfig: sinr_threshold must be >= 0");
    require(sinr_per_user.empty() || static_cast<int>(sinr_per_user.size()) == num_users(),
            "SystemConfig: sinr_per_user must have L*K entries");
    for (double g : sinr_per_user)
        require(g >= 0, "SystemConfig: per-user SINR thresholds must be >= 0");
    require(rician_kappa >= 0, "SystemConfig: rician_kappa must be >= 0");
    require(target_rcs > 0, "SystemConfig: target_rcs must be > 0");
}

Topology Topology::fig2()
{
    Topology t;
    t.bs_position = {0.0, 0.0};
    t.bs_broadside = {0.0, 1.0};
    t.irs_positions = {{-30.0, 30.0}, {30.0, 30.0}};
    t.irs_broadside = {{0.0, -1.0}, {0.0, -1.0}};
    t.cu_positions = {{{-40.0, 25.0}, {-30.0, 25.0}}, {{30.0, 25.0}, {40.0, 25.0}}};
    t.target_positions = {{-35.0, 22.0}, {35.0, 27.0}};
    return t;
}

void Topology::check_against(const SystemConfig& cfg) const
{
    const auto L = static_cast<std::size_t>(cfg.num_irs);
    require(irs_positions.size() == L, "Topology: expected " + std::to_string(L) + " IRS positions");
    require(irs_broadside.size() == L, "Topology: expected " + std::to_string(L) + " IRS orientations");
    require(target_positions.size() == L, "Topology: expected " + std::to_string(L) + " targets");
    require(cu_positions.size() == L, "Topology: expected user positions for every IRS");
    for (const auto& users : cu_positions)
        require(users.size() == static_cast<std::size_t>(cfg.users_per_irs),
                "Topology: expected " + std::to_string(cfg.users_per_irs) + " users per IRS");
}

void Scenario::validate() const
{
    config.validate();
    const auto L = static_cast<std::size_t>(config.num_irs);
    require(bs_irs.size() == L && irs_cu.size() == L && target_doa.size() == L && target_coeff.size() == L,
            "Scenario: per-IRS arrays must have L entries");
    for (std::size_t l = 0; l < L; ++l) {
        require(bs_irs[l].rows() == N() && bs_irs[l].cols() == M(), "Scenario: G_l must be N x M");
        require(bs_irs[l].allFinite(), "Scenario: G_l not finite");
        require(irs_cu[l].size() == static_cast<std::size_t>(K()), "Scenario: K users per IRS");
        for (const auto& h : irs_cu[l]) {
            require(h.size() == N(), "Scenario: h_{l,k} must have N entries");
            require(h.allFinite(), "Scenario: h_{l,k} not finite");
        }
        if (!(std::abs(target_doa[l]) <= kMaxDoa))
            throw GeometryError("Scenario: target DoA outside the identifiable cone (|theta| > 89 deg)");
        require(std::abs(target_coeff[l]) > 0, "Scenario: target coefficient must be nonzero");
    }
    require(extended_response.empty() || extended_response.size() == L, "Scenario: extended responses");
    for (const auto& e : extended_response)
        require(e.rows() == Ns() && e.cols() == N(), "Scenario: extended response must be Ns x N");
}

CVec steering_vector(double angle, int count, double spacing, double wavelength)
{
    if (!(wavelength > 0) || !(spacing > 0))
        throw ParameterError("steering_vector: wavelength and spacing must be > 0");
    CVec a(count);
    const double step = 2.0 * kPi * spacing * std::sin(angle) / wavelength;
    a(0) = 1.0;
    for (int n = 1; n < count; ++n)
        a(n) = std::polar(1.0, step * n);
    return a;
}

double los_angle(Vec2 from, Vec2 to, Vec2 broadside)
{
    const double dx = to.x - from.x;
    const double dy = to.y - from.y;
    if (std::hypot(dx, dy) == 0.0)
        throw GeometryError("los_angle: coincident positions");
    const double nb = std::hypot(broadside.x, broadside.y);
    if (nb == 0.0)
        throw GeometryError("los_angle: zero broadside vector");
    const Vec2 n{broadside.x / nb, broadside.y / nb};
    const Vec2 axis{n.y, -n.x};
    return std::atan2(dx * axis.x + dy * axis.y, dx * n.x + dy * n.y);
}

CMat rician_channel(const CMat& los, double kappa, Rng& rng)
{
    if (!(kappa >= 0))
        throw ParameterError("rician_channel: kappa must be >= 0");
    if (std::isinf(kappa))
        return los;
    const double amp = std::sqrt(los.squaredNorm() / static_cast<double>(los.size()));
    const CMat nlos = amp * rng.cn_matrix(static_cast<int>(los.rows()), static_cast<int>(los.cols()));
    return std::sqrt(kappa / (1.0 + kappa)) * los + std::sqrt(1.0 / (1.0 + kappa)) * nlos;
}

double path_loss(const SystemConfig& cfg, double dist, double exponent)
{
    return db_to_linear(cfg.ref_path_loss_db) * std::pow(dist, -exponent);
}

double target_gain(const SystemConfig& cfg, double dist)
{
    const double four_pi = 4.0 * kPi;
    return cfg.wavelength * cfg.wavelength * cfg.target_rcs / (four_pi * four_pi * four_pi * std::pow(dist, 4.0));
}

Scenario build_scenario(const SystemConfig& cfg, const Topology& topo)
{
    cfg.validate();
    topo.check_against(cfg);

    Scenario s;
    s.config = cfg;
    s.topology = topo;
    const int L = cfg.num_irs;
    const int K = cfg.users_per_irs;
    const int M = cfg.num_bs_antennas;
    const int N = cfg.num_irs_elements;
    const int Ns = cfg.num_irs_sensors;
    const double lam = cfg.wavelength;

    for (int l = 0; l < L; ++l) {
        const Vec2 irs = topo.irs_positions[l];
        const Vec2 face = topo.irs_broadside[l];

        const double dep = los_angle(topo.bs_position, irs, topo.bs_broadside);
        const double arr = los_angle(irs, topo.bs_position, face);
        const double pl_g = path_loss(cfg, distance(topo.bs_position, irs), cfg.bs_irs_exponent);
        const CMat g_los = std::sqrt(pl_g) * steering_vector(arr, N, cfg.reflect_spacing, lam) *
                           steering_vector(dep, M, cfg.bs_spacing, lam).adjoint();
        Rng rg = Rng::stream(cfg.rng_seed, "bs_irs", {l});
        s.bs_irs.push_back(rician_channel(g_los, cfg.rician_kappa, rg));

        std::vector<CVec> users;
        for (int k = 0; k < K; ++k) {
            const Vec2 cu = topo.cu_positions[l][k];
            const double ang = los_angle(irs, cu, face);
            const double pl_h = path_loss(cfg, distance(irs, cu), cfg.irs_cu_exponent);
            // h^H Phi G x: the reradiated row toward the user is a^T, so h holds conj(a).
            const CMat h_los = std::sqrt(pl_h) * steering_vector(ang, N, cfg.reflect_spacing, lam).conjugate();
            Rng rh = Rng::stream(cfg.rng_seed, "irs_cu", {l, k});
            users.push_back(rician_channel(h_los, cfg.rician_kappa, rh).col(0));
        }
        s.irs_cu.push_back(std::move(users));

        const Vec2 tgt = topo.target_positions[l];
        const double theta = los_angle(irs, tgt, face);
        if (std::abs(theta) > kMaxDoa)
            throw GeometryError("build_scenario: target " + std::to_string(l) + " is outside the identifiable cone");
        s.target_doa.push_back(theta);

        Rng rt = Rng::stream(cfg.rng_seed, "target", {l});
        const double gain = std::sqrt(target_gain(cfg, distance(irs, tgt)));
        s.target_coeff.push_back(std::polar(gain, rt.uniform(0.0, 2.0 * kPi)));
        s.extended_response.push_back(gain * rt.cn_matrix(Ns, N));
    }
    s.validate();
    return s;
}

// ---------------------------------------------------------------------------
// JSON

json complex_to_json(cplx z) { return json::array({z.real(), z.imag()}); }

cplx complex_from_json(const json& j)
{
    if (!j.is_array() || j.size() != 2)
        throw ParameterError("complex number must be a [re, im] pair");
    return {j[0].get<double>(), j[1].get<double>()};
}

json matrix_to_json(const CMat& m)
{
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k)
            row.push_back(complex_to_json(m(i, k)));
        rows.push_back(std::move(row));
    }
    return rows;
}

CMat matrix_from_json(const json& j)
{
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
    CMat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (static_cast<Eigen::Index>(j[i].size()) != cols)
            throw ParameterError("ragged matrix in JSON");
        for (Eigen::Index k = 0; k < cols; ++k)
            m(i, k) = complex_from_json(j[i][k]);
    }
    return m;
}

json vector_to_json(const CVec& v)
{
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        out.push_back(complex_to_json(v(i)));
    return out;
}

CVec vector_from_json(const json& j)
{
    CVec v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i)
        v(i) = complex_from_json(j[i]);
    return v;
}

namespace {
json pos(Vec2 p) { return json::array({p.x, p.y}); }
Vec2 pos(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }
}  // namespace

void to_json(json& j, const SystemConfig& c)
{
    j = json{{"num_bs_antennas", c.num_bs_antennas},
             {"num_irs_elements", c.num_irs_elements},
             {"num_irs_sensors", c.num_irs_sensors},
             {"num_irs", c.num_irs},
             {"users_per_irs", c.users_per_irs},
             {"dwell_symbols", c.dwell_symbols},
             {"wavelength", c.wavelength},
             {"reflect_spacing", c.reflect_spacing},
             {"sensor_spacing", c.sensor_spacing},
             {"bs_spacing", c.bs_spacing},
             {"comm_noise_power", c.comm_noise_power},
             {"sense_noise_power", c.sense_noise_power},
             {"max_power", c.max_power},
             {"sinr_threshold", c.sinr_threshold},
             {"sinr_per_user", c.sinr_per_user},
             {"rician_kappa", c.rician_kappa},
             {"ref_path_loss_db", c.ref_path_loss_db},
             {"bs_irs_exponent", c.bs_irs_exponent},
             {"irs_cu_exponent", c.irs_cu_exponent},
             {"target_rcs", c.target_rcs},
             {"rng_seed", c.rng_seed}};
}

void from_json(const json& j, SystemConfig& c)
{
    auto get = [&j](const char* key, auto& field) {
        if (auto it = j.find(key); it != j.end())
            it->get_to(field);
    };
    get("num_bs_antennas", c.num_bs_antennas);
    get("num_irs_elements", c.num_irs_elements);
    get("num_irs_sensors", c.num_irs_sensors);
    get("num_irs", c.num_irs);
    get("users_per_irs", c.users_per_irs);
    get("dwell_symbols", c.dwell_symbols);
    get("wavelength", c.wavelength);
    get("reflect_spacing", c.reflect_spacing);
    get("sensor_spacing", c.sensor_spacing);
    get("bs_spacing", c.bs_spacing);
    get("comm_noise_power", c.comm_noise_power);
    get("sense_noise_power", c.sense_noise_power);
    get("max_power", c.max_power);
    get("sinr_threshold", c.sinr_threshold);
    get("sinr_per_user", c.sinr_per_user);
    get("rician_kappa", c.rician_kappa);
    get("ref_path_loss_db", c.ref_path_loss_db);
    get("bs_irs_exponent", c.bs_irs_exponent);
    get("irs_cu_exponent", c.irs_cu_exponent);
    get("target_rcs", c.target_rcs);
    get("rng_seed", c.rng_seed);
}

void to_json(json& j, const Topology& t)
{
    json irs = json::array(), face = json::array(), tgt = json::array(), cus = json::array();
    for (auto p : t.irs_positions)
        irs.push_back(pos(p));
    for (auto p : t.irs_broadside)
        face.push_back(pos(p));
    for (auto p : t.target_positions)
        tgt.push_back(pos(p));
    for (const auto& users : t.cu_positions) {
        json row = json::array();
        for (auto p : users)
            row.push_back(pos(p));
        cus.push_back(std::move(row));
    }
    j = json{{"bs_position", pos(t.bs_position)},
             {"bs_broadside", pos(t.bs_broadside)},
             {"irs_positions", irs},
             {"irs_broadside", face},
             {"cu_positions", cus},
             {"target_positions", tgt}};
}

void from_json(const json& j, Topology& t)
{
    t.bs_position = pos(j.at("bs_position"));
    t.bs_broadside = pos(j.at("bs_broadside"));
    t.irs_positions.clear();
    t.irs_broadside.clear();
    t.target_positions.clear();
    t.cu_positions.clear();
    for (const auto& p : j.at("irs_positions"))
        t.irs_positions.push_back(pos(p));
    for (const auto& p : j.at("irs_broadside"))
        t.irs_broadside.push_back(pos(p));
    for (const auto& p : j.at("target_positions"))
        t.target_positions.push_back(pos(p));
    for (const auto& row : j.at("cu_positions")) {
        std::vector<Vec2> users;
        for (const auto& p : row)
            users.push_back(pos(p));
        t.cu_positions.push_back(std::move(users));
    }
}

json scenario_to_json(const Scenario& s)
{
    json g = json::array(), h = json::array(), e = json::array(), beta = json::array();
    for (const auto& m : s.bs_irs)
        g.push_back(matrix_to_json(m));
    for (const auto& users : s.irs_cu) {
        json row = json::array();
        for (const auto& v : users)
            row.push_back(vector_to_json(v));
        h.push_back(std::move(row));
    }
    for (const auto& m : s.extended_response)
        e.push_back(matrix_to_json(m));
    for (auto b : s.target_coeff)
        beta.push_back(complex_to_json(b));
    return json{{"schema", "isac-scenario"},
                {"version", kScenarioSchemaVersion},
                {"config", s.config},
                {"topology", s.topology},
                {"bs_irs", g},
                {"irs_cu", h},
                {"target_doa", s.target_doa},
                {"target_coeff", beta},
                {"extended_response", e}};
}

Scenario scenario_from_json(const json& j)
{
    if (j.value("schema", "") != "isac-scenario")
        throw ParameterError("not a scenario file (schema tag missing)");
    if (j.value("version", 0) != kScenarioSchemaVersion)
        throw ParameterError("unsupported scenario schema version");
    Scenario s;
    s.config = j.at("config").get<SystemConfig>();
    s.topology = j.at("topology").get<Topology>();
    for (const auto& m : j.at("bs_irs"))
        s.bs_irs.push_back(matrix_from_json(m));
    for (const auto& row : j.at("irs_cu")) {
        std::vector<CVec> users;
        for (const auto& v : row)
            users.push_back(vector_from_json(v));
        s.irs_cu.push_back(std::move(users));
    }
    s.target_doa = j.at("target_doa").get<std::vector<double>>();
    for (const auto& b : j.at("target_coeff"))
        s.target_coeff.push_back(complex_from_json(b));
    for (const auto& m : j.at("extended_response"))
        s.extended_response.push_back(matrix_from_json(m));
    s.validate();
    return s;
}

void save_scenario(const Scenario& s, const std::string& path)
{
    std::ofstream out(path);
    if (!out)
        throw ParameterError("cannot write " + path);
    out << scenario_to_json(s).dump(1) << '\n';
}

Scenario load_scenario(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ParameterError("cannot read " + path);
    return scenario_from_json(json::parse(in));
}

}  // namespace isac
