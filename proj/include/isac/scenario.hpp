#pragma once

#include "isac/core.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace isac {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

/// Dimensions and physical constants of one multi-IRS ISAC system.
///
/// Defaults reproduce the desk-scale setting: 6 GHz carrier, half-wavelength
/// arrays, -174 dBm/Hz noise over 1 MHz, 5 dB Rician factor, T = 100 symbols,
/// two IRSs with two users each, M = N = Ns = 8, P = 40 W, Gamma = 10 dB.
struct SystemConfig {
    int num_bs_antennas = 8;   // M
    int num_irs_elements = 8;  // N
    int num_irs_sensors = 8;   // Ns
    int num_irs = 2;           // L
    int users_per_irs = 2;     // K
    int dwell_symbols = 100;   // T

    double wavelength = kSpeedOfLight / 6e9;
    double reflect_spacing = kSpeedOfLight / 6e9 / 2.0;
    double sensor_spacing = kSpeedOfLight / 6e9 / 2.0;
    double bs_spacing = kSpeedOfLight / 6e9 / 2.0;

    double comm_noise_power = default_noise_power();   // watts
    double sense_noise_power = default_noise_power();  // watts
    double max_power = 40.0;                           // watts
    double sinr_threshold = 10.0;                      // linear, all users
    std::vector<double> sinr_per_user;                 // optional override, size L*K, row-major in l
    double rician_kappa = 3.1622776601683795;          // 5 dB

    // Large-scale fading: PL(d) = PL0 * d^-alpha, d in meters.
    double ref_path_loss_db = -30.0;
    double bs_irs_exponent = 2.2;
    double irs_cu_exponent = 2.8;
    double target_rcs = 1.0;  // m^2

    std::uint64_t rng_seed = 0;

    double sinr(int l, int k) const;
    int num_users() const { return num_irs * users_per_irs; }

    /// Throws ParameterError on any violated field invariant.
    void validate() const;

    static double default_noise_power() { return 1e-3 * std::pow(10.0, -174.0 / 10.0) * 1e6; }
};

/// Node positions; every ULA is described by its broadside direction
/// (the array axis is the broadside rotated by -90 degrees).
struct Topology {
    Vec2 bs_position{0.0, 0.0};
    Vec2 bs_broadside{0.0, 1.0};
    std::vector<Vec2> irs_positions;
    std::vector<Vec2> irs_broadside;
    std::vector<std::vector<Vec2>> cu_positions;  // [L][K]
    std::vector<Vec2> target_positions;           // [L]

    /// BS at the origin, IRSs at (-30,30) and (30,30) facing the ground,
    /// users at (-40,25), (-30,25) / (30,25), (40,25), targets at (-35,22), (35,27).
    static Topology fig2();

    void check_against(const SystemConfig& cfg) const;
};

struct Scenario {
    SystemConfig config;
    Topology topology;

    std::vector<CMat> bs_irs;                 // G_l, N x M
    std::vector<std::vector<CVec>> irs_cu;    // h_{l,k}, length N
    std::vector<double> target_doa;           // theta_l (radians from IRS broadside)
    std::vector<cplx> target_coeff;           // beta_l
    std::vector<CMat> extended_response;      // E_l, Ns x N

    int L() const { return config.num_irs; }
    int K() const { return config.users_per_irs; }
    int M() const { return config.num_bs_antennas; }
    int N() const { return config.num_irs_elements; }
    int Ns() const { return config.num_irs_sensors; }

    /// Dimension and finiteness checks; throws ParameterError / GeometryError.
    void validate() const;
};

/// ULA response: element n equals exp(j 2 pi spacing n sin(angle) / wavelength).
CVec steering_vector(double angle, int count, double spacing, double wavelength);

/// Angle of `to` seen from an array at `from` facing `broadside`, measured from
/// broadside toward the array axis. Throws GeometryError for coincident points.
double los_angle(Vec2 from, Vec2 to, Vec2 broadside = {0.0, 1.0});

/// sqrt(k/(1+k)) * los + sqrt(1/(1+k)) * nlos, where the scattered part has
/// i.i.d. CN(0, a^2) entries and a is the RMS entry magnitude of `los`.
/// kappa = +inf returns `los` unchanged.
CMat rician_channel(const CMat& los, double kappa, Rng& rng);

/// PL0 * distance^-exponent (power ratio).
double path_loss(const SystemConfig& cfg, double distance, double exponent);

/// |beta|^2 = lambda^2 rcs / ((4 pi)^3 d^4): round-trip radar-equation gain.
double target_gain(const SystemConfig& cfg, double distance);

Scenario build_scenario(const SystemConfig& cfg, const Topology& topo);
inline Scenario build_scenario(const SystemConfig& cfg) { return build_scenario(cfg, Topology::fig2()); }

// Serialization. Complex numbers are [re, im] pairs; matrices are row lists.
inline constexpr int kScenarioSchemaVersion = 1;

void to_json(nlohmann::json& j, const SystemConfig& cfg);
void from_json(const nlohmann::json& j, SystemConfig& cfg);
void to_json(nlohmann::json& j, const Topology& topo);
void from_json(const nlohmann::json& j, Topology& topo);

nlohmann::json scenario_to_json(const Scenario& s);
Scenario scenario_from_json(const nlohmann::json& j);
void save_scenario(const Scenario& s, const std::string& path);
Scenario load_scenario(const std::string& path);

nlohmann::json complex_to_json(cplx z);
cplx complex_from_json(const nlohmann::json& j);
nlohmann::json matrix_to_json(const CMat& m);
CMat matrix_from_json(const nlohmann::json& j);
nlohmann::json vector_to_json(const CVec& v);
CVec vector_from_json(const nlohmann::json& j);

}  // namespace isac
