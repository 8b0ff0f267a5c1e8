// Acceptance run: one PASS/FAIL line per criterion.

#include "helpers.hpp"
#include "oracles.hpp"

#include "isac/cli.hpp"
#include "isac/crb.hpp"
#include "isac/experiment.hpp"
#include "isac/orchestrator.hpp"
#include "isac/rxbf.hpp"
#include "isac/txbf.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>

using namespace isac;
using namespace testing_util;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string run_cli_text(const std::vector<std::string>& args, int& code)
{
    std::ostringstream out, err;
    code = run_cli(args, out, err);
    return out.str();
}

struct SweepCsvRow {
    double x;
    std::string scheme, variant;
    double crb;
};

std::vector<SweepCsvRow> parse_sweep(const std::string& csv)
{
    std::vector<SweepCsvRow> rows;
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);  // schema
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        std::vector<std::string> f;
        std::istringstream ls(line);
        for (std::string c; std::getline(ls, c, ',');)
            f.push_back(c);
        rows.push_back({std::stod(f[2]), f[3], f[4], std::stod(f[5])});
    }
    return rows;
}

// 1
Outcome fim_oracle()
{
    const auto t0 = Clock::now();
    Rng pick(1001);
    double worst = 0.0;
    int bad = 0;
    for (int i = 0; i < 100; ++i) {
        const int M = 2 + i % 3, N = 2 + (i / 3) % 5, Ns = 2 + (i / 15) % 3;
        const Scenario s = random_scenario(M, N, Ns, 1, 1, 7000 + i);
        const CMat Rx = random_psd(M, pick, -1, 3.0);
        const CVec phi = random_phases(N, pick);
        const PointFim a = point_fim(s, 0, Rx, phi);
        const PointFim b = fim_finite_difference(s, 0, Rx, phi, 1e-6);
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) {
                const double scale = std::sqrt(std::abs(a.J(r, r) * a.J(c, c)));
                worst = std::max(worst, std::abs(a.J(r, c) - b.J(r, c)) / scale);
            }
        if (!fim_close(a, b, 1e-5))
            ++bad;
    }
    const double t = seconds_since(t0);
    return {bad == 0 && t < 5.0, "100 instances, max relative deviation " + fmt("%.2e", worst) + ", " +
                                     fmt("%.2f", t) + " s (limit 5 s)"};
}

// 2
Outcome crb_routes()
{
    Rng pick(1001);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const int M = 2 + i % 3, N = 2 + (i / 3) % 5, Ns = 2 + (i / 15) % 3;
        const Scenario s = random_scenario(M, N, Ns, 1, 1, 7000 + i);
        const CMat Rx = random_psd(M, pick, -1, 3.0);
        const CVec phi = random_phases(N, pick);
        const CrbRoutes r = point_crb_routes(s, 0, Rx, phi);
        worst = std::max({worst, rel_diff(r.schur, r.closed), rel_diff(r.schur, r.inverse),
                          rel_diff(r.closed, r.inverse)});
    }
    return {worst <= 1e-8, "100 instances, max pairwise relative difference " + fmt("%.2e", worst)};
}

// 3
Outcome extended_equivalence()
{
    Rng pick(3003);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        const int N = 1 + i % 6;
        const int M = N + (i / 6) % 3;
        Scenario s = random_scenario(M, N, 1 + i % 4, 1, 1, 8000 + i);
        s.config.dwell_symbols = 2 * M + 4;
        const CMat Rx = random_psd(M, pick, -1, 2.0);
        const CVec phi = random_phases(N, pick);
        worst = std::max(worst, rel_diff(extended_crb(s, 0, Rx), extended_crb_block_oracle(s, 0, Rx, phi)));
    }
    return {worst <= 1e-8, "50 instances (M >= N <= 6), max relative difference " + fmt("%.2e", worst)};
}

// 4
Outcome scaling()
{
    SystemConfig cfg;
    cfg.rng_seed = 4;
    Rng r(44);
    const CMat Rx = random_psd(8, r, -1, 40.0);
    const CVec phi = random_phases(8, r);
    std::vector<double> scaled;
    for (int Ns : {64, 128, 256}) {
        cfg.num_irs_sensors = Ns;
        scaled.push_back(std::pow(double(Ns), 3) * point_crb(build_scenario(cfg), 0, Rx, phi));
    }
    const double r1 = scaled[1] / scaled[0], r2 = scaled[2] / scaled[1];
    const double spread = std::abs(r1 / r2 - 1.0);

    cfg.num_irs_sensors = 8;
    const Scenario a = build_scenario(cfg);
    cfg.num_irs_sensors = 16;
    const Scenario b = build_scenario(cfg);
    const double ratio = extended_crb(b, 0, Rx) / extended_crb(a, 0, Rx);
    const bool ok = spread <= 0.02 && std::abs(ratio - 2.0) <= 1e-12;
    return {ok, "Ns^3 CRB ratios " + fmt("%.5f", r1) + " / " + fmt("%.5f", r2) + " (spread " + fmt("%.2e", spread) +
                    "), extended ratio on doubling Ns " + fmt("%.15f", ratio)};
}

// 5
Outcome sdr_tightness()
{
    int found = 0, tried = 0;
    double sinr_dev = 0.0, rx_dev = 0.0, r0_min = 0.0, type2_drop = 0.0;
    while (found < 20 && tried < 200) {
        ++tried;
        Scenario s = random_scenario(4, 4, 4, 2, 2, 9000 + tried);
        s.config.max_power = 10.0;
        s.config.comm_noise_power = 1.0;
        s.config.sense_noise_power = 1.0;
        s.config.sinr_threshold = 1.0 + 0.1 * (tried % 7);
        Rng rng(tried);
        ReflectSolution r;
        for (int l = 0; l < 2; ++l)
            r.phases.push_back(random_phases(4, rng));
        const bool extended = found % 2 == 1;
        TxResult t1, t2;
        try {
            t1 = extended ? solve_extended_tx(s, r, Receiver::TypeI) : solve_point_tx(s, r, Receiver::TypeI, s.target_doa);
            t2 = extended ? solve_extended_tx(s, r, Receiver::TypeII)
                          : solve_point_tx(s, r, Receiver::TypeII, s.target_doa);
        } catch (const InfeasibleError&) {
            continue;
        }
        ++found;
        for (int l = 0; l < 2; ++l)
            for (int k = 0; k < 2; ++k) {
                const double pre = sinr(Receiver::TypeI, s, l, k, t1.relaxed, r.phases[l]);
                const double post = sinr(Receiver::TypeI, s, l, k, t1.solution, r.phases[l]);
                sinr_dev = std::max(sinr_dev, std::abs(post - pre) / pre);
                const double pre2 = sinr(Receiver::TypeII, s, l, k, t2.relaxed, r.phases[l]);
                const double post2 = sinr(Receiver::TypeII, s, l, k, t2.solution, r.phases[l]);
                type2_drop = std::max(type2_drop, (pre2 - post2) / pre2);
            }
        for (const TxResult* t : {&t1, &t2}) {
            const CMat a = t->relaxed.total_covariance(), b = t->solution.total_covariance();
            rx_dev = std::max(rx_dev, (a - b).norm() / a.norm());
            r0_min = std::min(r0_min, min_eigenvalue(t->solution.sense) / a.trace().real());
        }
    }
    const bool ok = found == 20 && sinr_dev <= 1e-7 && rx_dev <= 1e-9 && r0_min >= -1e-9 && type2_drop <= 1e-7;
    return {ok, std::to_string(found) + " instances; Type-I SINR change " + fmt("%.2e", sinr_dev) + ", Rx change " +
                    fmt("%.2e", rx_dev) + ", min eig R0 " + fmt("%.2e", r0_min) + ", Type-II SINR drop " +
                    fmt("%.2e", type2_drop)};
}

// 6
Outcome reflect_quality()
{
    const auto t0 = Clock::now();
    double worst = -1.0;
    int used = 0, empty = 0;
    for (std::uint64_t seed = 1; used < 5 && seed <= 50; ++seed) {
        Scenario s = random_scenario(4, 4, 4, 1, 2, 600 + seed);
        s.config.max_power = 10.0;
        s.config.comm_noise_power = 1.0;
        s.config.sense_noise_power = 1.0;
        s.config.sinr_threshold = 1.0;
        Rng rng(seed);
        const ReflectSolution r{{random_phases(4, rng)}, {}};
        const TxResult t = solve_point_tx(s, r, Receiver::TypeI, s.target_doa);
        const ReflectResult res = solve_point_reflect(s, 0, t.solution, Receiver::TypeI, s.target_doa[0], r.phases[0], rng);
        const CMat Rx = t.solution.total_covariance();
        const double got = point_crb(s, 0, Rx, res.phases);
        double grid = std::numeric_limits<double>::infinity();
        CVec phi(4);
        phi(0) = 1.0;
        for (int code = 0; code < 4096; ++code) {
            int c = code;
            for (int n = 1; n < 4; ++n) {
                phi(n) = std::polar(1.0, 2.0 * kPi * (c % 16) / 16.0);
                c /= 16;
            }
            if (irs_sinr_margin(s, 0, t.solution, Receiver::TypeI, phi) >= 1.0 - 1e-6)
                grid = std::min(grid, point_crb(s, 0, Rx, phi));
        }
        // instances whose quantized phases cannot meet the SINR targets say nothing about quality
        if (!std::isfinite(grid)) {
            ++empty;
            continue;
        }
        ++used;
        worst = std::max(worst, got / grid - 1.0);
    }
    const double t = seconds_since(t0);
    return {used == 5 && worst <= 0.02 && t < 60.0, std::to_string(used) + " instances (" + std::to_string(empty) + " skipped without a feasible grid point), worst excess over the 16-level grid " + fmt("%+.3f%%", 100 * worst) +
                                           ", " + fmt("%.1f", t) + " s (limit 60 s)"};
}

// 7
Outcome convergence()
{
    std::string detail;
    bool ok = true;
    SystemConfig cfg;
    cfg.rng_seed = 1;
    const Scenario s = build_scenario(cfg);
    OrchestratorOptions o;
    o.seed = 1;
    for (Variant v : {Variant::P1_I, Variant::P1_II, Variant::P4_I, Variant::P4_II}) {
        const Trajectory t = optimize(v, s, o);
        bool mono = !t.iterations.empty();
        for (std::size_t i = 1; i < t.iterations.size(); ++i)
            mono = mono && t.iterations[i].max_crb <= t.iterations[i - 1].max_crb + 1e-8 * t.iterations[i - 1].max_crb;
        const bool good = mono && t.converged && t.iterations.size() <= 30;
        ok = ok && good;
        detail += (detail.empty() ? "" : "; ") + to_string(v) + " " + std::to_string(t.iterations.size()) + " iters " +
                  (good ? "ok" : "bad") + " " + fmt("%.3e", t.final_crb());
    }
    return {ok, detail};
}

// 8 and 10 share the sweep outputs
std::map<std::string, std::string> g_sweeps;

Outcome ordering()
{
    bool ok = true;
    int points = 0, skipped = 0;
    std::string detail;
    double gap0 = 0.0, gap20 = 0.0;
    for (const char* name : {"fig4_crb_vs_power", "fig5_crb_vs_sinr", "fig6_ext_vs_power", "fig7_ext_vs_sinr"}) {
        int code = 0;
        const std::string csv = run_cli_text({"sweep", std::string("--config=") + name, "--seed=1"}, code);
        g_sweeps[name] = csv;
        if (code != 0)
            return {false, std::string(name) + " exited with " + std::to_string(code)};
        std::map<double, std::map<std::string, double>> by_x;
        for (const auto& r : parse_sweep(csv))
            by_x[r.x][r.scheme == "proposed" ? "proposed_" + r.variant.substr(3) : r.scheme] = r.crb;
        for (auto& [x, m] : by_x) {
            const double so = m["sensing_only"], p2 = m["proposed_II"], p1 = m["proposed_I"], zf = m["zf"],
                         tx = m["tx_only"];
            if (!std::isfinite(so) || !std::isfinite(p2) || !std::isfinite(p1) || !std::isfinite(zf) ||
                !std::isfinite(tx)) {
                ++skipped;
                continue;
            }
            ++points;
            auto le = [](double a, double b) { return a <= b * (1.0 + 1e-6); };
            const bool good = le(so, p2) && le(p2, p1) && le(p1, zf) && le(p1, tx);
            if (!good) {
                ok = false;
                detail += std::string(name) + " x=" + fmt("%g", x) + " violates the order; ";
            }
            if (std::string(name) == "fig5_crb_vs_sinr") {
                if (x == 0.0)
                    gap0 = p1 - p2;
                if (x == 20.0)
                    gap20 = p1 - p2;
            }
        }
    }
    const bool gap_ok = gap20 > gap0;
    detail += std::to_string(points) + " sweep points ordered (" + std::to_string(skipped) +
              " skipped as infeasible); I-II gap " + fmt("%.3e", gap0) + " at 0 dB, " + fmt("%.3e", gap20) + " at 20 dB";
    return {ok && gap_ok && points > 0, detail};
}

// 9
Outcome attainment()
{
    const auto t0 = Clock::now();
    ExperimentConfig c;
    const ValidateReport r = run_validate(c, 1);
    const double t = seconds_since(t0);
    const double se_rel = r.mle.mse_se / r.mle.mse;
    const bool mle_ok = r.mle.mse >= r.mle_crb * (1.0 - 3.0 * se_rel) && r.mle.mse <= 1.5 * r.mle_crb;
    const bool ls_ok = std::abs(r.ls.error_trace - r.ls_crb) <= 3.0 * r.ls.se;
    return {mle_ok && ls_ok && t < 300.0,
            "MLE MSE/CRB " + fmt("%.4f", r.mle.mse / r.mle_crb) + " (se " + fmt("%.4f", se_rel) + ", " +
                std::to_string(r.mle.boundary_hits) + " boundary hits); LS/CRB " +
                fmt("%.4f", r.ls.error_trace / r.ls_crb) + " (" + fmt("%.2f", (r.ls.error_trace - r.ls_crb) / r.ls.se) +
                " se); " + fmt("%.1f", t) + " s (limit 300 s)"};
}

// 10
Outcome determinism()
{
    int c1 = 0, c2 = 0, c3 = 0;
    const std::vector<std::string> opt = {"optimize", "--config=fig3_convergence", "--variant=P1-II", "--seed=1"};
    const std::string a = run_cli_text(opt, c1);
    const std::string b = run_cli_text(opt, c2);
    const std::string sweep = run_cli_text({"sweep", "--config=fig7_ext_vs_sinr", "--seed=1"}, c3);
    const bool ok = c1 == 0 && c2 == 0 && c3 == 0 && a == b && !a.empty() && sweep == g_sweeps["fig7_ext_vs_sinr"];
    return {ok, "optimize CSV " + std::string(a == b ? "identical" : "differs") + " (" + std::to_string(a.size()) +
                    " bytes); sweep CSV " + (sweep == g_sweeps["fig7_ext_vs_sinr"] ? "identical" : "differs")};
}

}  // namespace

// Optional arguments select criteria by number; all run by default.
int main(int argc, char** argv)
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"1 FIM oracle equivalence", fim_oracle},
        {"2 CRB route equivalence", crb_routes},
        {"3 extended FIM/CRB equivalence", extended_equivalence},
        {"4 scaling laws", scaling},
        {"5 SDR tightness (tx)", sdr_tightness},
        {"6 reflective SDR quality", reflect_quality},
        {"7 convergence", convergence},
        {"8 scheme ordering", ordering},
        {"9 statistical attainment", attainment},
        {"10 determinism", determinism},
    };
    std::vector<bool> selected(criteria.size(), argc == 1);
    for (int i = 1; i < argc; ++i) {
        const int n = std::atoi(argv[i]);
        if (n >= 1 && n <= int(criteria.size()))
            selected[n - 1] = true;
    }
    int failed = 0, ran = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (!selected[i])
            continue;
        ++ran;
        const auto& [name, fn] = criteria[i];
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("%s  %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    std::printf("%d of %d criteria passed\n", ran - failed, ran);
    return failed == 0 ? 0 : 1;
}
