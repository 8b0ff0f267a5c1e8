#include "doctest.h"

#include "isac/cli.hpp"
#include "isac/io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace isac;

namespace {

namespace fs = std::filesystem;

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args)
{
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

const std::vector<std::string> kSmall = {"--num_bs_antennas=4", "--num_irs_elements=4", "--num_irs_sensors=4",
                                         "--draws=100", "--max_power=40", "--sinr_threshold=3"};

std::vector<std::string> with_small(std::vector<std::string> args)
{
    args.insert(args.end(), kSmall.begin(), kSmall.end());
    return args;
}

std::string read(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines(const std::string& text)
{
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);)
        out.push_back(l);
    return out;
}

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / "isacbf_cli_test";
    fs::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("usage errors exit with 64")
{
    CHECK(run({}).code == kExitUsage);
    CHECK(run({"frobnicate"}).code == kExitUsage);
    CHECK(run({"optimize", "--seed=1", "--no_such_key=3"}).code == kExitUsage);
    CHECK(run({"optimize", "--seed=1", "stray"}).code == kExitUsage);
    CHECK(run({"optimize", "--config=fig3_convergence"}).code == kExitUsage);  // no seed
    CHECK(run({"optimize", "--seed=1", "--config=missing_recipe"}).code == kExitUsage);
    CHECK(run({"optimize", "--seed=1", "--variant=P7"}).code == kExitUsage);
    CHECK(run({"optimize", "--seed=1", "--num_irs=0"}).code == kExitUsage);
    CHECK(run({"crb", "--scenario=x.json"}).code == kExitUsage);
    const Run h = run({"--help"});
    CHECK(h.code == kExitOk);
    CHECK(h.out.find("sweep") != std::string::npos);
}

TEST_CASE("optimize writes a versioned, deterministic trajectory")
{
    const Run a = run(with_small({"optimize", "--seed=3", "--variant=P1-I"}));
    REQUIRE(a.code == kExitOk);
    const auto rows = lines(a.out);
    REQUIRE(rows.size() >= 4);
    CHECK(rows[0] == "#schema=isac-trajectory/1");
    CHECK(rows[1] == "scheme,variant,iteration,irs,crb,max_crb,min_sinr,power,tx_guard,stop");
    CHECK(rows[2].rfind("proposed,P1-I,1,0,", 0) == 0);
    CHECK(run(with_small({"optimize", "--seed=3", "--variant=P1-I"})).out == a.out);
    CHECK(run(with_small({"optimize", "--seed=4", "--variant=P1-I"})).out != a.out);
}

TEST_CASE("infeasible SINR targets exit with 2 and name the users")
{
    auto args = with_small({"optimize", "--seed=1"});
    args.push_back("--sinr_threshold=1e9");  // later flags win
    const Run r = run(args);
    CHECK(r.code == kExitInfeasible);
    CHECK(r.err.find("user (0,0)") != std::string::npos);
    CHECK(lines(r.out).size() == 2);
}

TEST_CASE("saved solutions evaluate to the reported CRB")
{
    const fs::path scen = scratch("scenario.json"), sol = scratch("solution.json");
    REQUIRE(run(with_small({"scenario", "--seed=5", "--out=" + scen.string()})).code == kExitOk);
    const Run opt = run(with_small({"optimize", "--seed=5", "--variant=P1-II", "--scheme=tx_only",
                                    "--scenario=" + scen.string(), "--solution-out=" + sol.string()}));
    REQUIRE(opt.code == kExitOk);
    const Run crb = run({"crb", "--scenario=" + scen.string(), "--solution=" + sol.string(), "--variant=P1-II"});
    REQUIRE(crb.code == kExitOk);
    const auto traj = lines(opt.out), rep = lines(crb.out);
    REQUIRE(rep.size() == 4);
    CHECK(rep[0] == "#schema=isac-crb/1");
    // max_crb column of both tables
    auto field = [](const std::string& row, int idx) {
        std::istringstream in(row);
        std::string f;
        for (int i = 0; i <= idx; ++i)
            std::getline(in, f, ',');
        return std::stod(f);
    };
    CHECK(field(rep[2], 3) == doctest::Approx(field(traj[2], 5)).epsilon(1e-12));

    // re-emitting a scenario file is lossless
    const Run again = run({"scenario", "--scenario=" + scen.string()});
    REQUIRE(again.code == kExitOk);
    CHECK(again.out == read(scen));
}

TEST_CASE("sweep rows cover every scheme at every grid value")
{
    const Run r = run(with_small({"sweep", "--seed=2", "--values=[20,40]", "--max_iters=3"}));
    REQUIRE(r.code == kExitOk);
    const auto rows = lines(r.out);
    CHECK(rows[0] == "#schema=isac-sweep/1");
    CHECK(rows.size() == 2 + 2 * 5);
    CHECK(rows[2].rfind("point,power,20,sensing_only,", 0) == 0);
    CHECK(run(with_small({"sweep", "--seed=2", "--values=[20,40]", "--max_iters=3"})).out == r.out);
}

TEST_CASE("config overrides: file, then flags")
{
    nlohmann::json doc = config_to_json(ExperimentConfig{});
    apply_override(doc, "max_power", "12.5");
    apply_override(doc, "orchestrator.max_iters", "7");
    apply_override(doc, "sweep.axis", "sinr_db");
    const ExperimentConfig c = config_from_json(doc);
    CHECK(c.system.max_power == 12.5);
    CHECK(c.max_iters == 7);
    CHECK(c.sweep.axis == "sinr_db");
    CHECK_THROWS_AS(apply_override(doc, "nope", "1"), ParameterError);
    nlohmann::json bad = doc;
    bad["extra"] = 1;
    CHECK_THROWS_AS(config_from_json(bad), ParameterError);
    bad = doc;
    bad["sweep"]["axis"] = "time";
    CHECK_THROWS_AS(config_from_json(bad), ParameterError);
}

TEST_CASE("CSV formatting")
{
    CsvTable t("demo/1", {"a", "b"});
    t.add(0.1).add("x").end_row();
    t.add(std::numeric_limits<double>::infinity()).add(3).end_row();
    CHECK(t.str() == "#schema=demo/1\na,b\n0.10000000000000001,x\ninf,3\n");
    t.add(1.0);
    CHECK_THROWS_AS(t.end_row(), ParameterError);
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}
