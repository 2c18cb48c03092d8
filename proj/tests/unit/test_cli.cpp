#include <doctest.h>

#include "klift/io.hpp"
#include "klift/simkit.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace klift;
namespace fs = std::filesystem;

namespace {

const fs::path kBinary = KLIFT_CLI;
const fs::path kSource = KLIFT_SOURCE_DIR;

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("klift_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

Run run(const std::string& args, const fs::path& dir) {
    const std::string cmd = "cd '" + dir.string() + "' && '" + kBinary.string() + "' " + args + " > stdout.txt 2> stderr.txt";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(dir / "stdout.txt");
    r.err = slurp(dir / "stderr.txt");
    return r;
}

fs::path write_config(const fs::path& dir, const std::string& name, const json& j) {
    write_json_file(dir / name, j);
    return dir / name;
}

json vdp_config() {
    return json::parse(R"({
        "name": "vdp",
        "system": {"name": "vanderpol"},
        "sampling": {"Ts": 0.5, "pairs_per_trajectory": 2, "trajectories": 15, "box": [-1, 1]},
        "noise": {"sigma_meas": 0.01},
        "method": {"kind": "main", "m": 3, "m_F": 3},
        "seed": 1
    })");
}

}  // namespace

TEST_CASE("simulate is reproducible and reports K and N") {
    const auto dir = scratch("sim");
    write_config(dir, "c.json", vdp_config());
    const auto a = run("simulate --config c.json --seed 4 --out a", dir);
    REQUIRE(a.code == 0);
    CHECK(a.out.find("K = 30") != std::string::npos);
    CHECK(a.out.find("N = 10") != std::string::npos);
    REQUIRE(run("simulate --config c.json --seed 4 --out b", dir).code == 0);
    CHECK(slurp(dir / "a/snapshots.csv") == slurp(dir / "b/snapshots.csv"));
    CHECK(slurp(dir / "a/snapshots.json") == slurp(dir / "b/snapshots.json"));
    const auto d = read_snapshots(dir / "a/snapshots.csv");
    CHECK(d.K() == 30);
}

TEST_CASE("simulate warns when K is below N") {
    const auto dir = scratch("simwarn");
    auto j = vdp_config();
    j["sampling"]["trajectories"] = 3;
    write_config(dir, "c.json", j);
    const auto r = run("simulate --config c.json --out o", dir);
    CHECK(r.code == 0);
    CHECK((r.out + r.err).find("< N = 10") != std::string::npos);
}

TEST_CASE("empty dataset is a configuration error") {
    const auto dir = scratch("empty");
    auto j = vdp_config();
    j["sampling"]["trajectories"] = 0;
    write_config(dir, "c.json", j);
    const auto r = run("simulate --config c.json --out o", dir);
    CHECK(r.code == 2);
    CHECK(r.err.find("empty") != std::string::npos);
}

TEST_CASE("unknown config keys are rejected before any work") {
    const auto dir = scratch("unknown");
    auto j = vdp_config();
    j["method"]["lamda"] = 0.1;
    write_config(dir, "c.json", j);
    const auto r = run("identify --config c.json --out o", dir);
    CHECK(r.code == 2);
    CHECK(r.err.find("method.lamda") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "o/model.json"));
    CHECK(run("identify --config nope.json --out o", dir).code == 4);
    CHECK(run("identify --bogus-flag", dir).code == 2);
}

TEST_CASE("identify, evaluate and a one-point sweep agree") {
    const auto dir = scratch("pipeline");
    auto j = vdp_config();
    j["evaluate"] = {{"predict_horizon", 5.0}, {"predict_points", 51}};
    write_config(dir, "c.json", j);
    REQUIRE(run("simulate --config c.json --seed 2 --out sim", dir).code == 0);
    REQUIRE(run("identify --config c.json --data sim/snapshots.csv --out id", dir).code == 0);
    const auto model = read_json_file(dir / "id/model.json");
    CHECK(model.contains("diagnostics"));
    CHECK(model["diagnostics"].contains("pinv"));
    CHECK(model["diagnostics"].contains("logm"));
    CHECK(fs::exists(dir / "id/timing.json"));
    // model round trip through the file
    const auto m = model_from_json(model);
    CHECK(model_from_json(read_json_file(dir / "id/model.json")) == m);

    REQUIRE(run("evaluate --config c.json --data sim/snapshots.csv --model id/model.json --out ev --predict", dir).code == 0);
    const std::string scores = slurp(dir / "ev/scores.csv");
    CHECK(scores.find("nrmse_f_fd") != std::string::npos);
    CHECK(slurp(dir / "ev/prediction.csv").rfind("t,reference_x1,reference_x2,predicted_x1,predicted_x2", 0) == 0);

    REQUIRE(run("sweep --config c.json --seed 2 --repeats 1 --out sw", dir).code == 0);
    std::istringstream runs(slurp(dir / "sw/runs.csv"));
    std::string header, row;
    std::getline(runs, header);
    std::getline(runs, row);
    // the nrmse column of the sweep matches the nrmse line of evaluate
    const auto nrmse_line = scores.substr(scores.find("\nnrmse,") + 7);
    const std::string value = nrmse_line.substr(0, nrmse_line.find('\n'));
    CHECK(row.find(",ok," + value + ",") != std::string::npos);
}

TEST_CASE("evaluating the truth scores zero") {
    const auto dir = scratch("truth");
    write_config(dir, "c.json", vdp_config());
    write_json_file(dir / "truth.json", model_to_json(van_der_pol().truth));
    REQUIRE(run("evaluate --config c.json --model truth.json --truth truth.json --out ev", dir).code == 0);
    const std::string s = slurp(dir / "ev/scores.csv");
    CHECK(s.find("rmse,0\n") != std::string::npos);
    CHECK(s.find("nrmse,0\n") != std::string::npos);
}

TEST_CASE("malformed snapshot CSV names the row") {
    const auto dir = scratch("malformed");
    write_config(dir, "c.json", vdp_config());
    REQUIRE(run("simulate --config c.json --out sim", dir).code == 0);
    std::string text = slurp(dir / "sim/snapshots.csv");
    std::size_t pos = 0;
    for (int i = 0; i < 5; ++i) pos = text.find('\n', pos) + 1;
    text.insert(text.find(',', pos) + 1, "zz");
    write_text_file(dir / "sim/snapshots.csv", text);
    const auto r = run("identify --config c.json --data sim/snapshots.csv --out id", dir);
    CHECK(r.code == 4);
    CHECK(r.err.find("row 6") != std::string::npos);
}

TEST_CASE("branch failures exit with the numerical code") {
    const auto dir = scratch("branch");
    auto j = vdp_config();
    j["system"] = json::parse(R"({"name": "linear", "A": [[0, 1], [-1, 0]]})");
    j["sampling"]["Ts"] = 3.141592653589793;
    j["noise"]["sigma_meas"] = 0.0;
    j["method"]["m"] = 1;
    j["method"]["m_F"] = 1;
    write_config(dir, "c.json", j);
    const auto r = run("identify --config c.json --out id", dir);
    CHECK(r.code == 3);
    CHECK(r.err.find("Ts") != std::string::npos);
}

TEST_CASE("network runs are reproducible") {
    const auto dir = scratch("network");
    auto j = json::parse(R"({
        "name": "net",
        "system": {"name": "polynet", "n": 6, "n_inter": 2},
        "sampling": {"Ts": 0.5, "pairs_per_trajectory": 2, "trajectories": 25, "box": [-0.5, 0.5]},
        "noise": {"sigma_meas": 0.0},
        "method": {"kind": "dual", "test_dictionary": {"kind": "rbf", "gamma": 0.01},
                   "branch_policy": "real_part", "rank_policy": "restrict"},
        "network": {"threshold": 0.05},
        "repeats": 2
    })");
    write_config(dir, "c.json", j);
    REQUIRE(run("network --config c.json --out a --workers 2", dir).code == 0);
    REQUIRE(run("network --config c.json --out b", dir).code == 0);
    for (const char* f : {"roc.csv", "runs.csv", "summary.csv", "adjacency.csv"}) {
        CAPTURE(f);
        CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
        CHECK_FALSE(slurp(dir / "a" / f).empty());
    }
    CHECK(run("network --config c.json --method main --out c", dir).code == 2);
}

TEST_CASE("a network without links has no AUROC") {
    const auto dir = scratch("nolinks");
    auto j = json::parse(R"({
        "name": "nolinks",
        "system": {"name": "kuramoto", "n": 4, "p_link": 1e-12},
        "sampling": {"Ts": 0.2, "pairs_per_trajectory": 5, "trajectories": 6, "box": [0, 6.283185307179586]},
        "method": {"kind": "dual", "branch_policy": "real_part", "rank_policy": "restrict"}
    })");
    write_config(dir, "c.json", j);
    const auto r = run("network --config c.json --out o", dir);
    CHECK(r.code == 3);
    CHECK(r.err.find("AUROC undefined") != std::string::npos);
}

TEST_CASE("log level comes from the environment") {
    const auto dir = scratch("log");
    write_config(dir, "c.json", vdp_config());
    setenv("KOOPMAN_LIFT_LOG", "debug", 1);
    const auto r = run("identify --config c.json --out id", dir);
    unsetenv("KOOPMAN_LIFT_LOG");
    CHECK(r.code == 0);
    CHECK(r.err.find("debug") != std::string::npos);
}
