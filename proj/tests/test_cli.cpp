#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "liouville/mesh.hpp"

#ifndef LIOUVILLE_CLI
#error "LIOUVILLE_CLI must point at the built binary"
#endif

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

int run_cli(const std::string& args) {
    std::string cmd = std::string(LIOUVILLE_CLI) + " " + args + " > /dev/null 2> /tmp/liouville_cli_err.txt";
    int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string fresh_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

}  // namespace

TEST_CASE("classify writes a report and exits cleanly") {
    std::string out = fresh_dir("cli_classify");
    REQUIRE(run_cli("classify --shape cylinder --refine 1 --cone 30:1.2 --out " + out) == 0);
    json rep = json::parse(slurp(out + "/classify_report.json"));
    CHECK(rep["classification"] == "supercritical");
    CHECK(rep["applicability"]["applicable"] == true);
    CHECK(rep["geometric_lambda_over_pi"].get<double>() == doctest::Approx(4.8));
    json manifest = json::parse(slurp(out + "/manifest.json"));
    CHECK(manifest["command"] == "classify");
    CHECK(manifest["config"]["mesh"]["shape"] == "cylinder");
}

TEST_CASE("usage errors exit with code 1") {
    CHECK(run_cli("definitely-not-a-command") == 1);
    CHECK(run_cli("solve --no-such-flag 3") == 1);
}

TEST_CASE("invalid cone order is rejected as a config error") {
    std::string out = fresh_dir("cli_badcone");
    CHECK(run_cli("classify --shape cylinder --refine 1 --cone 30:-1.5 --out " + out) == 1);
    json err = json::parse(slurp("/tmp/liouville_cli_err.txt"));
    CHECK(err["error"] == "validation");
}

TEST_CASE("identical config and seed produce byte-identical reports") {
    std::string out1 = fresh_dir("cli_repro1");
    std::string out2 = fresh_dir("cli_repro2");
    std::string args = "solve --shape cylinder --refine 2 --lambda-pi 2 --strategy min --seed 7 --out ";
    REQUIRE(run_cli(args + out1) == 0);
    REQUIRE(run_cli(args + out2) == 0);
    CHECK(slurp(out1 + "/report.json") == slurp(out2 + "/report.json"));
    CHECK(slurp(out1 + "/solution.field.txt") == slurp(out2 + "/solution.field.txt"));

    std::string s1 = fresh_dir("cli_repro_s1");
    std::string s2 = fresh_dir("cli_repro_s2");
    std::string sargs = "spectrum --shape cylinder --refine 0 --cone 14:0.25 --lambda-pi 11 --out ";
    REQUIRE(run_cli(sargs + s1) == 0);
    REQUIRE(run_cli(sargs + s2) == 0);
    CHECK(slurp(s1 + "/spectrum.json") == slurp(s2 + "/spectrum.json"));
}

TEST_CASE("config file keys are overridden by flags") {
    std::string out = fresh_dir("cli_config");
    std::string cfg_path = out + "/run.json";
    {
        std::ofstream cfg(cfg_path);
        cfg << R"({"mesh": {"shape": "cylinder", "refinement": 1},
                   "lambda_over_pi": 2.0, "strategy": "min", "tol": 1e-8})";
    }
    REQUIRE(run_cli("solve --config " + cfg_path + " --lambda-pi 1.5 --out " + out) == 0);
    json rep = json::parse(slurp(out + "/report.json"));
    CHECK(rep["lambda_over_pi"].get<double>() == doctest::Approx(1.5));
}

TEST_CASE("check verifies a solved field") {
    std::string out = fresh_dir("cli_check");
    REQUIRE(run_cli("solve --shape cylinder --refine 2 --lambda-pi 2 --strategy min --out " + out) == 0);
    REQUIRE(run_cli("check --shape cylinder --refine 2 --lambda-pi 2 --field " + out +
                    "/solution.field.txt --out " + out) == 0);
    json rep = json::parse(slurp(out + "/check_report.json"));
    CHECK(rep["residual"].get<double>() <= 1e-8);
    CHECK(rep["gauss_bonnet"]["relative_error"].get<double>() <= 1e-12);
}

TEST_CASE("spectrum command emits provenance") {
    std::string out = fresh_dir("cli_spectrum");
    REQUIRE(run_cli("spectrum --shape cylinder --refine 0 --cone 14:-0.5 --lambda-pi 9 --out " + out) == 0);
    json spec = json::parse(slurp(out + "/spectrum.json"));
    REQUIRE(spec.size() == 3);
    CHECK(spec[1]["value_over_pi"].get<double>() == doctest::Approx(4.0));
    CHECK(spec[1]["provenance"].size() == 2);
}

TEST_CASE("unreachable tolerance is a structured solver failure with exit 2") {
    std::string out = fresh_dir("cli_fail");
    int rc = run_cli(
        "solve --shape cylinder --refine 1 --cone 30:1.2 --lambda-pi 4.8 --strategy minmax "
        "--k 1 --tol 1e-30 --grid 1:10 --out " + out);
    CHECK(rc == 2);
    json rep = json::parse(slurp(out + "/report.json"));
    CHECK(rep["solutions"].empty());
    CHECK(rep["traces"].size() == 1);  // per-start trace present even on failure
}

TEST_CASE("solve dispatches --strategy continue to the continuation") {
    std::string out = fresh_dir("cli_strategy_continue");
    REQUIRE(run_cli("solve --shape cylinder --refine 1 --lambda-path 2:2.2 --strategy continue --out " +
                    out) == 0);
    json rep = json::parse(slurp(out + "/continuation.json"));
    CHECK(rep["status"] == "reached_end");
    CHECK(rep["steps"].size() >= 2);
}

TEST_CASE("classify reads cone markers from a mesh file") {
    std::string out = fresh_dir("cli_meshfile");
    std::string mesh_path = out + "/cyl.mesh";
    {
        // export a generated cylinder with a cone through the library writer
        liouville::SurfaceMesh mesh = liouville::generate(liouville::Shape::Cylinder, 1);
        mesh.cones = {{liouville::nearest_vertex(mesh, {1.0, 0.0, 0.5}), 1.2}};
        mesh.finalize();
        liouville::write_mesh(mesh, mesh_path);
    }
    REQUIRE(run_cli("classify --mesh " + mesh_path + " --out " + out) == 0);
    json rep = json::parse(slurp(out + "/classify_report.json"));
    CHECK(rep["classification"] == "supercritical");
    CHECK(rep["singular_euler"].get<double>() == doctest::Approx(1.2));
}

TEST_CASE("green command writes the field and sidecar") {
    std::string out = fresh_dir("cli_green");
    REQUIRE(run_cli("green --shape disk --refine 2 --pole 0 --out " + out) == 0);
    json side = json::parse(slurp(out + "/green_0.json"));
    CHECK(side["pole"] == 0);
    CHECK(side["mode"] == "split");
    CHECK(side["cutoff_radius"].get<double>() > 0);
    CHECK(fs::exists(out + "/green_0.field.txt"));
}
