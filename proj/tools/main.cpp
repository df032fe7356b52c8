// Command-line front end: classify, spectrum, green, solve, continue, bubble,
// blowup, check. Configuration comes from an optional JSON document with
// command-line flags taking precedence; every run writes a manifest with the
// resolved configuration next to its reports.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <numbers>
#include <optional>

#include "liouville/errors.hpp"
#include "liouville/io_util.hpp"
#include "liouville/report_json.hpp"
#include "liouville/version.hpp"

using namespace liouville;
using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

struct RunConfig {
    std::string mesh_file;
    std::string shape = "cylinder";
    int refinement = 3;
    std::vector<std::pair<int, double>> cones;
    double K_const = 1.0;
    std::string K_file;
    std::optional<double> lambda;
    std::optional<double> lambda_over_pi;
    std::vector<double> lambda_path;  // two entries, units of pi when *_over_pi
    std::vector<double> lambda_path_over_pi;
    std::string strategy = "min";
    int k = -1;
    double tol = 1e-8;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    int boundary_component = 1;
    std::string green_mode = "split";
    double mass_radius = 1.0;
    std::vector<double> Lambda_list{1e2, 1e3, 1e4};
    std::vector<double> atom_positions;  // arc fractions on the distinguished loop
    std::vector<double> atom_weights;
    int grid_rotations = 8;
    std::vector<double> grid_Lambdas{10.0, 100.0, 1000.0};
    double grid_jitter = 0.0;
    int pole = -1;
    std::string field_file;

    double resolve_lambda(double fallback_over_pi = 0.0) const {
        if (lambda) return *lambda;
        if (lambda_over_pi) return *lambda_over_pi * kPi;
        return fallback_over_pi * kPi;
    }
    std::pair<double, double> resolve_path() const {
        if (lambda_path.size() == 2) return {lambda_path[0], lambda_path[1]};
        if (lambda_path_over_pi.size() == 2)
            return {lambda_path_over_pi[0] * kPi, lambda_path_over_pi[1] * kPi};
        throw ValidationError("a lambda path a:b is required for this command");
    }
};

void apply_config_file(RunConfig& cfg, const std::string& path) {
    json j = json::parse(read_file(path));
    if (j.contains("mesh")) {
        const auto& m = j["mesh"];
        if (m.contains("file")) cfg.mesh_file = m["file"].get<std::string>();
        if (m.contains("shape")) cfg.shape = m["shape"].get<std::string>();
        if (m.contains("refinement")) cfg.refinement = m["refinement"].get<int>();
    }
    if (j.contains("cones"))
        for (const auto& c : j["cones"])
            cfg.cones.emplace_back(c.at("vertex").get<int>(), c.at("alpha").get<double>());
    if (j.contains("K")) {
        if (j["K"].is_number())
            cfg.K_const = j["K"].get<double>();
        else if (j["K"].contains("file"))
            cfg.K_file = j["K"]["file"].get<std::string>();
    }
    if (j.contains("lambda")) cfg.lambda = j["lambda"].get<double>();
    if (j.contains("lambda_over_pi")) cfg.lambda_over_pi = j["lambda_over_pi"].get<double>();
    if (j.contains("lambda_path")) cfg.lambda_path = j["lambda_path"].get<std::vector<double>>();
    if (j.contains("lambda_path_over_pi"))
        cfg.lambda_path_over_pi = j["lambda_path_over_pi"].get<std::vector<double>>();
    if (j.contains("strategy")) cfg.strategy = j["strategy"].get<std::string>();
    if (j.contains("k")) cfg.k = j["k"].get<int>();
    if (j.contains("tol")) cfg.tol = j["tol"].get<double>();
    if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("boundary_component")) cfg.boundary_component = j["boundary_component"].get<int>();
    if (j.contains("green_mode")) cfg.green_mode = j["green_mode"].get<std::string>();
    if (j.contains("mass_radius")) cfg.mass_radius = j["mass_radius"].get<double>();
    if (j.contains("Lambda_list")) cfg.Lambda_list = j["Lambda_list"].get<std::vector<double>>();
    if (j.contains("atoms")) {
        cfg.atom_positions.clear();
        cfg.atom_weights.clear();
        for (const auto& a : j["atoms"]) {
            cfg.atom_positions.push_back(a.at("position").get<double>());
            cfg.atom_weights.push_back(a.value("weight", 0.0));
        }
    }
    if (j.contains("grid")) {
        const auto& g = j["grid"];
        if (g.contains("rotations")) cfg.grid_rotations = g["rotations"].get<int>();
        if (g.contains("Lambdas")) cfg.grid_Lambdas = g["Lambdas"].get<std::vector<double>>();
        if (g.contains("jitter")) cfg.grid_jitter = g["jitter"].get<double>();
    }
    if (j.contains("pole")) cfg.pole = j["pole"].get<int>();
    if (j.contains("field")) cfg.field_file = j["field"].get<std::string>();
}

json config_echo(const RunConfig& cfg) {
    json cones = json::array();
    for (auto [v, a] : cfg.cones) cones.push_back({{"vertex", v}, {"alpha", a}});
    json mesh = cfg.mesh_file.empty()
                    ? json{{"shape", cfg.shape}, {"refinement", cfg.refinement}}
                    : json{{"file", cfg.mesh_file}};
    json j{{"mesh", mesh},
           {"cones", cones},
           {"strategy", cfg.strategy},
           {"tol", cfg.tol},
           {"out_dir", cfg.out_dir},
           {"seed", cfg.seed},
           {"boundary_component", cfg.boundary_component},
           {"green_mode", cfg.green_mode},
           {"mass_radius", cfg.mass_radius},
           {"grid",
            {{"rotations", cfg.grid_rotations},
             {"Lambdas", cfg.grid_Lambdas},
             {"jitter", cfg.grid_jitter}}},
           {"Lambda_list", cfg.Lambda_list}};
    j["K"] = cfg.K_file.empty() ? json(cfg.K_const) : json{{"file", cfg.K_file}};
    if (cfg.lambda) j["lambda"] = *cfg.lambda;
    if (cfg.lambda_over_pi) j["lambda_over_pi"] = *cfg.lambda_over_pi;
    if (cfg.lambda_path.size() == 2) j["lambda_path"] = cfg.lambda_path;
    if (cfg.lambda_path_over_pi.size() == 2) j["lambda_path_over_pi"] = cfg.lambda_path_over_pi;
    if (cfg.k >= 0) j["k"] = cfg.k;
    if (cfg.pole >= 0) j["pole"] = cfg.pole;
    if (!cfg.field_file.empty()) j["field"] = cfg.field_file;
    if (!cfg.atom_positions.empty()) {
        json atoms = json::array();
        for (size_t i = 0; i < cfg.atom_positions.size(); ++i)
            atoms.push_back({{"position", cfg.atom_positions[i]},
                             {"weight", i < cfg.atom_weights.size() ? cfg.atom_weights[i] : 0.0}});
        j["atoms"] = atoms;
    }
    return j;
}

struct Runner {
    RunConfig cfg;
    std::string command;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    std::vector<std::string> outputs;
    json summary;

    SurfaceMesh load() const {
        SurfaceMesh mesh = cfg.mesh_file.empty() ? generate(shape_from_name(cfg.shape), cfg.refinement)
                                                 : load_mesh(cfg.mesh_file);
        if (!cfg.cones.empty()) {
            mesh.cones.clear();
            for (auto [v, a] : cfg.cones) mesh.cones.push_back({v, a});
            mesh.finalize();
        }
        return mesh;
    }

    ConeSet cone_set(const SurfaceMesh& mesh) const { return make_cone_set(mesh, mesh.cones); }

    Field curvature_field(const SurfaceMesh& mesh) const {
        if (!cfg.K_file.empty()) {
            Field K = read_field(cfg.K_file);
            if (K.size() != mesh.vertex_count())
                throw ValidationError("K field size does not match the mesh");
            return K;
        }
        return Field::Constant(1, cfg.K_const);
    }

    GreenMode mode() const {
        if (cfg.green_mode == "split") return GreenMode::Split;
        if (cfg.green_mode == "discrete_delta") return GreenMode::DiscreteDelta;
        throw ValidationError("green_mode must be split or discrete_delta, got " + cfg.green_mode);
    }

    std::string path(const std::string& name) {
        outputs.push_back(name);
        return (std::filesystem::path(cfg.out_dir) / name).string();
    }

    void write_manifest() {
        double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        json manifest{{"command", command},
                      {"config", config_echo(cfg)},
                      {"versions",
                       {{"liouville", kVersion},
                        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                      std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                      std::to_string(EIGEN_MINOR_VERSION)}}},
                      {"timings", {{"wall_seconds", secs}}},
                      {"outputs", outputs},
                      {"summary", summary}};
        write_json_atomic(manifest,
                          (std::filesystem::path(cfg.out_dir) / "manifest.json").string());
    }
};

int cmd_classify(Runner& run) {
    SurfaceMesh mesh = run.load();
    ConeSet cones = run.cone_set(mesh);
    double chi = singular_euler(mesh, cones);
    double tau = trudinger_constant(cones);
    Criticality cls = classify(mesh, cones);
    double lam_geo = geometric_lambda(mesh, cones);
    double gamma_max = std::max(2.0 * std::abs(lam_geo), 8.0 * kPi);
    CriticalSpectrum spec = critical_values(cones, gamma_max);
    ApplicabilityReport app = theorem_applicability(mesh, cones, lam_geo);

    json rep{{"euler_characteristic", euler_characteristic(mesh)},
             {"boundary_components", mesh.boundary_loop_count()},
             {"singular_euler", chi},
             {"trudinger_constant", tau},
             {"classification", criticality_name(cls)},
             {"geometric_lambda", lam_geo},
             {"geometric_lambda_over_pi", lam_geo / kPi},
             {"critical_values", spectrum_to_json(spec)},
             {"applicability", applicability_to_json(app)}};
    write_json_atomic(rep, run.path("classify_report.json"));
    run.summary = {{"classification", criticality_name(cls)}, {"applicable", app.applicable}};

    std::printf("chi(M,alpha) = %.6g, tau(M,alpha) = %.6g -> %s\n", chi, tau,
                criticality_name(cls).c_str());
    std::printf("geometric lambda = %.6g (%.6g pi)\n", lam_geo, lam_geo / kPi);
    std::printf("existence hypotheses %s\n", app.applicable ? "satisfied" : "not satisfied");
    return 0;
}

int cmd_spectrum(Runner& run) {
    SurfaceMesh mesh = run.load();
    ConeSet cones = run.cone_set(mesh);
    double lam_max = run.cfg.resolve_lambda(10.0);
    CriticalSpectrum spec = critical_values(cones, lam_max);
    write_json_atomic(spectrum_to_json(spec), run.path("spectrum.json"));
    run.summary = {{"count", spec.entries.size()}};
    return 0;
}

int cmd_green(Runner& run) {
    SurfaceMesh mesh = run.load();
    FemOperators ops = assemble(mesh);
    std::vector<int> poles;
    if (run.cfg.pole >= 0)
        poles.push_back(run.cfg.pole);
    else
        for (const auto& c : mesh.cones) poles.push_back(c.vertex);
    if (poles.empty()) throw ValidationError("no pole: give --pole or mark cones on the mesh");
    for (int p : poles) {
        GreenFunction g = compute_green(mesh, ops, p, run.mode());
        write_field(g.regular_part, run.path("green_" + std::to_string(p) + ".field.txt"));
        write_json_atomic(green_sidecar_json(g),
                          run.path("green_" + std::to_string(p) + ".json"));
    }
    run.summary = {{"poles", poles}};
    return 0;
}

ProblemData build_problem(const Runner& run, const SurfaceMesh& mesh, double lambda) {
    SurfaceMesh copy = mesh;
    return make_problem(std::move(copy), run.curvature_field(mesh), mesh.cones, lambda,
                        run.mode());
}

int cmd_continue(Runner& run, bool blowup_mode);

int cmd_solve(Runner& run) {
    if (run.cfg.strategy == "continue") return cmd_continue(run, false);
    SurfaceMesh mesh = run.load();
    ConeSet cones = run.cone_set(mesh);
    double lambda = run.cfg.resolve_lambda(geometric_lambda(mesh, cones) / kPi);
    ProblemData data = build_problem(run, mesh, lambda);

    if (run.cfg.strategy == "min") {
        MinimizeOptions opts;
        opts.tol = run.cfg.tol;
        SolveReport rep = minimize(data, Field::Zero(mesh.vertex_count()), opts);
        write_field(rep.v, run.path("solution.field.txt"));
        json jrep = solve_report_to_json(rep);
        jrep["mass_summary"] = mass_report_to_json(mass_spectrum(data, rep.v, run.cfg.mass_radius));
        write_json_atomic(jrep, run.path("report.json"));
        run.summary = {{"status", solve_status_name(rep.status)}, {"residual", rep.residual_norm}};
        return rep.status == SolveStatus::Converged ? 0 : 2;
    }
    if (run.cfg.strategy == "minmax") {
        int k = run.cfg.k >= 0 ? run.cfg.k : static_cast<int>(std::floor(lambda / (4 * kPi)));
        MinmaxGrid grid;
        grid.rotations = run.cfg.grid_rotations;
        grid.Lambdas = run.cfg.grid_Lambdas;
        grid.boundary_label = run.cfg.boundary_component;
        grid.jitter = run.cfg.grid_jitter;
        grid.seed = run.cfg.seed;
        NewtonOptions opts;
        opts.tol = run.cfg.tol;
        MinmaxResult res = solve_minmax(data, k, grid, opts);
        json jrep = minmax_to_json(res);
        for (size_t i = 0; i < res.solutions.size(); ++i) {
            std::string name = "solution_" + std::to_string(i) + ".field.txt";
            write_field(res.solutions[i].v, run.path(name));
            jrep["solutions"][i]["field_file"] = name;
            jrep["solutions"][i]["mass_summary"] = mass_report_to_json(
                mass_spectrum(data, res.solutions[i].v, run.cfg.mass_radius));
        }
        write_json_atomic(jrep, run.path("report.json"));
        run.summary = {{"solutions", res.solutions.size()}};
        if (!res.solutions.empty())
            run.summary["first_successful_grid_index"] = res.solutions.front().grid_index;
        return res.solutions.empty() ? 2 : 0;
    }
    throw ValidationError("strategy must be min or minmax for solve, got " + run.cfg.strategy);
}

int cmd_continue(Runner& run, bool blowup_mode) {
    SurfaceMesh mesh = run.load();
    auto [a, b] = run.cfg.resolve_path();
    ProblemData data = build_problem(run, mesh, a);
    ContinuationPolicy pol;
    pol.tol = run.cfg.tol;
    pol.mass_radius = run.cfg.mass_radius;
    if (!run.cfg.field_file.empty()) {
        pol.init = read_field(run.cfg.field_file);
        pol.track_minimum = false;  // saddle tracking from the given state
    }
    ContinuationResult res = continuation(data, a, b, pol);
    write_json_atomic(continuation_to_json(res), run.path("continuation.json"));
    if (!res.steps.empty()) {
        write_field(res.steps.back().report.v, run.path("solution.field.txt"));
        write_json_atomic(mass_report_to_json(res.steps.back().masses),
                          run.path("mass_report.json"));
    }
    run.summary = {{"status", continuation_status_name(res.status)},
                   {"steps", res.steps.size()}};
    if (blowup_mode) {
        bool concentrated = !res.steps.empty() && !res.steps.back().masses.peaks.empty();
        run.summary["blow_up_detected"] = res.status == ContinuationStatus::BlowUp;
        run.summary["terminal_peaks"] = concentrated ? res.steps.back().masses.peaks.size() : 0;
    }
    return res.status == ContinuationStatus::StepFloor ? 2 : 0;
}

int cmd_bubble(Runner& run) {
    SurfaceMesh mesh = run.load();
    ConeSet cones = run.cone_set(mesh);
    double lambda = run.cfg.resolve_lambda(geometric_lambda(mesh, cones) / kPi);
    ProblemData data = build_problem(run, mesh, lambda);

    std::vector<double> pos = run.cfg.atom_positions.empty() ? std::vector<double>{0.0}
                                                             : run.cfg.atom_positions;
    const auto& loop = data.mesh().boundary_loops.at(run.cfg.boundary_component - 1);
    (void)loop;
    BarycenterConfig sigma;
    sigma.order = static_cast<int>(pos.size());
    for (size_t i = 0; i < pos.size(); ++i) {
        auto pts = boundary_positions(data.mesh(), run.cfg.boundary_component, 1, pos[i]);
        double w = i < run.cfg.atom_weights.size() && run.cfg.atom_weights[i] > 0
                       ? run.cfg.atom_weights[i]
                       : 1.0 / pos.size();
        sigma.atoms.push_back({w, pts[0]});
    }
    sigma = sigma.normalized();

    BubbleSlopes rep = bubble_energy_report(data, sigma, run.cfg.Lambda_list);
    write_json_atomic(slopes_to_json(rep), run.path("slopes.json"));
    Field phi = bubble_field(data, sigma, run.cfg.Lambda_list.back());
    write_field(phi, run.path("bubble.field.txt"));
    run.summary = {{"dirichlet_slope_over_pi", rep.dirichlet_slope / kPi},
                   {"mass_slope", rep.mass_slope},
                   {"J_slope_over_pi", rep.J_slope / kPi}};
    return 0;
}

int cmd_check(Runner& run) {
    SurfaceMesh mesh = run.load();
    ConeSet cones = run.cone_set(mesh);
    if (run.cfg.field_file.empty()) throw ValidationError("check needs --field <solution file>");
    double lambda = run.cfg.resolve_lambda(geometric_lambda(mesh, cones) / kPi);
    ProblemData data = build_problem(run, mesh, lambda);
    Field v = read_field(run.cfg.field_file);
    if (v.size() != mesh.vertex_count()) throw ValidationError("field size does not match the mesh");
    v = data.ops().zero_mean(v);

    json rep{{"lambda", lambda},
             {"lambda_over_pi", lambda / kPi},
             {"J_value", functional(data, v)},
             {"residual", residual(data, v)},
             {"max_v", v.maxCoeff()},
             {"mass_summary", mass_report_to_json(mass_spectrum(data, v, run.cfg.mass_radius))}};
    if (lambda > 0) {
        MetricResult m = to_metric(data, v);
        double achieved = std::exp(log_weighted_mass(data.weight(), Field(v.array() + m.shift)));
        rep["gauss_bonnet"] = {{"target", lambda},
                               {"achieved", achieved},
                               {"relative_error", std::abs(achieved - lambda) / lambda}};
        Field K = run.curvature_field(mesh);
        if (K.size() == 1) K = Field::Constant(mesh.vertex_count(), K[0]);
        CurvatureReport cur = curvature_check(mesh, cones, m.u, K);
        rep["curvature"] = {{"compared_vertices", cur.compared_count},
                            {"max_abs_dev", cur.max_abs_dev},
                            {"mean_abs_dev", cur.mean_abs_dev}};
    }
    write_json_atomic(rep, run.path("check_report.json"));
    run.summary = {{"residual", rep["residual"]}};
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"singular mean-field Liouville solver"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string config_file;
    std::vector<std::string> cone_args;
    std::string K_arg, lambda_path_arg, grid_arg;

    app.add_option("--config", config_file, "JSON configuration file");
    app.add_option("--mesh", cfg.mesh_file, "mesh file");
    app.add_option("--shape", cfg.shape, "generated shape: disk | cylinder | pair_of_pants");
    app.add_option("--refine", cfg.refinement, "refinement level of the generated shape");
    app.add_option("--cone", cone_args, "cone as vertex:alpha (repeatable)");
    app.add_option("--K", K_arg, "prescribed curvature: constant or field file");
    auto* lam = app.add_option("--lambda", "lambda value");
    auto* lam_pi = app.add_option("--lambda-pi", "lambda in units of pi");
    app.add_option("--lambda-path", lambda_path_arg, "continuation path a:b (units of pi)");
    app.add_option("--k", cfg.k, "barycenter order for minmax");
    app.add_option("--tol", cfg.tol, "solver tolerance");
    app.add_option("--strategy", cfg.strategy, "min | minmax");
    app.add_option("--out", cfg.out_dir, "output directory");
    app.add_option("--seed", cfg.seed, "random seed (grid jitter, probe starts)");
    app.add_option("--boundary-component", cfg.boundary_component,
                   "label of the distinguished boundary loop");
    app.add_option("--mode", cfg.green_mode, "green mode: split | discrete_delta");
    app.add_option("--radius", cfg.mass_radius, "mass spectrum ball radius");
    app.add_option("--Lambda", cfg.Lambda_list, "bubble scale sweep");
    app.add_option("--positions", cfg.atom_positions, "bubble atom arc fractions on the loop");
    app.add_option("--weights", cfg.atom_weights, "bubble atom weights");
    app.add_option("--grid", grid_arg, "minmax grid as rotations:L1,L2,...");
    app.add_option("--pole", cfg.pole, "green pole vertex");
    app.add_option("--field", cfg.field_file, "field file for check");

    auto* c_classify = app.add_subcommand("classify", "criticality and existence hypotheses");
    auto* c_spectrum = app.add_subcommand("spectrum", "critical values up to lambda");
    auto* c_green = app.add_subcommand("green", "Neumann Green's functions at cone poles");
    auto* c_solve = app.add_subcommand("solve", "solve the mean-field equation");
    auto* c_continue = app.add_subcommand("continue", "lambda continuation");
    auto* c_bubble = app.add_subcommand("bubble", "bubble fields and energy slopes");
    auto* c_blowup = app.add_subcommand("blowup", "continuation with blow-up detection");
    auto* c_check = app.add_subcommand("check", "verify a solution field");
    for (auto* sub : {c_classify, c_spectrum, c_green, c_solve, c_continue, c_bubble, c_blowup, c_check})
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << json{{"error", "usage"}, {"message", e.what()}}.dump() << "\n";
        return 1;
    }

    try {
        if (!config_file.empty()) apply_config_file(cfg, config_file);
        // flags win over config values
        for (const auto& c : cone_args) {
            auto sep = c.find(':');
            if (sep == std::string::npos) throw ValidationError("cone must be vertex:alpha");
            cfg.cones.emplace_back(std::stoi(c.substr(0, sep)), std::stod(c.substr(sep + 1)));
        }
        if (!K_arg.empty()) {
            try {
                size_t used = 0;
                double value = std::stod(K_arg, &used);
                if (used == K_arg.size())
                    cfg.K_const = value;
                else
                    cfg.K_file = K_arg;
            } catch (const std::invalid_argument&) {
                cfg.K_file = K_arg;
            }
        }
        if (lam->count()) cfg.lambda = lam->as<double>();
        if (lam_pi->count()) cfg.lambda_over_pi = lam_pi->as<double>();
        if (!lambda_path_arg.empty()) {
            auto sep = lambda_path_arg.find(':');
            if (sep == std::string::npos) throw ValidationError("lambda path must be a:b");
            cfg.lambda_path_over_pi = {std::stod(lambda_path_arg.substr(0, sep)),
                                       std::stod(lambda_path_arg.substr(sep + 1))};
        }
        if (!grid_arg.empty()) {
            auto sep = grid_arg.find(':');
            cfg.grid_rotations = std::stoi(grid_arg.substr(0, sep));
            cfg.grid_Lambdas.clear();
            std::string rest = sep == std::string::npos ? "" : grid_arg.substr(sep + 1);
            size_t start = 0;
            while (start < rest.size()) {
                auto comma = rest.find(',', start);
                cfg.grid_Lambdas.push_back(std::stod(rest.substr(start, comma - start)));
                if (comma == std::string::npos) break;
                start = comma + 1;
            }
        }

        std::filesystem::create_directories(cfg.out_dir);
        Runner run{cfg};
        int rc = 0;
        if (c_classify->parsed()) {
            run.command = "classify";
            rc = cmd_classify(run);
        } else if (c_spectrum->parsed()) {
            run.command = "spectrum";
            rc = cmd_spectrum(run);
        } else if (c_green->parsed()) {
            run.command = "green";
            rc = cmd_green(run);
        } else if (c_solve->parsed()) {
            run.command = "solve";
            rc = cmd_solve(run);
        } else if (c_continue->parsed()) {
            run.command = "continue";
            rc = cmd_continue(run, false);
        } else if (c_blowup->parsed()) {
            run.command = "blowup";
            rc = cmd_continue(run, true);
        } else if (c_bubble->parsed()) {
            run.command = "bubble";
            rc = cmd_bubble(run);
        } else if (c_check->parsed()) {
            run.command = "check";
            rc = cmd_check(run);
        }
        run.write_manifest();
        return rc;
    } catch (const ParseError& e) {
        std::cerr << json{{"error", "parse"}, {"message", e.what()}, {"line", e.line}}.dump()
                  << "\n";
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << json{{"error", "validation"}, {"message", e.what()}}.dump() << "\n";
        return 1;
    } catch (const PreconditionError& e) {
        std::cerr << json{{"error", "precondition"}, {"message", e.what()}}.dump() << "\n";
        return 1;
    } catch (const SolverError& e) {
        std::cerr << json{{"error", "solver"}, {"message", e.what()}}.dump() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", "internal"}, {"message", e.what()}}.dump() << "\n";
        return 2;
    }
}
