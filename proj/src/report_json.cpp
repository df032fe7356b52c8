#include "liouville/report_json.hpp"

#include <numbers>

#include "liouville/io_util.hpp"

namespace liouville {

using nlohmann::json;

namespace {
constexpr double kPi = std::numbers::pi;
}

json spectrum_to_json(const CriticalSpectrum& spec) {
    json out = json::array();
    for (const auto& e : spec.entries) {
        json prov = json::array();
        for (const auto& p : e.provenance) prov.push_back({{"n", p.n}, {"J", p.subset}});
        out.push_back({{"value_over_pi", e.value / kPi}, {"provenance", prov}});
    }
    return out;
}

json applicability_to_json(const ApplicabilityReport& rep) {
    return {{"orders_ok", rep.orders_ok},
            {"boundary_ok", rep.boundary_ok},
            {"supercritical", rep.supercritical},
            {"lambda", rep.lambda},
            {"lambda_over_pi", rep.lambda / kPi},
            {"nearest_critical_over_pi", rep.nearest_critical / kPi},
            {"distance_over_pi", rep.distance / kPi},
            {"lambda_ok", rep.lambda_ok},
            {"applicable", rep.applicable}};
}

json solve_report_to_json(const SolveReport& rep) {
    return {{"lambda", rep.lambda},
            {"lambda_over_pi", rep.lambda / kPi},
            {"J_value", rep.J_value},
            {"residual", rep.residual_norm},
            {"iterations", rep.iterations},
            {"strategy", rep.strategy},
            {"status", solve_status_name(rep.status)},
            {"max_v", rep.max_v},
            {"grid_index", rep.grid_index}};
}

json mass_report_to_json(const MassReport& rep) {
    json peaks = json::array();
    for (const auto& p : rep.peaks)
        peaks.push_back({{"vertex", p.vertex},
                         {"on_boundary", p.on_boundary},
                         {"cone_index", p.cone_index},
                         {"class", p.reference_class},
                         {"mass_over_pi", p.mass / kPi},
                         {"reference_over_pi", p.reference / kPi},
                         {"relative_gap", p.relative_gap}});
    return {{"lambda", rep.lambda},
            {"ball_radius", rep.ball_radius},
            {"captured_over_pi", rep.captured / kPi},
            {"peaks", peaks}};
}

json slopes_to_json(const BubbleSlopes& rep) {
    return {{"Lambda", rep.Lambda},
            {"dirichlet", rep.dirichlet},
            {"log_mass", rep.log_mass},
            {"J", rep.J},
            {"dirichlet_slope", rep.dirichlet_slope},
            {"dirichlet_slope_over_pi", rep.dirichlet_slope / kPi},
            {"mass_slope", rep.mass_slope},
            {"J_slope", rep.J_slope},
            {"J_slope_over_pi", rep.J_slope / kPi},
            {"dirichlet_fit_rms", rep.dirichlet_fit_rms},
            {"mass_fit_rms", rep.mass_fit_rms},
            {"J_fit_rms", rep.J_fit_rms},
            {"analytic_quadrature", rep.analytic}};
}

json mt_probe_to_json(const MtProbeReport& rep) {
    std::vector<bool> capped(rep.capped.begin(), rep.capped.end());
    return {{"level_h", rep.level_h},
            {"max_value", rep.max_value},
            {"ascent_max", rep.ascent_max},
            {"capped", capped},
            {"slope", rep.slope},
            {"divergent", rep.divergent}};
}

json minmax_to_json(const MinmaxResult& res) {
    json solutions = json::array();
    for (const auto& s : res.solutions) solutions.push_back(solve_report_to_json(s));
    json traces = json::array();
    for (const auto& t : res.traces)
        traces.push_back({{"grid_index", t.grid_index},
                          {"Lambda", t.Lambda},
                          {"offset", t.offset},
                          {"status", solve_status_name(t.status)},
                          {"iterations", t.iterations},
                          {"final_residual", t.final_residual},
                          {"duplicate", t.duplicate},
                          {"solution_index", t.solution_index}});
    return {{"solutions", solutions}, {"traces", traces}};
}

json continuation_to_json(const ContinuationResult& res) {
    json steps = json::array();
    for (const auto& s : res.steps) {
        json step = solve_report_to_json(s.report);
        step["masses"] = mass_report_to_json(s.masses);
        steps.push_back(std::move(step));
    }
    return {{"status", continuation_status_name(res.status)}, {"steps", steps}};
}

json green_sidecar_json(const GreenFunction& g) {
    return {{"pole", g.pole},
            {"mode", g.mode == GreenMode::Split ? "split" : "discrete_delta"},
            {"cutoff_radius", g.cutoff_radius},
            {"singular_coefficient", g.singular_coefficient}};
}

void write_json_atomic(const json& j, const std::string& path) {
    write_file_atomic(path, j.dump(2) + "\n");
}

}  // namespace liouville
