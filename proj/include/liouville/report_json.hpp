#pragma once

#include <json.hpp>

#include "liouville/solvers.hpp"

namespace liouville {

nlohmann::json spectrum_to_json(const CriticalSpectrum& spec);
nlohmann::json applicability_to_json(const ApplicabilityReport& rep);
nlohmann::json solve_report_to_json(const SolveReport& rep);
nlohmann::json mass_report_to_json(const MassReport& rep);
nlohmann::json slopes_to_json(const BubbleSlopes& rep);
nlohmann::json mt_probe_to_json(const MtProbeReport& rep);
nlohmann::json minmax_to_json(const MinmaxResult& res);
nlohmann::json continuation_to_json(const ContinuationResult& res);
nlohmann::json green_sidecar_json(const GreenFunction& g);

void write_json_atomic(const nlohmann::json& j, const std::string& path);

}  // namespace liouville
