#pragma once

#include "decision.hpp"
#include "mapping.hpp"
#include "muck.hpp"
#include "physics.hpp"
#include "study.hpp"
#include "synthetic.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace tbm {

using json = nlohmann::json;

inline constexpr int kModelSchemaVersion = 1;

// 64-bit FNV-1a, rendered as "fnv1a64:<16 hex digits>".
std::string digest(std::string_view bytes);

json to_json(const PhysicsRules& rules);
PhysicsRules physics_from_json(const json& j);
std::string physics_digest(const PhysicsRules& rules);

GenConfig gen_config_from_json(const json& j);

json to_json(const Hyperparams& hp);
// Missing fields take the Table-4 defaults. A missing seed is an error when
// `require_seed` is set.
Hyperparams hyperparams_from_json(const json& j, bool require_seed);
Split split_from_json(const json& j);

json to_json(const Metrics& m);
json to_json(const MappingModel& model);
MappingModel model_from_json(const json& j);
std::string model_digest(const MappingModel& model);

json to_json(const TrainingReport& report);

json to_json(const RatedLimits& limits);
RatedLimits limits_from_json(const json& j, RatedLimits base = {});
json to_json(const CostModel& cm);
CostModel cost_from_json(const json& j, CostModel base = {});
json to_json(const GridSpec& grid);
GridSpec grid_from_json(const json& j, GridSpec base = {});
json to_json(const DecisionContext& ctx);
DecisionContext context_from_json(const json& j);

std::string_view to_string(DecisionStatus s);
json to_json(const DecisionResult& result);
void write_region_csv(std::ostream& os, const FeasibleRegion& region);

DeductionGrid deduction_grid_from_json(const json& j);
void write_deduction_csv(std::ostream& os, const DeductionStudy& study);
json to_json(const DeductionStudy& study);

json to_json(const MethodComparison& c);
json to_json(const MuckIndices& m);

std::vector<CuttingSample> read_cutting_csv(std::istream& is);
SieveAnalysis read_sieve_csv(std::istream& is);
std::vector<ParticleDims> read_particle_csv(std::istream& is);

// File helpers raising Io errors.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);
json read_json_file(const std::string& path);
json parse_json(std::string_view text, std::string_view what);

}  // namespace tbm
