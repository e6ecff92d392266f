#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "uwbrtls/deploy.hpp"
#include "uwbrtls/metrics.hpp"
#include "uwbrtls/pipeline.hpp"
#include "uwbrtls/simnet.hpp"

namespace uwb {

/// Everything one scenario file describes.
struct ScenarioConfig {
  Scenario scenario;
  LocateParams locate;
  EvalConfig eval;
  Site site;
  double hdop_resolution = 0.5;
  std::optional<AnchorId> hdop_reference;
  std::string out_dir = "out";
};

namespace config {

/// Throws ConfigError naming the offending field, e.g. "anchors[2].follows".
ScenarioConfig parse(const nlohmann::json& j);
ScenarioConfig parse_text(std::string_view text);
ScenarioConfig load(const std::string& path);

nlohmann::ordered_json to_json(const ScenarioConfig& cfg);

/// Keeps derived parameters (timer, CCP period) consistent with the scenario.
void sync_derived(ScenarioConfig& cfg);

/// The rectangular single-master setup: MA1 + SA1..SA3 on the corners of a
/// 6 m x 4 m room, one static tag, random clock offsets and skews.
ScenarioConfig demo_config(std::uint64_t seed = 42);

}  // namespace config

}  // namespace uwb
