#include "uwbrtls/error.hpp"

namespace uwb {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedJson: return "malformed-json";
    case ErrorCode::kMissingField: return "missing-field";
    case ErrorCode::kUnknownKind: return "unknown-kind";
    case ErrorCode::kTicksOutOfRange: return "ticks-out-of-range";
    case ErrorCode::kNegativeSeq: return "negative-seq";
    case ErrorCode::kSeqOutOfRange: return "seq-out-of-range";
    case ErrorCode::kInvalidClock: return "invalid-clock";
    case ErrorCode::kInvalidTopology: return "invalid-topology";
    case ErrorCode::kInvalidScenario: return "invalid-scenario";
    case ErrorCode::kCollisionSchedule: return "collision-schedule";
    case ErrorCode::kDegenerateWindow: return "degenerate-window";
    case ErrorCode::kDriftAnomaly: return "drift-anomaly";
    case ErrorCode::kUnsynchronizedAnchor: return "unsynchronized-anchor";
    case ErrorCode::kStaleSync: return "stale-sync";
    case ErrorCode::kUnsyncableAnchor: return "unsyncable-anchor";
    case ErrorCode::kNoTimeBase: return "no-time-base";
    case ErrorCode::kInsufficientAnchors: return "insufficient-anchors";
    case ErrorCode::kAmbiguousSolution: return "ambiguous-solution";
    case ErrorCode::kSingularInnovation: return "singular-innovation";
    case ErrorCode::kEmptyEval: return "empty-eval";
    case ErrorCode::kConfig: return "config";
  }
  return "unknown";
}

namespace {

std::string join_orphans(const std::vector<std::string>& ids) {
  std::string out = "unsyncable anchors:";
  for (const auto& id : ids) {
    out += ' ';
    out += id;
  }
  return out;
}

}  // namespace

UnsyncableError::UnsyncableError(std::vector<std::string> orphans)
    : Error(ErrorCode::kUnsyncableAnchor, join_orphans(orphans)), orphans_(std::move(orphans)) {}

}  // namespace uwb
