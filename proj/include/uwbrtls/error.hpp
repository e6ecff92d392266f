#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace uwb {

enum class ErrorCode {
  // protocol
  kMalformedJson,
  kMissingField,
  kUnknownKind,
  kTicksOutOfRange,
  kNegativeSeq,
  kSeqOutOfRange,
  // clock / topology / scenario
  kInvalidClock,
  kInvalidTopology,
  kInvalidScenario,
  kCollisionSchedule,
  // wcs
  kDegenerateWindow,
  kDriftAnomaly,
  kUnsynchronizedAnchor,
  kStaleSync,
  kUnsyncableAnchor,
  // timebase / solver
  kNoTimeBase,
  kInsufficientAnchors,
  kAmbiguousSolution,
  kSingularInnovation,
  // metrics / config
  kEmptyEval,
  kConfig,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Anchors that cannot be related to the primary master's timescale.
class UnsyncableError : public Error {
 public:
  explicit UnsyncableError(std::vector<std::string> orphans);

  const std::vector<std::string>& orphans() const noexcept { return orphans_; }

 private:
  std::vector<std::string> orphans_;
};

// Configuration problem tied to a named field of the scenario file.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(ErrorCode::kConfig, field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace uwb
