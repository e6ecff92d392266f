#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "uwbrtls/simnet.hpp"
#include "uwbrtls/solver.hpp"
#include "uwbrtls/wcs.hpp"

namespace uwb {

struct EvalConfig {
  std::size_t warmup = 50;  // samples discarded per stream before stds and fix errors
  TdoaKalman smoother;
};

struct EvalSummary {
  std::map<std::pair<AnchorId, AnchorId>, double> tdoa_std_per_pair;  // seconds, a < b
  double fix_rmse = 0.0;       // meters, after warm-up
  double fix_p95_error = 0.0;  // meters, after warm-up
  double track_rmse = 0.0;     // meters, all matched fixes
  double availability = 0.0;   // matched fixes / truth blinks
  std::size_t matched_fixes = 0;
  std::size_t truth_blinks = 0;
};

struct FixError {
  std::string tag_id;
  std::uint32_t blink_seq = 0;
  double error_m = 0.0;
};

namespace metrics {

/// Euclidean error of every fix against its blink's true position, sorted by
/// (tag, seq). Missing truth seqs are linearly interpolated from neighbours.
std::vector<FixError> fix_errors(const std::vector<Fix>& fixes,
                                 const std::vector<BlinkTruth>& truth);

/// Throws kEmptyEval when no fix overlaps the truth log.
EvalSummary evaluate(const std::vector<Fix>& fixes, const std::vector<BlinkTruth>& truth,
                     const std::vector<SyncedTdoa>& synced, const EvalConfig& cfg = {});

nlohmann::ordered_json to_json(const EvalSummary& summary);
std::string errors_csv(const std::vector<FixError>& errors);

/// Nearest-rank percentile, q in [0, 1].
double percentile(std::vector<double> values, double q);

}  // namespace metrics

}  // namespace uwb
