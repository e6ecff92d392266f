#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "uwbrtls/topology.hpp"
#include "uwbrtls/wcs.hpp"

namespace uwb {

/// Range differences of one blink against its time-base anchor.
struct TdoaSet {
  std::string tag_id;
  std::uint32_t blink_seq = 0;
  AnchorId reference_anchor;
  // (anchor, d_hat = |p - p_anchor| - |p - p_reference|) in meters
  std::vector<std::pair<AnchorId, double>> measurements;
};

namespace timebase {

/// Picks the reference anchor whose ToA is subtracted from all others.
///
///  - single master: the master, if it heard the blink;
///  - every receiving slave follows the same single master: that master;
///  - some receiving slave follows two or more masters: that slave (lowest id).
///
/// When the chosen master did not hear the blink, the lowest-id receiving
/// slave that follows it is used instead. Throws kNoTimeBase otherwise.
AnchorId select_time_base(const std::set<AnchorId>& receivers, const NetworkTopology& topo);

/// d_hat(i, ref) = c * tdoa_sync(i, ref) for every non-reference receiver.
/// Accepts pairs in either orientation. Throws kInsufficientAnchors when the
/// reference is absent or fewer than three differences remain.
TdoaSet assemble_tdoa_set(std::span<const SyncedTdoa> synced, const AnchorId& reference);

/// Convenience: select the time base for a synced blink and assemble its set.
TdoaSet build_tdoa_set(const SyncedBlink& blink, const NetworkTopology& topo,
                       const SyncParams& params = {});

}  // namespace timebase

}  // namespace uwb
