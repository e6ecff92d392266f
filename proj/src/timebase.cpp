#include "uwbrtls/timebase.hpp"

#include <map>

#include "uwbrtls/error.hpp"

namespace uwb::timebase {

namespace {

std::optional<AnchorId> slave_following(const std::set<AnchorId>& receivers,
                                        const NetworkTopology& topo, const AnchorId& master) {
  for (const auto& id : receivers) {  // std::set iterates in id order
    if (!topo.is_master(id) && topo.followed(id).count(master)) return id;
  }
  return std::nullopt;
}

}  // namespace

AnchorId select_time_base(const std::set<AnchorId>& receivers, const NetworkTopology& topo) {
  const auto masters = topo.masters();

  if (masters.size() == 1) {
    const AnchorId& ma = masters.front();
    if (receivers.count(ma)) return ma;
    if (auto sa = slave_following(receivers, topo, ma)) return *sa;
    throw Error(ErrorCode::kNoTimeBase, "no receiver is synchronized to " + ma);
  }

  std::set<AnchorId> followed_by_slaves;
  bool every_slave_single = true;
  bool any_slave = false;
  std::optional<AnchorId> bridging;
  for (const auto& id : receivers) {
    if (!topo.has(id) || topo.is_master(id)) continue;
    any_slave = true;
    const auto& ms = topo.followed(id);
    followed_by_slaves.insert(ms.begin(), ms.end());
    if (ms.size() != 1) every_slave_single = false;
    if (ms.size() >= 2 && !bridging) bridging = id;
  }

  if (any_slave && every_slave_single && followed_by_slaves.size() == 1) {
    const AnchorId& ma = *followed_by_slaves.begin();
    if (receivers.count(ma)) return ma;
    if (auto sa = slave_following(receivers, topo, ma)) return *sa;
  }
  if (bridging) return *bridging;

  throw Error(ErrorCode::kNoTimeBase, "receivers span several masters without a bridging slave");
}

TdoaSet assemble_tdoa_set(std::span<const SyncedTdoa> synced, const AnchorId& reference) {
  if (synced.empty()) {
    throw Error(ErrorCode::kInsufficientAnchors, "no synchronized TDoAs");
  }
  TdoaSet out;
  out.tag_id = synced.front().tag_id;
  out.blink_seq = synced.front().blink_seq;
  out.reference_anchor = reference;

  std::map<AnchorId, double> by_anchor;
  for (const auto& t : synced) {
    if (t.anchor_b == reference && t.anchor_a != reference) {
      by_anchor.emplace(t.anchor_a, kSpeedOfLight * t.tdoa_sync);
    } else if (t.anchor_a == reference && t.anchor_b != reference) {
      by_anchor.emplace(t.anchor_b, -kSpeedOfLight * t.tdoa_sync);
    }
  }
  if (by_anchor.empty()) {
    throw Error(ErrorCode::kInsufficientAnchors, "reference " + reference + " not in synced set");
  }
  if (by_anchor.size() < 3) {
    throw Error(ErrorCode::kInsufficientAnchors,
                "only " + std::to_string(by_anchor.size()) + " range differences");
  }
  out.measurements.assign(by_anchor.begin(), by_anchor.end());
  return out;
}

TdoaSet build_tdoa_set(const SyncedBlink& blink, const NetworkTopology& topo,
                       const SyncParams& params) {
  const auto ids = blink.receivers();
  const std::set<AnchorId> receivers(ids.begin(), ids.end());
  const AnchorId reference = select_time_base(receivers, topo);
  std::vector<SyncedTdoa> synced;
  for (const auto& id : ids) {
    if (id != reference) synced.push_back(tdoa_between(blink, id, reference, params));
  }
  return assemble_tdoa_set(synced, reference);
}

}  // namespace uwb::timebase
