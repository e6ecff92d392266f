#include "uwbrtls/topology.hpp"

#include <algorithm>
#include <cmath>

#include "uwbrtls/error.hpp"

namespace uwb {

namespace {

const std::set<AnchorId> kNoMasters;

}  // namespace

bool NetworkTopology::has(const AnchorId& id) const {
  return std::any_of(anchors.begin(), anchors.end(),
                     [&](const AnchorConfig& a) { return a.id == id; });
}

const AnchorConfig& NetworkTopology::anchor(const AnchorId& id) const {
  for (const auto& a : anchors) {
    if (a.id == id) return a;
  }
  throw Error(ErrorCode::kInvalidTopology, "unknown anchor '" + id + "'");
}

bool NetworkTopology::is_master(const AnchorId& id) const {
  for (const auto& a : anchors) {
    if (a.id == id) return a.role == AnchorRole::kMaster;
  }
  return false;
}

std::vector<AnchorId> NetworkTopology::masters() const {
  std::vector<AnchorId> out;
  for (const auto& a : anchors) {
    if (a.role == AnchorRole::kMaster) out.push_back(a.id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

AnchorId NetworkTopology::primary() const {
  for (const auto& [id, lvl] : master_level) {
    if (lvl == 1 && is_master(id)) return id;
  }
  return {};
}

const std::set<AnchorId>& NetworkTopology::followed(const AnchorId& id) const {
  auto it = follow.find(id);
  return it == follow.end() ? kNoMasters : it->second;
}

int NetworkTopology::level(const AnchorId& master) const {
  auto it = master_level.find(master);
  return it == master_level.end() ? 0 : it->second;
}

int NetworkTopology::lag_slot(const AnchorId& master) const {
  auto it = lag_slots.find(master);
  return it == lag_slots.end() ? 0 : it->second;
}

double NetworkTopology::baseline(const AnchorId& a, const AnchorId& b) const {
  return (anchor(a).position - anchor(b).position).norm();
}

AnchorPositions NetworkTopology::positions() const {
  AnchorPositions out;
  for (const auto& a : anchors) out.emplace(a.id, a.position);
  return out;
}

std::vector<std::string> NetworkTopology::problems() const {
  std::vector<std::string> out;

  std::set<AnchorId> ids;
  for (const auto& a : anchors) {
    if (a.id.empty()) out.push_back("anchor with empty id");
    if (!ids.insert(a.id).second) out.push_back("duplicate anchor id '" + a.id + "'");
    if (!a.position.allFinite()) out.push_back("anchor '" + a.id + "' has non-finite position");
  }

  int primaries = 0;
  for (const auto& a : anchors) {
    if (a.role != AnchorRole::kMaster) continue;
    const int lvl = level(a.id);
    if (lvl < 1) {
      out.push_back("master '" + a.id + "' has no level >= 1");
      continue;
    }
    if (lvl == 1) {
      ++primaries;
      if (!followed(a.id).empty()) out.push_back("primary master '" + a.id + "' follows a master");
      continue;
    }
    const auto& up = followed(a.id);
    if (up.size() != 1) {
      out.push_back("level-" + std::to_string(lvl) + " master '" + a.id +
                    "' must follow exactly one master");
    } else if (!is_master(*up.begin()) || level(*up.begin()) != lvl - 1) {
      out.push_back("master '" + a.id + "' must follow a level-" + std::to_string(lvl - 1) +
                    " master");
    }
    if (lag_slot(a.id) < 0) out.push_back("master '" + a.id + "' has a negative lag slot");
  }
  if (primaries != 1) {
    out.push_back("expected exactly one level-1 master, found " + std::to_string(primaries));
  }

  for (const auto& a : anchors) {
    if (a.role != AnchorRole::kSlave) continue;
    const auto& ms = followed(a.id);
    if (ms.empty()) out.push_back("slave '" + a.id + "' follows no master");
    for (const auto& m : ms) {
      if (!is_master(m)) out.push_back("slave '" + a.id + "' follows non-master '" + m + "'");
    }
  }

  // Siblings under one upper master need distinct lag slots.
  std::map<AnchorId, std::map<int, AnchorId>> slots_by_upper;
  for (const auto& a : anchors) {
    if (a.role != AnchorRole::kMaster || level(a.id) < 2) continue;
    const auto& up = followed(a.id);
    if (up.size() != 1) continue;
    auto& slots = slots_by_upper[*up.begin()];
    auto [it, inserted] = slots.emplace(lag_slot(a.id), a.id);
    if (!inserted) {
      out.push_back("masters '" + it->second + "' and '" + a.id + "' share lag slot " +
                    std::to_string(lag_slot(a.id)));
    }
  }

  for (const auto& [id, _] : follow) {
    if (!ids.count(id)) out.push_back("follow entry for unknown anchor '" + id + "'");
  }
  return out;
}

std::vector<AnchorId> NetworkTopology::orphans() const {
  // Fixed point: an anchor is synced once it follows a synced master.
  std::set<AnchorId> synced;
  const AnchorId root = primary();
  if (!root.empty()) synced.insert(root);
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& a : anchors) {
      if (synced.count(a.id)) continue;
      for (const auto& m : followed(a.id)) {
        if (synced.count(m) && is_master(m)) {
          synced.insert(a.id);
          changed = true;
          break;
        }
      }
    }
  }
  std::vector<AnchorId> out;
  for (const auto& a : anchors) {
    if (!synced.count(a.id)) out.push_back(a.id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

void NetworkTopology::validate() const {
  if (primary().empty()) {
    throw Error(ErrorCode::kInvalidTopology, "topology has no primary master");
  }
  if (auto lost = orphans(); !lost.empty()) throw UnsyncableError(std::move(lost));
  if (auto issues = problems(); !issues.empty()) {
    throw Error(ErrorCode::kInvalidTopology, issues.front());
  }
}

}  // namespace uwb
