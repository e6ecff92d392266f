#include "uwbrtls/pipeline.hpp"

#include <string>

#include "uwbrtls/error.hpp"

namespace uwb::pipeline {

LocateOutput locate(std::span<const ToaReport> reports, const NetworkTopology& topology,
                    const LocateParams& params) {
  LocateOutput out;
  const auto blinks = multi_master_sync(reports, topology, params.sync);
  const auto positions = topology.positions();
  std::map<std::string, solver::Tracker> trackers;
  auto note = [&](ErrorCode code) { ++out.diagnostics[std::string(to_string(code))]; };

  for (const auto& blink : blinks) {
    ++out.blinks;
    for (const auto& issue : blink.issues) note(issue.code);

    TdoaSet set;
    std::vector<SyncedTdoa> synced;
    try {
      const auto ids = blink.receivers();
      const AnchorId ref = timebase::select_time_base({ids.begin(), ids.end()}, topology);
      for (const auto& id : ids) {
        if (id != ref) synced.push_back(tdoa_between(blink, id, ref, params.sync));
      }
      set = timebase::assemble_tdoa_set(synced, ref);
    } catch (const Error& e) {
      note(e.code());
      continue;
    }

    auto it = trackers.find(blink.tag_id);
    if (it == trackers.end()) {
      it = trackers.emplace(blink.tag_id, solver::Tracker(positions, params.tracker)).first;
    }
    try {
      if (auto fix = it->second.step(set)) out.fixes.push_back(*fix);
    } catch (const Error& e) {
      note(e.code());
    }
    out.synced.insert(out.synced.end(), synced.begin(), synced.end());
    out.sets.push_back(std::move(set));
  }
  return out;
}

}  // namespace uwb::pipeline
