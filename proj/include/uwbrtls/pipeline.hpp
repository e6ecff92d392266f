#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "uwbrtls/protocol.hpp"
#include "uwbrtls/solver.hpp"
#include "uwbrtls/timebase.hpp"
#include "uwbrtls/wcs.hpp"

namespace uwb {

struct LocateParams {
  SyncParams sync;
  TrackerConfig tracker;
};

struct LocateOutput {
  std::vector<Fix> fixes;
  std::vector<SyncedTdoa> synced;  // (anchor, time base) pairs that fed the solver
  std::vector<TdoaSet> sets;
  std::map<std::string, std::size_t> diagnostics;  // error code -> count
  std::size_t blinks = 0;
};

namespace pipeline {

/// Reports -> clock sync -> time-base selection -> per-tag EKF.
LocateOutput locate(std::span<const ToaReport> reports, const NetworkTopology& topology,
                    const LocateParams& params = {});

}  // namespace pipeline

}  // namespace uwb
