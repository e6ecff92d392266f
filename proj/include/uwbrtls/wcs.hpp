#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "uwbrtls/clock.hpp"
#include "uwbrtls/error.hpp"
#include "uwbrtls/protocol.hpp"
#include "uwbrtls/topology.hpp"

namespace uwb {

/// Two consecutive CCPs of one master as seen by the master (transmit
/// stamps) and by one follower (receive stamps).
struct CcpPairWindow {
  AnchorId master_id;
  AnchorId sa_id;
  std::uint32_t seq1 = 0;  // second CCP is seq1 + 1
  Timestamp t_s1, t_s2;    // master clock
  Timestamp r_s1, r_s2;    // follower clock
};

/// Range-difference-ready time difference of one blink between two anchors,
/// expressed on the primary master's timescale (seconds). Positive when the
/// blink reached anchor_a later than anchor_b.
struct SyncedTdoa {
  AnchorId anchor_a;
  AnchorId anchor_b;
  std::string tag_id;
  std::uint32_t blink_seq = 0;
  double tdoa_sync = 0.0;
  double k_used = 1.0;
};

/// Scalar Kalman filter over one anchor-pair TDoA stream.
struct TdoaKalman {
  double state = 0.0;
  double variance = std::numeric_limits<double>::infinity();  // uninitialized
  double process_var = 1e-22;
  double measurement_var = 0.5e-9 * 0.5e-9;
};

enum class WindowPolicy {
  kNearest,    // window closest to the blink, bracketing or not
  kPreceding,  // latest window that ends before the blink
};

struct SyncParams {
  TimerSpec timer;
  double ccp_period = 0.15;        // seconds, nominal
  double k_tolerance = 1e-4;       // |K - 1| sanity band
  double stale_intervals = 2.0;    // max blink-to-epoch distance, in CCP periods
  WindowPolicy policy = WindowPolicy::kNearest;
  int resolve_after_rounds = 3;    // primary CCP rounds a blink waits for late reports
  int history_rounds = 24;         // CCP seqs kept per master
};

namespace wcs {

/// K = (T_s1 - T_s2) / (R_s1 - R_s2). Throws kDegenerateWindow on a zero or
/// inverted denominator and kDriftAnomaly outside the sanity band.
double scale_coefficient(const CcpPairWindow& w, const SyncParams& params = {});

/// Single-master correction of one blink seen by the follower (rx_sa) and its
/// master (rx_ma). The follower's stamp is anchored at the window epoch
/// nearest to it, scaled by K, and the CCP flight time over `baseline_m` is
/// added back.
SyncedTdoa sync_tdoa(Timestamp rx_sa, Timestamp rx_ma, const CcpPairWindow& w,
                     double baseline_m, const std::string& tag_id, std::uint32_t blink_seq,
                     const SyncParams& params = {});

/// Standard scalar predict/update; non-finite measurements leave the filter unchanged.
TdoaKalman kalman_smooth(TdoaKalman f, double measurement);

}  // namespace wcs

/// A blink time on the primary master's clock: a raw primary timestamp plus
/// a sub-tick correction in seconds.
struct PrimaryTime {
  Timestamp base;
  double delta = 0.0;
};

struct SyncIssue {
  AnchorId anchor_id;
  ErrorCode code;
};

/// All receptions of one blink that could be put on the primary timescale.
struct SyncedBlink {
  std::string tag_id;
  std::uint32_t seq = 0;
  std::map<AnchorId, PrimaryTime> toa;
  std::map<AnchorId, double> k_used;  // product of K factors along the cascade
  std::vector<SyncIssue> issues;

  bool has(const AnchorId& id) const { return toa.count(id) != 0; }
  std::vector<AnchorId> receivers() const;
};

/// Streaming clock synchronization for a whole (possibly cascaded) network.
///
/// Reports may arrive in any order within a few CCP rounds; a blink is
/// resolved once `resolve_after_rounds` further primary CCPs have been seen,
/// or on finish().
class SyncEngine {
 public:
  /// Throws UnsyncableError when some anchor cannot reach the primary master.
  SyncEngine(NetworkTopology topology, SyncParams params = {});

  void ingest(const ToaReport& report);

  /// Blinks resolved since the last call, in resolution order.
  std::vector<SyncedBlink> take_ready();

  /// Resolves everything still pending and returns all remaining blinks.
  std::vector<SyncedBlink> finish();

  const NetworkTopology& topology() const { return topo_; }
  const SyncParams& params() const { return params_; }

  std::size_t ignored_reports() const { return ignored_; }

 private:
  struct Epoch {
    double k = 1.0;
    Timestamp local;     // follower receive stamp of the epoch CCP
    Timestamp upstream;  // master transmit stamp of the epoch CCP
  };
  struct PendingBlink {
    std::map<AnchorId, Timestamp> rx;
    std::uint64_t arrival_round = 0;
  };
  using BlinkKey = std::pair<std::string, std::uint32_t>;

  SyncedBlink resolve(const BlinkKey& key, const PendingBlink& pending) const;
  // Maps `ts + delta` on `anchor`'s clock onto the primary clock.
  PrimaryTime to_primary(const AnchorId& anchor, Timestamp ts, double delta, double& k_total,
                         int depth) const;
  Epoch pick_epoch(const AnchorId& follower, const AnchorId& master, Timestamp ts) const;
  void prune(const AnchorId& master);
  void resolve_due(bool all);

  NetworkTopology topo_;
  SyncParams params_;
  AnchorId primary_;
  // master -> seq -> tx stamp
  std::map<AnchorId, std::map<std::uint32_t, Timestamp>> ccp_tx_;
  // (follower, master) -> seq -> rx stamp
  std::map<std::pair<AnchorId, AnchorId>, std::map<std::uint32_t, Timestamp>> ccp_rx_;
  std::map<BlinkKey, PendingBlink> pending_;
  // Recently resolved blinks; stragglers for these are dropped, not re-opened.
  std::set<BlinkKey> resolved_;
  std::deque<BlinkKey> resolved_order_;
  std::vector<SyncedBlink> ready_;
  std::uint64_t primary_rounds_ = 0;
  std::size_t ignored_ = 0;
};

/// Batch form of SyncEngine over a report stream.
std::vector<SyncedBlink> multi_master_sync(std::span<const ToaReport> reports,
                                           const NetworkTopology& topology,
                                           const SyncParams& params = {});

/// TDoA of anchor a relative to anchor b for one synced blink.
SyncedTdoa tdoa_between(const SyncedBlink& blink, const AnchorId& a, const AnchorId& b,
                        const SyncParams& params = {});

/// TDoAs for every unordered receiver pair (a < b by id).
std::vector<SyncedTdoa> pairwise_tdoas(const SyncedBlink& blink, const SyncParams& params = {});

/// Per-pair Kalman smoothing keyed by (tag, anchor_a, anchor_b).
class TdoaSmoother {
 public:
  explicit TdoaSmoother(TdoaKalman prototype = {}) : prototype_(prototype) {}

  /// Returns the smoothed value after folding in `tdoa`.
  double update(const SyncedTdoa& tdoa);

 private:
  TdoaKalman prototype_;
  std::map<std::tuple<std::string, AnchorId, AnchorId>, TdoaKalman> filters_;
};

}  // namespace uwb
