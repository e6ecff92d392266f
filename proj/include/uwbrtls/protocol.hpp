#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "uwbrtls/clock.hpp"

namespace uwb {

// Over-the-air messages. tx_true_time never leaves the simulator.
struct BlinkMsg {
  std::string tag_id;
  std::uint32_t seq_num = 0;
  double tx_true_time = 0.0;
};

struct CcpMsg {
  std::string master_id;
  std::uint32_t seq_num = 0;
  double tx_true_time = 0.0;
};

enum class ReportKind { kBlinkRx, kCcpRx, kCcpTx };

std::string_view to_string(ReportKind kind);

/// One timestamped event reported by an anchor to the localization engine.
///
/// `src_id` is the tag for kBlinkRx, the transmitting master for kCcpRx and
/// the anchor itself for kCcpTx.
struct ToaReport {
  std::string anchor_id;
  ReportKind kind = ReportKind::kBlinkRx;
  std::string src_id;
  std::uint32_t seq = 0;
  Timestamp timestamp;

  friend bool operator==(const ToaReport&, const ToaReport&) = default;

  static ToaReport blink_rx(std::string anchor, std::string tag, std::uint32_t seq, Timestamp ts);
  static ToaReport ccp_rx(std::string anchor, std::string master, std::uint32_t seq, Timestamp ts);
  static ToaReport ccp_tx(std::string master, std::uint32_t seq, Timestamp ts);
};

/// Serializes a report as one JSON object without a trailing newline:
/// {"anchor_id":..,"kind":..,"src_id":..,"seq":..,"ticks":..}
std::string encode_report(const ToaReport& report);

/// Parses one line produced by encode_report. Throws uwb::Error whose code
/// identifies the failure (malformed JSON, missing field, unknown kind,
/// ticks out of range, negative seq).
ToaReport decode_report(std::string_view line, const TimerSpec& timer = {});

}  // namespace uwb
