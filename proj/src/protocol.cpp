#include "uwbrtls/protocol.hpp"

#include <limits>

#include <json.hpp>

#include "uwbrtls/error.hpp"

namespace uwb {

namespace {

using ordered_json = nlohmann::ordered_json;

const nlohmann::json& require(const nlohmann::json& obj, const char* field) {
  auto it = obj.find(field);
  if (it == obj.end()) {
    throw Error(ErrorCode::kMissingField, std::string("report lacks field '") + field + "'");
  }
  return *it;
}

std::string require_string(const nlohmann::json& obj, const char* field) {
  const auto& v = require(obj, field);
  if (!v.is_string()) {
    throw Error(ErrorCode::kMissingField, std::string("field '") + field + "' must be a string");
  }
  return v.get<std::string>();
}

}  // namespace

std::string_view to_string(ReportKind kind) {
  switch (kind) {
    case ReportKind::kBlinkRx: return "blink_rx";
    case ReportKind::kCcpRx: return "ccp_rx";
    case ReportKind::kCcpTx: return "ccp_tx";
  }
  return "?";
}

ToaReport ToaReport::blink_rx(std::string anchor, std::string tag, std::uint32_t seq,
                              Timestamp ts) {
  return {std::move(anchor), ReportKind::kBlinkRx, std::move(tag), seq, ts};
}

ToaReport ToaReport::ccp_rx(std::string anchor, std::string master, std::uint32_t seq,
                            Timestamp ts) {
  return {std::move(anchor), ReportKind::kCcpRx, std::move(master), seq, ts};
}

ToaReport ToaReport::ccp_tx(std::string master, std::uint32_t seq, Timestamp ts) {
  std::string src = master;
  return {std::move(master), ReportKind::kCcpTx, std::move(src), seq, ts};
}

std::string encode_report(const ToaReport& report) {
  ordered_json j;
  j["anchor_id"] = report.anchor_id;
  j["kind"] = std::string(to_string(report.kind));
  j["src_id"] = report.kind == ReportKind::kCcpTx ? report.anchor_id : report.src_id;
  j["seq"] = report.seq;
  j["ticks"] = report.timestamp.ticks;
  return j.dump();
}

ToaReport decode_report(std::string_view line, const TimerSpec& timer) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line.begin(), line.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kMalformedJson, e.what());
  }
  if (!j.is_object()) {
    throw Error(ErrorCode::kMalformedJson, "report must be a JSON object");
  }

  ToaReport r;
  r.anchor_id = require_string(j, "anchor_id");
  const std::string kind = require_string(j, "kind");
  if (kind == "blink_rx") {
    r.kind = ReportKind::kBlinkRx;
  } else if (kind == "ccp_rx") {
    r.kind = ReportKind::kCcpRx;
  } else if (kind == "ccp_tx") {
    r.kind = ReportKind::kCcpTx;
  } else {
    throw Error(ErrorCode::kUnknownKind, "unknown report kind '" + kind + "'");
  }
  r.src_id = require_string(j, "src_id");
  if (r.kind == ReportKind::kCcpTx && r.src_id != r.anchor_id) {
    throw Error(ErrorCode::kMissingField, "ccp_tx src_id must equal anchor_id");
  }

  const auto& seq = require(j, "seq");
  if (!seq.is_number_integer()) {
    throw Error(ErrorCode::kMissingField, "field 'seq' must be an integer");
  }
  if (!seq.is_number_unsigned() && seq.get<std::int64_t>() < 0) {
    throw Error(ErrorCode::kNegativeSeq, "seq must be non-negative");
  }
  const auto seq_value = seq.get<std::uint64_t>();
  if (seq_value > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::kSeqOutOfRange, "seq exceeds 32 bits");
  }
  r.seq = static_cast<std::uint32_t>(seq_value);

  const auto& ticks = require(j, "ticks");
  if (!ticks.is_number_integer()) {
    throw Error(ErrorCode::kMissingField, "field 'ticks' must be an integer");
  }
  if (!ticks.is_number_unsigned() && ticks.get<std::int64_t>() < 0) {
    throw Error(ErrorCode::kTicksOutOfRange, "ticks must be non-negative");
  }
  const auto tick_value = ticks.get<std::uint64_t>();
  if (tick_value >= timer.modulus()) {
    throw Error(ErrorCode::kTicksOutOfRange, "ticks exceed the timer range");
  }
  r.timestamp = Timestamp{tick_value};
  return r;
}

}  // namespace uwb
