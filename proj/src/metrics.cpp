#include "uwbrtls/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <tuple>

#include "uwbrtls/error.hpp"

namespace uwb::metrics {

namespace {

double rms(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double e : v) s += e * e;
  return std::sqrt(s / static_cast<double>(v.size()));
}

double population_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(values.size())));
  return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

std::vector<FixError> fix_errors(const std::vector<Fix>& fixes,
                                 const std::vector<BlinkTruth>& truth) {
  std::map<std::string, std::map<std::uint32_t, Point2>> by_tag;
  for (const auto& t : truth) by_tag[t.tag_id].emplace(t.seq, t.position);

  std::vector<FixError> out;
  for (const auto& f : fixes) {
    auto tag = by_tag.find(f.tag_id);
    if (tag == by_tag.end() || tag->second.empty()) continue;
    const auto& track = tag->second;
    Point2 p;
    auto hi = track.lower_bound(f.blink_seq);
    if (hi != track.end() && hi->first == f.blink_seq) {
      p = hi->second;
    } else if (hi == track.begin() || hi == track.end()) {
      continue;  // outside the truth log
    } else {
      auto lo = std::prev(hi);
      const double u = double(f.blink_seq - lo->first) / double(hi->first - lo->first);
      p = lo->second + u * (hi->second - lo->second);
    }
    out.push_back({f.tag_id, f.blink_seq, (f.position - p).norm()});
  }
  std::sort(out.begin(), out.end(), [](const FixError& a, const FixError& b) {
    return std::tie(a.tag_id, a.blink_seq, a.error_m) < std::tie(b.tag_id, b.blink_seq, b.error_m);
  });
  return out;
}

EvalSummary evaluate(const std::vector<Fix>& fixes, const std::vector<BlinkTruth>& truth,
                     const std::vector<SyncedTdoa>& synced, const EvalConfig& cfg) {
  EvalSummary s;
  const auto errors = fix_errors(fixes, truth);
  if (errors.empty()) throw Error(ErrorCode::kEmptyEval, "no fix matches the truth log");

  std::vector<double> all;
  std::vector<double> steady;
  std::map<std::string, std::size_t> seen;
  std::set<std::pair<std::string, std::uint32_t>> distinct;
  for (const auto& e : errors) {
    all.push_back(e.error_m);
    distinct.emplace(e.tag_id, e.blink_seq);
    if (seen[e.tag_id]++ >= cfg.warmup) steady.push_back(e.error_m);
  }
  if (steady.empty()) steady = all;  // too short for a warm-up

  s.track_rmse = rms(all);
  s.fix_rmse = rms(steady);
  s.fix_p95_error = percentile(steady, 0.95);
  s.matched_fixes = distinct.size();
  std::set<std::pair<std::string, std::uint32_t>> blinks;
  for (const auto& t : truth) blinks.emplace(t.tag_id, t.seq);
  s.truth_blinks = blinks.size();
  s.availability =
      std::min(1.0, static_cast<double>(s.matched_fixes) / static_cast<double>(s.truth_blinks));

  // Canonical orientation a < b, then one chronological stream per (pair, tag).
  using StreamKey = std::tuple<AnchorId, AnchorId, std::string>;
  std::map<StreamKey, std::vector<std::pair<std::uint32_t, double>>> streams;
  for (const auto& t : synced) {
    if (t.anchor_a == t.anchor_b) continue;
    const bool flip = t.anchor_b < t.anchor_a;
    StreamKey key{flip ? t.anchor_b : t.anchor_a, flip ? t.anchor_a : t.anchor_b, t.tag_id};
    streams[key].emplace_back(t.blink_seq, flip ? -t.tdoa_sync : t.tdoa_sync);
  }
  std::map<std::pair<AnchorId, AnchorId>, std::vector<double>> variances;
  for (auto& [key, stream] : streams) {
    std::sort(stream.begin(), stream.end());
    TdoaKalman f = cfg.smoother;
    std::vector<double> smoothed;
    for (std::size_t i = 0; i < stream.size(); ++i) {
      f = wcs::kalman_smooth(f, stream[i].second);
      if (i >= cfg.warmup) smoothed.push_back(f.state);
    }
    if (smoothed.empty()) continue;
    const double sd = population_std(smoothed);
    variances[{std::get<0>(key), std::get<1>(key)}].push_back(sd * sd);
  }
  for (const auto& [pair, vars] : variances) {
    double mean = 0.0;
    for (double v : vars) mean += v;
    s.tdoa_std_per_pair[pair] = std::sqrt(mean / static_cast<double>(vars.size()));
  }
  return s;
}

nlohmann::ordered_json to_json(const EvalSummary& s) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json pairs = nlohmann::ordered_json::object();
  for (const auto& [pair, sd] : s.tdoa_std_per_pair) pairs[pair.first + "-" + pair.second] = sd;
  j["tdoa_std_per_pair"] = pairs;
  j["fix_rmse"] = s.fix_rmse;
  j["fix_p95_error"] = s.fix_p95_error;
  j["track_rmse"] = s.track_rmse;
  j["availability"] = s.availability;
  j["matched_fixes"] = s.matched_fixes;
  j["truth_blinks"] = s.truth_blinks;
  return j;
}

std::string errors_csv(const std::vector<FixError>& errors) {
  std::ostringstream os;
  os.precision(17);
  os << "tag_id,blink_seq,err_m\n";
  for (const auto& e : errors) os << e.tag_id << ',' << e.blink_seq << ',' << e.error_m << '\n';
  return os.str();
}

}  // namespace uwb::metrics
