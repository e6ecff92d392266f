#include "uwbrtls/wcs.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace uwb {

namespace {
constexpr std::size_t kResolvedMemory = 4096;
}  // namespace

namespace wcs {

double scale_coefficient(const CcpPairWindow& w, const SyncParams& params) {
  const std::int64_t master_span = ts_diff(w.t_s1, w.t_s2, params.timer);
  const std::int64_t follower_span = ts_diff(w.r_s1, w.r_s2, params.timer);
  // Both spans are negative for consecutive CCPs.
  if (follower_span >= 0 || master_span >= 0) {
    throw Error(ErrorCode::kDegenerateWindow,
                "CCP window " + w.master_id + "->" + w.sa_id + " seq " + std::to_string(w.seq1) +
                    " has a non-increasing span");
  }
  const double k = static_cast<double>(master_span) / static_cast<double>(follower_span);
  if (!(std::abs(k - 1.0) <= params.k_tolerance)) {
    throw Error(ErrorCode::kDriftAnomaly, "CCP window " + w.master_id + "->" + w.sa_id +
                                              " gives K outside the sanity band");
  }
  return k;
}

SyncedTdoa sync_tdoa(Timestamp rx_sa, Timestamp rx_ma, const CcpPairWindow& w,
                     double baseline_m, const std::string& tag_id, std::uint32_t blink_seq,
                     const SyncParams& params) {
  const double k = scale_coefficient(w, params);
  const std::int64_t from_first = ts_diff(rx_sa, w.r_s1, params.timer);
  const std::int64_t from_second = ts_diff(rx_sa, w.r_s2, params.timer);
  const bool second_nearer = std::llabs(from_second) < std::llabs(from_first);
  const Timestamp t_epoch = second_nearer ? w.t_s2 : w.t_s1;
  const std::int64_t since_epoch = second_nearer ? from_second : from_first;

  if (std::abs(ticks_to_seconds(since_epoch, params.timer)) >
      params.stale_intervals * params.ccp_period) {
    throw Error(ErrorCode::kStaleSync, "CCP window too far from blink at " + w.sa_id);
  }

  // Same operation order as SyncEngine + tdoa_between so both agree bit for bit.
  const double delta = k * (ticks_to_seconds(since_epoch, params.timer) + 0.0) +
                       baseline_m / kSpeedOfLight;
  SyncedTdoa out;
  out.anchor_a = w.sa_id;
  out.anchor_b = w.master_id;
  out.tag_id = tag_id;
  out.blink_seq = blink_seq;
  out.tdoa_sync = ticks_to_seconds(ts_diff(t_epoch, rx_ma, params.timer), params.timer) +
                  (delta - 0.0);
  out.k_used = k;
  return out;
}

TdoaKalman kalman_smooth(TdoaKalman f, double measurement) {
  if (!std::isfinite(measurement)) return f;
  if (!std::isfinite(f.variance)) {
    f.state = measurement;
    f.variance = f.measurement_var;
    return f;
  }
  f.variance += f.process_var;
  const double gain = f.variance / (f.variance + f.measurement_var);
  f.state += gain * (measurement - f.state);
  f.variance *= (1.0 - gain);
  return f;
}

}  // namespace wcs

std::vector<AnchorId> SyncedBlink::receivers() const {
  std::vector<AnchorId> out;
  out.reserve(toa.size());
  for (const auto& [id, _] : toa) out.push_back(id);
  return out;
}

SyncEngine::SyncEngine(NetworkTopology topology, SyncParams params)
    : topo_(std::move(topology)), params_(params) {
  params_.timer.validate();
  topo_.validate();
  primary_ = topo_.primary();
}

void SyncEngine::ingest(const ToaReport& r) {
  if (!topo_.has(r.anchor_id)) {
    ++ignored_;
    return;
  }
  switch (r.kind) {
    case ReportKind::kCcpTx: {
      if (!topo_.is_master(r.anchor_id)) {
        ++ignored_;
        return;
      }
      ccp_tx_[r.anchor_id][r.seq] = r.timestamp;
      prune(r.anchor_id);
      if (r.anchor_id == primary_) {
        ++primary_rounds_;
        resolve_due(false);
      }
      return;
    }
    case ReportKind::kCcpRx: {
      if (!topo_.is_master(r.src_id)) {
        ++ignored_;
        return;
      }
      ccp_rx_[{r.anchor_id, r.src_id}][r.seq] = r.timestamp;
      prune(r.src_id);
      return;
    }
    case ReportKind::kBlinkRx: {
      if (resolved_.count(BlinkKey{r.src_id, r.seq})) {
        ++ignored_;
        return;
      }
      auto [it, inserted] = pending_.try_emplace(BlinkKey{r.src_id, r.seq});
      if (inserted) it->second.arrival_round = primary_rounds_;
      if (!it->second.rx.emplace(r.anchor_id, r.timestamp).second) ++ignored_;
      return;
    }
  }
}

void SyncEngine::prune(const AnchorId& master) {
  auto drop_old = [&](std::map<std::uint32_t, Timestamp>& seqs) {
    if (seqs.size() <= static_cast<std::size_t>(params_.history_rounds)) return;
    // Newest seq under 32-bit wrap: the one with the smallest forward distance to all others.
    std::uint32_t newest = seqs.begin()->first;
    for (const auto& [s, _] : seqs) {
      if (static_cast<std::int32_t>(s - newest) > 0) newest = s;
    }
    for (auto it = seqs.begin(); it != seqs.end();) {
      if (newest - it->first > static_cast<std::uint32_t>(params_.history_rounds)) {
        it = seqs.erase(it);
      } else {
        ++it;
      }
    }
  };
  if (auto it = ccp_tx_.find(master); it != ccp_tx_.end()) drop_old(it->second);
  for (auto& [key, seqs] : ccp_rx_) {
    if (key.second == master) drop_old(seqs);
  }
}

SyncEngine::Epoch SyncEngine::pick_epoch(const AnchorId& follower, const AnchorId& master,
                                         Timestamp ts) const {
  auto rx_it = ccp_rx_.find({follower, master});
  auto tx_it = ccp_tx_.find(master);
  if (rx_it == ccp_rx_.end() || tx_it == ccp_tx_.end()) {
    throw Error(ErrorCode::kUnsynchronizedAnchor,
                follower + " has no CCP window from " + master);
  }
  const auto& rx = rx_it->second;
  const auto& tx = tx_it->second;

  std::optional<Epoch> best;
  std::int64_t best_score = 0;
  bool saw_anomaly = false;

  for (const auto& [s1, r1] : rx) {
    const std::uint32_t s2 = s1 + 1;
    auto r2_it = rx.find(s2);
    auto t1_it = tx.find(s1);
    auto t2_it = tx.find(s2);
    if (r2_it == rx.end() || t1_it == tx.end() || t2_it == tx.end()) continue;

    const CcpPairWindow w{master, follower, s1, t1_it->second, t2_it->second, r1,
                          r2_it->second};
    double k = 1.0;
    try {
      k = wcs::scale_coefficient(w, params_);
    } catch (const Error&) {
      saw_anomaly = true;
      continue;
    }

    const std::int64_t d1 = ts_diff(ts, w.r_s1, params_.timer);
    const std::int64_t d2 = ts_diff(ts, w.r_s2, params_.timer);
    std::int64_t score = 0;
    if (params_.policy == WindowPolicy::kPreceding) {
      if (d2 < 0) continue;
      score = d2;
    } else {
      const bool bracketed = d1 >= 0 && d2 <= 0;
      score = bracketed ? 0 : std::min(std::llabs(d1), std::llabs(d2));
    }
    const bool second_nearer = std::llabs(d2) < std::llabs(d1);
    if (!best || score < best_score) {
      best_score = score;
      best = Epoch{k, second_nearer ? w.r_s2 : w.r_s1, second_nearer ? w.t_s2 : w.t_s1};
    }
  }

  if (!best) {
    throw Error(saw_anomaly ? ErrorCode::kDriftAnomaly : ErrorCode::kUnsynchronizedAnchor,
                follower + " has no usable CCP window from " + master);
  }
  const double since = ticks_to_seconds(ts_diff(ts, best->local, params_.timer), params_.timer);
  if (std::abs(since) > params_.stale_intervals * params_.ccp_period) {
    throw Error(ErrorCode::kStaleSync, follower + " CCP window from " + master + " is stale");
  }
  return *best;
}

PrimaryTime SyncEngine::to_primary(const AnchorId& anchor, Timestamp ts, double delta,
                                   double& k_total, int depth) const {
  if (anchor == primary_) return PrimaryTime{ts, delta};
  if (depth > static_cast<int>(topo_.anchors.size())) {
    throw Error(ErrorCode::kUnsyncableAnchor, anchor + " sits in a follow cycle");
  }

  std::vector<AnchorId> masters(topo_.followed(anchor).begin(), topo_.followed(anchor).end());
  std::stable_sort(masters.begin(), masters.end(), [&](const AnchorId& a, const AnchorId& b) {
    return topo_.level(a) < topo_.level(b);
  });

  std::optional<Error> first_error;
  for (const auto& master : masters) {
    try {
      const Epoch e = pick_epoch(anchor, master, ts);
      // The CCP flight time is known in seconds; on a secondary master's clock
      // it reads longer or shorter by that master's rate relative to the primary.
      double k_upstream = 1.0;
      if (master != primary_) to_primary(master, e.upstream, 0.0, k_upstream, depth + 1);
      const double on_master =
          e.k * (ticks_to_seconds(ts_diff(ts, e.local, params_.timer), params_.timer) + delta) +
          topo_.baseline(anchor, master) / kSpeedOfLight / k_upstream;
      PrimaryTime out = to_primary(master, e.upstream, on_master, k_upstream, depth + 1);
      k_total = e.k * k_upstream;
      return out;
    } catch (const Error& err) {
      if (!first_error) first_error = err;
    }
  }
  if (first_error) throw *first_error;
  throw Error(ErrorCode::kUnsyncableAnchor, anchor + " follows no master");
}

SyncedBlink SyncEngine::resolve(const BlinkKey& key, const PendingBlink& pending) const {
  SyncedBlink out;
  out.tag_id = key.first;
  out.seq = key.second;
  for (const auto& [anchor, ts] : pending.rx) {
    try {
      double k = 1.0;
      out.toa.emplace(anchor, to_primary(anchor, ts, 0.0, k, 0));
      out.k_used.emplace(anchor, k);
    } catch (const Error& err) {
      out.issues.push_back({anchor, err.code()});
    }
  }
  return out;
}

void SyncEngine::resolve_due(bool all) {
  for (auto it = pending_.begin(); it != pending_.end();) {
    const bool due =
        all || primary_rounds_ >=
                   it->second.arrival_round + static_cast<std::uint64_t>(params_.resolve_after_rounds);
    if (due) {
      ready_.push_back(resolve(it->first, it->second));
      resolved_.insert(it->first);
      resolved_order_.push_back(it->first);
      if (resolved_order_.size() > kResolvedMemory) {
        resolved_.erase(resolved_order_.front());
        resolved_order_.pop_front();
      }
      it = pending_.erase(it);
    } else {
      ++it;
    }
  }
}

std::vector<SyncedBlink> SyncEngine::take_ready() {
  std::vector<SyncedBlink> out;
  out.swap(ready_);
  return out;
}

std::vector<SyncedBlink> SyncEngine::finish() {
  resolve_due(true);
  return take_ready();
}

std::vector<SyncedBlink> multi_master_sync(std::span<const ToaReport> reports,
                                           const NetworkTopology& topology,
                                           const SyncParams& params) {
  SyncEngine engine(topology, params);
  std::vector<SyncedBlink> out;
  for (const auto& r : reports) {
    engine.ingest(r);
    auto ready = engine.take_ready();
    std::move(ready.begin(), ready.end(), std::back_inserter(out));
  }
  auto rest = engine.finish();
  std::move(rest.begin(), rest.end(), std::back_inserter(out));
  return out;
}

SyncedTdoa tdoa_between(const SyncedBlink& blink, const AnchorId& a, const AnchorId& b,
                        const SyncParams& params) {
  auto ia = blink.toa.find(a);
  auto ib = blink.toa.find(b);
  if (ia == blink.toa.end() || ib == blink.toa.end()) {
    throw Error(ErrorCode::kUnsynchronizedAnchor,
                "blink " + blink.tag_id + "#" + std::to_string(blink.seq) + " lacks " +
                    (ia == blink.toa.end() ? a : b));
  }
  SyncedTdoa out;
  out.anchor_a = a;
  out.anchor_b = b;
  out.tag_id = blink.tag_id;
  out.blink_seq = blink.seq;
  out.tdoa_sync = ticks_to_seconds(ts_diff(ia->second.base, ib->second.base, params.timer),
                                   params.timer) +
                  (ia->second.delta - ib->second.delta);
  out.k_used = blink.k_used.at(a) / blink.k_used.at(b);
  return out;
}

std::vector<SyncedTdoa> pairwise_tdoas(const SyncedBlink& blink, const SyncParams& params) {
  std::vector<SyncedTdoa> out;
  const auto ids = blink.receivers();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      out.push_back(tdoa_between(blink, ids[i], ids[j], params));
    }
  }
  return out;
}

double TdoaSmoother::update(const SyncedTdoa& tdoa) {
  auto [it, _] = filters_.try_emplace({tdoa.tag_id, tdoa.anchor_a, tdoa.anchor_b}, prototype_);
  it->second = wcs::kalman_smooth(it->second, tdoa.tdoa_sync);
  return it->second.state;
}

}  // namespace uwb
