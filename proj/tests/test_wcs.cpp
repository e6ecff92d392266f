#include <doctest.h>

#include <algorithm>
#include <functional>
#include <random>

#include "support.hpp"
#include "uwbrtls/error.hpp"
#include "uwbrtls/wcs.hpp"

using namespace uwb;
using namespace uwbtest;

namespace {

// Integer-tick window at the DW1000 tick; K and the synced TDoA were
// evaluated independently in double precision.
CcpPairWindow sample_window() {
  return CcpPairWindow{"MA1",
                       "SA1",
                       10,
                       Timestamp{1000000000},
                       Timestamp{1000000000 + 9584640},
                       Timestamp{5000000000},
                       Timestamp{5000000000 + 9584544}};
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kConfig;
}

SyncParams params_of(const Scenario& s) {
  SyncParams p;
  p.timer = s.timer;
  return p;
}

std::vector<SyncedBlink> sync_sim(const Scenario& s, std::vector<ToaReport> reports) {
  return multi_master_sync(reports, s.topology, params_of(s));
}

}  // namespace

TEST_SUITE("wcs") {

TEST_CASE("scale coefficient oracle") {
  CHECK(wcs::scale_coefficient(sample_window()) == doctest::Approx(1.0000100161259629).epsilon(1e-15));
}

TEST_CASE("10 ppm faster follower") {
  ClockModel ma, sa;
  sa.skew = 10e-6;
  const TimerSpec fine = fine_timer();
  CcpPairWindow w{"MA1", "SA1", 0, read_clock(ma, 0.0, fine), read_clock(ma, 0.15, fine),
                  read_clock(sa, 0.0, fine), read_clock(sa, 0.15, fine)};
  SyncParams p;
  p.timer = fine;
  CHECK(wcs::scale_coefficient(w, p) == doctest::Approx(0.9999900000999989).epsilon(1e-12));
}

TEST_CASE("degenerate and anomalous windows") {
  auto w = sample_window();
  w.r_s2 = w.r_s1;
  CHECK(code_of([&] { wcs::scale_coefficient(w); }) == ErrorCode::kDegenerateWindow);
  w = sample_window();
  std::swap(w.r_s1, w.r_s2);
  CHECK(code_of([&] { wcs::scale_coefficient(w); }) == ErrorCode::kDegenerateWindow);
  w = sample_window();
  w.r_s2.ticks += 2000;  // ~2e-4 off
  CHECK(code_of([&] { wcs::scale_coefficient(w); }) == ErrorCode::kDriftAnomaly);
}

TEST_CASE("synced TDoA oracle") {
  const auto t = wcs::sync_tdoa(Timestamp{5000000000 + 3000000}, Timestamp{1000000000 + 2999000},
                                sample_window(), 6.0, "T1", 4);
  CHECK(t.tdoa_sync == doctest::Approx(3.613414409380693e-08).epsilon(1e-12));
  CHECK(t.anchor_a == "SA1");
  CHECK(t.anchor_b == "MA1");
  CHECK(t.blink_seq == 4);
  CHECK(t.k_used == wcs::scale_coefficient(sample_window()));
}

TEST_CASE("stale window") {
  CHECK(code_of([] {
          wcs::sync_tdoa(Timestamp{5000000000ULL + 64000000000ULL}, Timestamp{0}, sample_window(),
                         6.0, "T1", 0);
        }) == ErrorCode::kStaleSync);
}

TEST_CASE("Kalman smoothing oracle") {
  TdoaKalman f;
  f = wcs::kalman_smooth(f, 1e-9);
  CHECK(f.state == 1e-9);
  CHECK(f.variance == doctest::Approx(0.25e-18));
  f = wcs::kalman_smooth(f, 2e-9);
  CHECK(f.state == doctest::Approx(1.5000999800039993e-09).epsilon(1e-13));
  CHECK(f.variance == doctest::Approx(1.250249950009998e-19).epsilon(1e-13));
  const auto same = wcs::kalman_smooth(f, std::nan(""));
  CHECK(same.state == f.state);
}

TEST_CASE("engine agrees bit for bit with the single-window formula") {
  Rng rng(3);
  const auto s = static_scenario(rectangle(&rng), {2.5, 1.5}, 1.0);
  const auto sim = simnet::run_scenario(s);
  const auto blinks = sync_sim(s, sim.reports);

  // Blink 4 (t = 0.4 s) sits between CCPs 2 and 3 (0.30 s, 0.45 s).
  std::map<std::pair<std::string, std::uint32_t>, Timestamp> tx, rx;
  std::map<std::string, Timestamp> blink_rx;
  for (const auto& r : sim.reports) {
    if (r.kind == ReportKind::kCcpTx) tx[{r.anchor_id, r.seq}] = r.timestamp;
    if (r.kind == ReportKind::kCcpRx) rx[{r.anchor_id, r.seq}] = r.timestamp;
    if (r.kind == ReportKind::kBlinkRx && r.seq == 4) blink_rx[r.anchor_id] = r.timestamp;
  }
  const auto& blink = *std::find_if(blinks.begin(), blinks.end(),
                                    [](const SyncedBlink& b) { return b.seq == 4; });
  for (const char* sa : {"SA1", "SA2", "SA3"}) {
    const CcpPairWindow w{"MA1", sa, 2, tx[{"MA1", 2}], tx[{"MA1", 3}], rx[{sa, 2}], rx[{sa, 3}]};
    const auto direct = wcs::sync_tdoa(blink_rx[sa], blink_rx["MA1"], w,
                                       s.topology.baseline(sa, "MA1"), "T1", 4);
    const auto engine = tdoa_between(blink, sa, "MA1");
    CHECK(direct.tdoa_sync == engine.tdoa_sync);
    CHECK(direct.k_used == engine.k_used);
  }
}

TEST_CASE("zero-noise synced TDoAs match geometry") {
  Rng rng(4);
  const Point2 tag(1.5, 2.5);
  const auto s = static_scenario(rectangle(&rng), tag, 2.0, 1, fine_timer());
  const double rate = 1.0 + s.topology.anchor("MA1").clock.skew;
  for (const auto& b : sync_sim(s, simnet::run_scenario(s).reports)) {
    REQUIRE(b.toa.size() == 4);
    for (const auto& t : pairwise_tdoas(b, params_of(s))) {
      CHECK(std::abs(t.tdoa_sync - rate * geometric_tdoa(s.topology, tag, t.anchor_a, t.anchor_b)) <
            1e-12);
    }
  }
}

TEST_CASE("antisymmetry and cycle closure") {
  Rng rng(5);
  auto s = static_scenario(rectangle(&rng, 100e-12), {3, 1}, 2.0);
  for (const auto& b : sync_sim(s, simnet::run_scenario(s).reports)) {
    const auto ids = b.receivers();
    REQUIRE(ids.size() == 4);
    for (const auto& a : ids) {
      for (const auto& c : ids) {
        CHECK(tdoa_between(b, a, c).tdoa_sync == -tdoa_between(b, c, a).tdoa_sync);
      }
    }
    const double loop = tdoa_between(b, "SA1", "SA2").tdoa_sync +
                        tdoa_between(b, "SA2", "SA3").tdoa_sync +
                        tdoa_between(b, "SA3", "SA1").tdoa_sync;
    CHECK(std::abs(loop) < 1e-15);
  }
}

TEST_CASE("result does not depend on arrival order within a synchronization window") {
  Rng rng(6);
  auto s = static_scenario(rectangle(&rng, 100e-12), {2, 2}, 5.0);
  const auto sim = simnet::run_scenario(s);
  const auto ordered = sync_sim(s, sim.reports);

  auto shuffled = sim.reports;
  Rng shuffle_rng(99);
  // Shuffle each stretch that starts at a primary CCP transmission.
  auto begin = shuffled.begin();
  for (auto it = shuffled.begin(); it != shuffled.end(); ++it) {
    if (it != begin && it->kind == ReportKind::kCcpTx && it->anchor_id == "MA1") {
      std::shuffle(begin, it, shuffle_rng);
      begin = it;
    }
  }
  std::shuffle(begin, shuffled.end(), shuffle_rng);
  auto other = sync_sim(s, shuffled);
  auto key = [](const SyncedBlink& a, const SyncedBlink& b) { return a.seq < b.seq; };
  auto sorted = ordered;
  std::sort(sorted.begin(), sorted.end(), key);
  std::sort(other.begin(), other.end(), key);
  REQUIRE(sorted.size() == other.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    REQUIRE(sorted[i].toa.size() == other[i].toa.size());
    for (const auto& [id, pt] : sorted[i].toa) {
      CHECK(pt.base == other[i].toa.at(id).base);
      CHECK(pt.delta == other[i].toa.at(id).delta);
    }
  }
}

TEST_CASE("sync survives the 40-bit counter wrap") {
  Rng rng(8);
  const Point2 tag(4, 3);
  auto s = static_scenario(rectangle(&rng), tag, 40.0);  // wraps after ~17.2 s
  const auto blinks = sync_sim(s, simnet::run_scenario(s).reports);
  CHECK(blinks.size() == 400);
  double worst = 0.0;
  for (const auto& b : blinks) {
    REQUIRE(b.issues.empty());
    for (const auto& t : pairwise_tdoas(b, params_of(s))) {
      worst = std::max(worst, std::abs(t.tdoa_sync - geometric_tdoa(s.topology, tag, t.anchor_a,
                                                                    t.anchor_b)));
    }
  }
  CHECK(worst < 50e-12);  // a few ticks of quantization
}

TEST_CASE("missing CCPs leave a slave unsynchronized") {
  const auto s = static_scenario(rectangle(), {2, 2}, 1.0);
  auto reports = simnet::run_scenario(s).reports;
  reports.erase(std::remove_if(reports.begin(), reports.end(),
                               [](const ToaReport& r) {
                                 return r.kind == ReportKind::kCcpRx && r.anchor_id == "SA2";
                               }),
                reports.end());
  for (const auto& b : sync_sim(s, reports)) {
    CHECK_FALSE(b.has("SA2"));
    REQUIRE(b.issues.size() == 1);
    CHECK(b.issues[0].anchor_id == "SA2");
    CHECK(b.issues[0].code == ErrorCode::kUnsynchronizedAnchor);
  }
}

TEST_CASE("unknown anchors and duplicates are ignored") {
  SyncEngine e(rectangle());
  e.ingest(ToaReport::blink_rx("ZZ9", "T1", 0, Timestamp{1}));
  e.ingest(ToaReport::blink_rx("SA1", "T1", 0, Timestamp{1}));
  e.ingest(ToaReport::blink_rx("SA1", "T1", 0, Timestamp{2}));
  e.ingest(ToaReport::ccp_tx("SA1", 0, Timestamp{2}));
  CHECK(e.ignored_reports() == 3);
}

TEST_CASE("late receptions of a resolved blink are dropped") {
  const auto s = static_scenario(rectangle(), {2, 2}, 1.0);
  auto reports = simnet::run_scenario(s).reports;
  const auto late = std::find_if(reports.begin(), reports.end(), [](const ToaReport& r) {
    return r.kind == ReportKind::kBlinkRx && r.seq == 0 && r.anchor_id == "SA2";
  });
  const ToaReport straggler = *late;
  reports.erase(late);
  reports.push_back(straggler);
  const auto blinks = sync_sim(s, reports);
  CHECK(blinks.size() == 10);
  for (const auto& b : blinks) {
    if (b.seq == 0) CHECK_FALSE(b.has("SA2"));
  }
}

TEST_CASE("cascaded masters map onto the primary timescale") {
  Rng rng(10);
  auto topo = cascade(&rng);
  topo.anchors.front().clock.skew = 0.0;
  for (const Point2 tag : {Point2(-4, 2), Point2(2, -1)}) {
    const auto s = static_scenario(topo, tag, 2.0, 1, fine_timer());
    for (const auto& b : sync_sim(s, simnet::run_scenario(s).reports)) {
      CHECK(b.toa.size() == 12);
      for (const auto& t : pairwise_tdoas(b, params_of(s))) {
        CHECK(std::abs(t.tdoa_sync - geometric_tdoa(topo, tag, t.anchor_a, t.anchor_b)) < 1e-12);
      }
    }
  }
}

TEST_CASE("smoother keeps one filter per tag and pair") {
  TdoaSmoother sm;
  CHECK(sm.update({"SA1", "MA1", "T1", 0, 1e-9, 1}) == 1e-9);
  CHECK(sm.update({"SA2", "MA1", "T1", 0, 5e-9, 1}) == 5e-9);
  CHECK(sm.update({"SA1", "MA1", "T2", 0, 7e-9, 1}) == 7e-9);
  const double second = sm.update({"SA1", "MA1", "T1", 1, 2e-9, 1});
  CHECK(second == doctest::Approx(1.5000999800039993e-09).epsilon(1e-13));
}

}  // TEST_SUITE
