#include "uwbrtls/clock.hpp"

#include <cmath>

#include "uwbrtls/error.hpp"

namespace uwb {

namespace {

Timestamp quantize(double device_seconds, const TimerSpec& timer) {
  const auto ticks = static_cast<std::int64_t>(std::llround(device_seconds / timer.tick_seconds));
  // Two's complement wrap handles negative device times (negative offsets).
  return Timestamp{static_cast<std::uint64_t>(ticks) & timer.mask()};
}

}  // namespace

void TimerSpec::validate() const {
  if (!(tick_seconds > 0.0) || !std::isfinite(tick_seconds)) {
    throw Error(ErrorCode::kInvalidClock, "timer tick must be positive");
  }
  if (counter_bits < 8 || counter_bits > 62) {
    throw Error(ErrorCode::kInvalidClock, "timer counter width must be within [8, 62] bits");
  }
}

void ClockModel::validate() const {
  if (!std::isfinite(offset) || !std::isfinite(skew) || !std::isfinite(drift_rate) ||
      !std::isfinite(jitter_std)) {
    throw Error(ErrorCode::kInvalidClock, "clock parameters must be finite");
  }
  if (std::abs(skew) > kMaxSkew) {
    throw Error(ErrorCode::kInvalidClock, "clock skew exceeds 100 ppm");
  }
  if (jitter_std < 0.0) {
    throw Error(ErrorCode::kInvalidClock, "jitter_std must be non-negative");
  }
}

double device_time(const ClockModel& model, double true_time) {
  return model.offset + (1.0 + model.skew) * true_time +
         0.5 * model.drift_rate * true_time * true_time;
}

Timestamp read_clock(const ClockModel& model, double true_time, const TimerSpec& timer) {
  return quantize(device_time(model, true_time), timer);
}

Timestamp read_clock(const ClockModel& model, double true_time, Rng& rng,
                     const TimerSpec& timer) {
  double t = device_time(model, true_time);
  if (model.jitter_std > 0.0) {
    std::normal_distribution<double> noise(0.0, model.jitter_std);
    t += noise(rng);
  }
  return quantize(t, timer);
}

std::int64_t ts_diff(Timestamp a, Timestamp b, const TimerSpec& timer) {
  const std::uint64_t d = (a.ticks - b.ticks) & timer.mask();
  if (d >= timer.half_range()) {
    return static_cast<std::int64_t>(d) - static_cast<std::int64_t>(timer.modulus());
  }
  return static_cast<std::int64_t>(d);
}

}  // namespace uwb
