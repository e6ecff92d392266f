#pragma once

#include <cstdint>
#include <random>

namespace uwb {

inline constexpr double kSpeedOfLight = 299792458.0;

// DW1000-style timer: 128 x 499.2 MHz, i.e. ~15.65 ps per tick.
inline constexpr double kDw1000TickSeconds = 1.0 / (128.0 * 499.2e6);

using Rng = std::mt19937_64;

/// Resolution and width of a device timer.
///
/// Every device in one network shares the same timer. The default is the
/// 40-bit DW1000 counter; other widths exist so that quantization can be
/// taken out of an experiment without changing anything else.
struct TimerSpec {
  double tick_seconds = kDw1000TickSeconds;
  unsigned counter_bits = 40;

  std::uint64_t modulus() const { return std::uint64_t{1} << counter_bits; }
  std::uint64_t mask() const { return modulus() - 1; }
  std::uint64_t half_range() const { return std::uint64_t{1} << (counter_bits - 1); }

  void validate() const;
};

/// Raw counter value of a device timer, always reduced modulo 2^counter_bits.
struct Timestamp {
  std::uint64_t ticks = 0;

  friend bool operator==(Timestamp, Timestamp) = default;
};

/// Local oscillator of one device relative to global true time.
struct ClockModel {
  double offset = 0.0;      // seconds
  double skew = 0.0;        // fractional frequency error
  double drift_rate = 0.0;  // change of skew per second
  double jitter_std = 0.0;  // seconds, white phase noise per timestamp

  static constexpr double kMaxSkew = 100e-6;

  void validate() const;
};

/// Unwrapped, unquantized device time in seconds at `true_time`.
double device_time(const ClockModel& model, double true_time);

/// Noise-free reading; ignores jitter_std.
Timestamp read_clock(const ClockModel& model, double true_time, const TimerSpec& timer = {});

/// Reading with Gaussian timestamp noise drawn from `rng`.
Timestamp read_clock(const ClockModel& model, double true_time, Rng& rng,
                     const TimerSpec& timer = {});

/// Signed modular difference a - b. Valid while the true interval is below half the range.
std::int64_t ts_diff(Timestamp a, Timestamp b, const TimerSpec& timer = {});

inline double ticks_to_seconds(std::int64_t ticks, const TimerSpec& timer = {}) {
  return static_cast<double>(ticks) * timer.tick_seconds;
}

}  // namespace uwb
