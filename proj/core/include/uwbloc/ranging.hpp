#pragma once

#include <compare>
#include <cstdint>
#include <string_view>

#include "uwbloc/random.hpp"

namespace uwbloc {

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s

struct AnchorId {
  std::uint32_t value{0};
  auto operator<=>(const AnchorId&) const = default;
};

/// Free-running node oscillator. Offsets are carried for completeness but
/// never enter interval arithmetic.
class ClockModel {
 public:
  static constexpr double kDefaultDriftCeiling = 100e-6;

  ClockModel() = default;
  /// Throws InvalidArgument if |drift| exceeds the ceiling.
  ClockModel(double offset, double drift, double drift_ceiling = kDefaultDriftCeiling);

  double offset() const noexcept { return offset_; }
  double drift() const noexcept { return drift_; }

  /// Duration an interval of `true_seconds` appears to last on this clock.
  double measure(double true_seconds) const noexcept { return true_seconds * (1.0 + drift_); }

 private:
  double offset_{0.0};
  double drift_{0.0};
};

/// The four locally measured intervals of one SDS-TWR round.
/// round1/reply2 are taken on the tag clock, reply1/round2 on the anchor clock.
struct TwrExchange {
  double t_round1{0.0};
  double t_reply1{0.0};
  double t_round2{0.0};
  double t_reply2{0.0};
};

enum class RangeQuality { Ok, Rejected };

std::string_view to_string(RangeQuality q) noexcept;

struct RangeMeasurement {
  AnchorId anchor_id{};
  double distance{0.0};   // m
  double timestamp{0.0};  // s, simulation time
  RangeQuality quality{RangeQuality::Ok};
};

struct RangeNoiseModel {
  double bias{0.50};
  double sigma{0.10};
  double dropout_probability{0.02};

  /// Throws InvalidArgument on sigma < 0 or a probability outside [0, 1].
  void validate() const;
};

/// Product-over-sum SDS-TWR estimator:
///   tof = (round1 * round2 - reply1 * reply2) / (round1 + round2 + reply1 + reply2)
/// Throws NonPositiveInterval or NegativeTof.
double sds_twr_tof(const TwrExchange& e);

/// Forward model of one exchange. Reply delays are true-time durations;
/// every interval is scaled by the drift of the clock that measures it.
TwrExchange simulate_exchange(double true_distance, const ClockModel& tag_clock,
                              const ClockModel& anchor_clock, double reply_delay_tag,
                              double reply_delay_anchor);

/// Applies bias, gaussian spread and dropout to a distance. Always consumes
/// the same number of draws so the stream stays aligned across outcomes.
RangeMeasurement measure_range(AnchorId anchor, double true_distance, double timestamp,
                               const RangeNoiseModel& noise, Rng& rng);

}  // namespace uwbloc
