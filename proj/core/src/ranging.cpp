#include "uwbloc/ranging.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "uwbloc/error.hpp"

namespace uwbloc {

ClockModel::ClockModel(double offset, double drift, double drift_ceiling)
    : offset_(offset), drift_(drift) {
  if (!std::isfinite(offset) || !std::isfinite(drift) || std::abs(drift) > drift_ceiling) {
    throw Error(ErrorCode::InvalidArgument,
                "clock drift " + std::to_string(drift) + " exceeds ceiling " +
                    std::to_string(drift_ceiling));
  }
}

std::string_view to_string(RangeQuality q) noexcept {
  return q == RangeQuality::Ok ? "ok" : "rejected";
}

void RangeNoiseModel::validate() const {
  if (!(sigma >= 0.0) || !std::isfinite(bias)) {
    throw Error(ErrorCode::InvalidArgument, "range noise sigma must be >= 0 and bias finite");
  }
  if (!(dropout_probability >= 0.0 && dropout_probability <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "dropout_probability must lie in [0, 1]");
  }
}

double sds_twr_tof(const TwrExchange& e) {
  if (!(e.t_round1 > 0.0 && e.t_reply1 > 0.0 && e.t_round2 > 0.0 && e.t_reply2 > 0.0)) {
    throw Error(ErrorCode::NonPositiveInterval, "all SDS-TWR intervals must be positive");
  }
  const double numerator = e.t_round1 * e.t_round2 - e.t_reply1 * e.t_reply2;
  if (numerator < 0.0) {
    throw Error(ErrorCode::NegativeTof, "inconsistent SDS-TWR timestamps");
  }
  return numerator / (e.t_round1 + e.t_round2 + e.t_reply1 + e.t_reply2);
}

TwrExchange simulate_exchange(double true_distance, const ClockModel& tag_clock,
                              const ClockModel& anchor_clock, double reply_delay_tag,
                              double reply_delay_anchor) {
  const double tof = true_distance / kSpeedOfLight;
  TwrExchange e;
  e.t_round1 = tag_clock.measure(2.0 * tof + reply_delay_anchor);
  e.t_reply1 = anchor_clock.measure(reply_delay_anchor);
  e.t_round2 = anchor_clock.measure(2.0 * tof + reply_delay_tag);
  e.t_reply2 = tag_clock.measure(reply_delay_tag);
  return e;
}

RangeMeasurement measure_range(AnchorId anchor, double true_distance, double timestamp,
                               const RangeNoiseModel& noise, Rng& rng) {
  const double u = draw_uniform(rng, 0.0, 1.0);
  const double n = draw_gaussian(rng, 0.0, 1.0);
  RangeMeasurement m;
  m.anchor_id = anchor;
  m.timestamp = timestamp;
  if (u < noise.dropout_probability) {
    m.quality = RangeQuality::Rejected;
    m.distance = 0.0;
    return m;
  }
  m.quality = RangeQuality::Ok;
  m.distance = std::max(0.0, true_distance + noise.bias + noise.sigma * n);
  return m;
}

}  // namespace uwbloc
