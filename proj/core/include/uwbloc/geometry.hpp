#pragma once

#include <cmath>
#include <numbers>
#include <string_view>

namespace uwbloc {

struct Point2 {
  double x{0.0};
  double y{0.0};

  constexpr Point2 operator+(const Point2& o) const { return {x + o.x, y + o.y}; }
  constexpr Point2 operator-(const Point2& o) const { return {x - o.x, y - o.y}; }
  constexpr Point2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Point2 operator/(double s) const { return {x / s, y / s}; }
  constexpr Point2& operator+=(const Point2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr bool operator==(const Point2&) const = default;

  constexpr double dot(const Point2& o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }
  bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline double distance(const Point2& a, const Point2& b) { return (a - b).norm(); }

/// Wraps an angle into (-pi, pi].
inline double normalize_angle(double angle) {
  double a = std::remainder(angle, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

inline Point2 rotate(double angle, const Point2& p) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * p.x - s * p.y, s * p.x + c * p.y};
}

struct Pose2 {
  Point2 position{};
  double heading{0.0};

  constexpr bool operator==(const Pose2&) const = default;
};

inline Pose2 make_pose(double x, double y, double heading) {
  return {{x, y}, normalize_angle(heading)};
}

/// Rigid planar transform p -> R(rotation) p + translation.
struct FrameTransform {
  double rotation{0.0};
  Point2 translation{};

  static constexpr FrameTransform identity() { return {}; }
  constexpr bool operator==(const FrameTransform&) const = default;
};

Point2 apply_transform(const FrameTransform& t, const Point2& p);
Pose2 apply_transform(const FrameTransform& t, const Pose2& pose);

/// apply(compose(a, b), p) == apply(a, apply(b, p)).
FrameTransform compose(const FrameTransform& a, const FrameTransform& b);
FrameTransform invert(const FrameTransform& t);

/// The transform taking body-frame coordinates of `pose` into its parent frame.
inline FrameTransform transform_from_pose(const Pose2& pose) {
  return {normalize_angle(pose.heading), pose.position};
}

enum class FrameId { Uwb, Odom, World };

std::string_view to_string(FrameId frame) noexcept;

/// A value tagged at compile time with the frame it is expressed in.
template <typename T, FrameId F>
struct InFrame {
  static constexpr FrameId frame = F;
  T value{};

  constexpr bool operator==(const InFrame&) const = default;
};

using UwbPoint = InFrame<Point2, FrameId::Uwb>;
using OdomPoint = InFrame<Point2, FrameId::Odom>;
using WorldPoint = InFrame<Point2, FrameId::World>;
using OdomPose = InFrame<Pose2, FrameId::Odom>;
using WorldPose = InFrame<Pose2, FrameId::World>;

/// A FrameTransform that only accepts points of its source frame.
template <FrameId From, FrameId To>
struct FrameMap {
  FrameTransform transform{};

  InFrame<Point2, To> operator()(const InFrame<Point2, From>& p) const {
    return {apply_transform(transform, p.value)};
  }
  InFrame<Pose2, To> operator()(const InFrame<Pose2, From>& p) const {
    return {apply_transform(transform, p.value)};
  }
  FrameMap<To, From> inverse() const { return {invert(transform)}; }
};

template <FrameId A, FrameId B, FrameId C>
FrameMap<A, C> chain(const FrameMap<B, C>& second, const FrameMap<A, B>& first) {
  return {compose(second.transform, first.transform)};
}

}  // namespace uwbloc
