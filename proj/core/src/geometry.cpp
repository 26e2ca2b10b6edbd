#include "uwbloc/geometry.hpp"

namespace uwbloc {

Point2 apply_transform(const FrameTransform& t, const Point2& p) {
  return rotate(t.rotation, p) + t.translation;
}

Pose2 apply_transform(const FrameTransform& t, const Pose2& pose) {
  return {apply_transform(t, pose.position), normalize_angle(pose.heading + t.rotation)};
}

FrameTransform compose(const FrameTransform& a, const FrameTransform& b) {
  return {normalize_angle(a.rotation + b.rotation), rotate(a.rotation, b.translation) + a.translation};
}

FrameTransform invert(const FrameTransform& t) {
  // p = R q + t  =>  q = R^T p - R^T t
  return {normalize_angle(-t.rotation), rotate(-t.rotation, t.translation) * -1.0};
}

std::string_view to_string(FrameId frame) noexcept {
  switch (frame) {
    case FrameId::Uwb: return "uwb";
    case FrameId::Odom: return "odom";
    case FrameId::World: return "world";
  }
  return "unknown";
}

}  // namespace uwbloc
