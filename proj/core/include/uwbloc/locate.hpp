#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "uwbloc/geometry.hpp"
#include "uwbloc/ranging.hpp"

namespace uwbloc {

struct Anchor {
  AnchorId id{};
  UwbPoint position{};
};

/// Known anchor constellation in the UWB frame. Ids are unique and no two
/// anchors sit closer than kMinSeparation.
class AnchorMap {
 public:
  static constexpr double kMinSeparation = 0.1;  // m

  /// Throws InvalidAnchorMap when the invariants are violated.
  explicit AnchorMap(std::vector<Anchor> anchors);

  std::span<const Anchor> anchors() const noexcept { return anchors_; }
  std::size_t size() const noexcept { return anchors_.size(); }
  const Anchor* find(AnchorId id) const noexcept;

  /// The sub-map restricted to `ids` (unknown ids are ignored).
  AnchorMap subset(std::span<const AnchorId> ids) const;

 private:
  std::vector<Anchor> anchors_;
};

struct TrilaterationConfig {
  int max_iterations{50};
  double step_tolerance{1e-6};       // m, converged below this step norm
  double divergence_tolerance{1e-3}; // m, NoConvergence if last step still above this
  double initial_damping{1e-3};
  double max_condition{1e12};
  std::optional<double> huber_delta{};  // m; plain least squares when empty
};

struct FixResult {
  UwbPoint position{};
  double residual_rms{0.0};
  int iterations{0};
  double gdop{0.0};
  std::vector<AnchorId> used_anchor_ids{};
  double timestamp{0.0};  // newest measurement used
};

/// Least-squares position from ranges to known anchors, solved with
/// Levenberg-Marquardt damped Gauss-Newton.
///
/// Only Ok measurements whose anchor is in the map are used, one per anchor
/// (the newest). Starts from `initial_guess`, else the centroid of the used
/// anchors.
///
/// Throws InsufficientAnchors (<3 usable ranges), SingularGeometry
/// (normal-matrix condition above config.max_condition) or NoConvergence.
FixResult trilaterate(const AnchorMap& anchors, std::span<const RangeMeasurement> ranges,
                      std::optional<Point2> initial_guess = std::nullopt,
                      const TrilaterationConfig& config = {});

/// sqrt(trace((J^T J)^-1)) with J built from unit vectors anchor -> position.
/// Throws InsufficientAnchors, InvalidArgument (position on an anchor) or SingularGeometry.
double gdop(const AnchorMap& anchors, const Point2& position, double max_condition = 1e12);

/// Newest Ok measurement per anchor with timestamp in [now - window, now],
/// ordered by anchor id.
std::vector<RangeMeasurement> select_measurements(std::span<const RangeMeasurement> ranges,
                                                  double window, double now);

}  // namespace uwbloc
