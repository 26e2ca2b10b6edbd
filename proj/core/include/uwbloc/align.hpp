#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "uwbloc/geometry.hpp"
#include "uwbloc/locate.hpp"

namespace uwbloc {

struct CorrespondencePair {
  UwbPoint uwb{};
  OdomPoint odom{};
  double timestamp{0.0};
};

/// Calibration-drive pairs with strictly increasing timestamps.
class CorrespondenceBuffer {
 public:
  CorrespondenceBuffer() = default;

  /// Throws NonMonotonicTimestamp unless timestamp exceeds the last one.
  void append(const CorrespondencePair& pair);

  std::span<const CorrespondencePair> pairs() const noexcept { return pairs_; }
  std::size_t size() const noexcept { return pairs_.size(); }
  bool empty() const noexcept { return pairs_.empty(); }

  /// CSV with header `timestamp,ux,uy,ox,oy`.
  void write_csv(std::ostream& out) const;

 private:
  std::vector<CorrespondencePair> pairs_;
};

/// Pairs a UWB fix with the odometry pose current at the fix timestamp.
CorrespondenceBuffer record_pair(CorrespondenceBuffer buffer, const FixResult& fix,
                                 const OdomPose& odom_pose, double timestamp);

struct AlignmentConfig {
  int max_iterations{100};
  double step_tolerance{1e-13};
  double degenerate_line_distance{0.05};  // m
  double agreement_translation{1e-6};     // m
  double agreement_rotation{1e-8};        // rad
};

struct AlignmentResult {
  FrameMap<FrameId::Uwb, FrameId::Odom> transform{};
  double rms_error{0.0};
  std::size_t pair_count{0};
  int iterations{0};
  FrameTransform closed_form{};  // Procrustes cross-check
};

/// Rigid (theta, tx, ty) minimizing sum ||R u + t - o||^2 by Gauss-Newton,
/// checked against the closed-form Procrustes solution.
///
/// Throws TooFewPairs (<3), DegenerateGeometry (UWB points within
/// degenerate_line_distance of a common line) or NoConvergence (including
/// disagreement with the closed form beyond the configured tolerances).
AlignmentResult solve_alignment(const CorrespondenceBuffer& buffer,
                                const AlignmentConfig& config = {});

/// Closed-form least-squares rigid transform from centroids and the 2x2
/// cross-covariance. Needs at least one pair.
FrameTransform procrustes_alignment(std::span<const CorrespondencePair> pairs);

struct Observability {
  double spread{0.0};              // RMS distance of UWB points from their centroid
  double collinearity_ratio{0.0};  // smaller / larger singular value, 0 for a line
};

/// Throws TooFewPairs with fewer than 2 pairs.
Observability assess_observability(const CorrespondenceBuffer& buffer);

}  // namespace uwbloc
