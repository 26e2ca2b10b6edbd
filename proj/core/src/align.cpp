#include "uwbloc/align.hpp"

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>

#include "uwbloc/error.hpp"

namespace uwbloc {

namespace {

struct Centroids {
  Point2 uwb{};
  Point2 odom{};
};

Centroids centroids(std::span<const CorrespondencePair> pairs) {
  Centroids c;
  for (const auto& p : pairs) {
    c.uwb += p.uwb.value;
    c.odom += p.odom.value;
  }
  const double n = static_cast<double>(pairs.size());
  c.uwb = c.uwb / n;
  c.odom = c.odom / n;
  return c;
}

Eigen::Matrix2d uwb_scatter(std::span<const CorrespondencePair> pairs, const Point2& mean) {
  Eigen::Matrix2d s = Eigen::Matrix2d::Zero();
  for (const auto& p : pairs) {
    const Eigen::Vector2d d(p.uwb.value.x - mean.x, p.uwb.value.y - mean.y);
    s += d * d.transpose();
  }
  return s;
}

double alignment_cost(std::span<const CorrespondencePair> pairs, const FrameTransform& t) {
  double c = 0.0;
  for (const auto& p : pairs) {
    const Point2 r = apply_transform(t, p.uwb.value) - p.odom.value;
    c += r.dot(r);
  }
  return c;
}

struct GaussNewtonOutcome {
  FrameTransform transform;
  double cost;
  int iterations;
  bool converged;
};

GaussNewtonOutcome gauss_newton(std::span<const CorrespondencePair> pairs, double theta0,
                                const AlignmentConfig& config) {
  const Centroids c = centroids(pairs);
  Eigen::Vector3d x(theta0, 0.0, 0.0);
  const Point2 t0 = c.odom - rotate(theta0, c.uwb);
  x(1) = t0.x;
  x(2) = t0.y;
  auto as_transform = [](const Eigen::Vector3d& v) {
    return FrameTransform{normalize_angle(v(0)), {v(1), v(2)}};
  };

  double cost = alignment_cost(pairs, as_transform(x));
  int it = 0;
  bool converged = false;
  while (it < config.max_iterations) {
    ++it;
    const double cs = std::cos(x(0));
    const double sn = std::sin(x(0));
    Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
    Eigen::Vector3d g = Eigen::Vector3d::Zero();
    for (const auto& p : pairs) {
      const double ux = p.uwb.value.x;
      const double uy = p.uwb.value.y;
      const Eigen::Vector2d r(cs * ux - sn * uy + x(1) - p.odom.value.x,
                              sn * ux + cs * uy + x(2) - p.odom.value.y);
      Eigen::Matrix<double, 2, 3> j;
      j << -sn * ux - cs * uy, 1.0, 0.0,
            cs * ux - sn * uy, 0.0, 1.0;
      h += j.transpose() * j;
      g += j.transpose() * r;
    }
    Eigen::Vector3d step = h.ldlt().solve(-g);
    if (!step.allFinite()) break;

    // Backtrack so a start near the cost maximum cannot overshoot.
    double scale = 1.0;
    Eigen::Vector3d candidate = x + step;
    double candidate_cost = alignment_cost(pairs, as_transform(candidate));
    for (int k = 0; k < 40 && candidate_cost > cost; ++k) {
      scale *= 0.5;
      candidate = x + scale * step;
      candidate_cost = alignment_cost(pairs, as_transform(candidate));
    }
    const double step_norm = scale * step.norm();
    if (candidate_cost <= cost) {
      x = candidate;
      cost = candidate_cost;
    }
    if (step_norm <= config.step_tolerance || (step_norm < 1e-9 && candidate_cost >= cost)) {
      converged = true;
      break;
    }
  }
  return {as_transform(x), cost, it, converged};
}

}  // namespace

void CorrespondenceBuffer::append(const CorrespondencePair& pair) {
  if (!pairs_.empty() && !(pair.timestamp > pairs_.back().timestamp)) {
    throw Error(ErrorCode::NonMonotonicTimestamp,
                "pair timestamp " + std::to_string(pair.timestamp) + " does not exceed " +
                    std::to_string(pairs_.back().timestamp));
  }
  pairs_.push_back(pair);
}

void CorrespondenceBuffer::write_csv(std::ostream& out) const {
  out << "timestamp,ux,uy,ox,oy\n";
  for (const auto& p : pairs_) {
    out << p.timestamp << ',' << p.uwb.value.x << ',' << p.uwb.value.y << ',' << p.odom.value.x
        << ',' << p.odom.value.y << '\n';
  }
}

CorrespondenceBuffer record_pair(CorrespondenceBuffer buffer, const FixResult& fix,
                                 const OdomPose& odom_pose, double timestamp) {
  buffer.append({fix.position, {odom_pose.value.position}, timestamp});
  return buffer;
}

FrameTransform procrustes_alignment(std::span<const CorrespondencePair> pairs) {
  if (pairs.empty()) throw Error(ErrorCode::TooFewPairs, "no pairs");
  const Centroids c = centroids(pairs);
  double dot_sum = 0.0;
  double cross_sum = 0.0;
  for (const auto& p : pairs) {
    const Point2 u = p.uwb.value - c.uwb;
    const Point2 o = p.odom.value - c.odom;
    dot_sum += u.x * o.x + u.y * o.y;
    cross_sum += u.x * o.y - u.y * o.x;
  }
  const double theta = normalize_angle(std::atan2(cross_sum, dot_sum));
  return {theta, c.odom - rotate(theta, c.uwb)};
}

AlignmentResult solve_alignment(const CorrespondenceBuffer& buffer, const AlignmentConfig& config) {
  const auto pairs = buffer.pairs();
  if (pairs.size() < 3) {
    throw Error(ErrorCode::TooFewPairs, std::to_string(pairs.size()) + " pairs, need 3");
  }

  // Largest distance of any UWB point from the principal line.
  const Centroids c = centroids(pairs);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(uwb_scatter(pairs, c.uwb));
  const Eigen::Vector2d normal = eig.eigenvectors().col(0);
  double max_offset = 0.0;
  for (const auto& p : pairs) {
    const Eigen::Vector2d d(p.uwb.value.x - c.uwb.x, p.uwb.value.y - c.uwb.y);
    max_offset = std::max(max_offset, std::abs(normal.dot(d)));
  }
  if (max_offset < config.degenerate_line_distance) {
    throw Error(ErrorCode::DegenerateGeometry,
                "UWB points lie within " + std::to_string(max_offset) + " m of a line");
  }

  GaussNewtonOutcome best{{}, std::numeric_limits<double>::infinity(), 0, false};
  constexpr std::array<double, 4> kStarts{0.0, std::numbers::pi / 2, std::numbers::pi,
                                          -std::numbers::pi / 2};
  for (double theta0 : kStarts) {
    GaussNewtonOutcome o = gauss_newton(pairs, theta0, config);
    if (o.converged && o.cost < best.cost) best = o;
  }
  if (!best.converged) {
    throw Error(ErrorCode::NoConvergence, "alignment Gauss-Newton did not converge");
  }

  const FrameTransform closed = procrustes_alignment(pairs);
  const double rotation_gap = std::abs(normalize_angle(best.transform.rotation - closed.rotation));
  const double translation_gap = (best.transform.translation - closed.translation).norm();
  if (rotation_gap > config.agreement_rotation || translation_gap > config.agreement_translation) {
    throw Error(ErrorCode::NoConvergence,
                "iterative and closed-form alignments disagree (" + std::to_string(rotation_gap) +
                    " rad, " + std::to_string(translation_gap) + " m)");
  }

  AlignmentResult result;
  result.transform = {best.transform};
  result.pair_count = pairs.size();
  result.iterations = best.iterations;
  result.closed_form = closed;
  result.rms_error = std::sqrt(best.cost / static_cast<double>(pairs.size()));
  return result;
}

Observability assess_observability(const CorrespondenceBuffer& buffer) {
  const auto pairs = buffer.pairs();
  if (pairs.size() < 2) throw Error(ErrorCode::TooFewPairs, "observability needs 2 pairs");
  const Centroids c = centroids(pairs);
  const Eigen::Matrix2d s = uwb_scatter(pairs, c.uwb);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(s, Eigen::EigenvaluesOnly);
  const double lo = std::max(0.0, eig.eigenvalues()(0));
  const double hi = std::max(0.0, eig.eigenvalues()(1));
  Observability o;
  o.spread = std::sqrt(s.trace() / static_cast<double>(pairs.size()));
  o.collinearity_ratio = hi > 0.0 ? std::sqrt(lo / hi) : 0.0;
  return o;
}

}  // namespace uwbloc
