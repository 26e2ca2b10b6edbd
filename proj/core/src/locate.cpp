#include "uwbloc/locate.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "uwbloc/error.hpp"

namespace uwbloc {

namespace {

struct UsableRange {
  AnchorId id;
  Point2 anchor;
  double distance;
  double timestamp;
};

double condition_number(const Eigen::Matrix2d& symmetric) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(symmetric, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues()(0);
  const double hi = eig.eigenvalues()(1);
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

double huber_weight(double r, const std::optional<double>& delta) {
  if (!delta || std::abs(r) <= *delta) return 1.0;
  return *delta / std::abs(r);
}

double robust_cost(double r, const std::optional<double>& delta) {
  if (!delta) return r * r;
  const double a = std::abs(r);
  // Scaled by 2 so the quadratic branch matches the plain squared residual.
  return a <= *delta ? r * r : 2.0 * *delta * (a - 0.5 * *delta);
}

double total_cost(std::span<const UsableRange> ranges, const Point2& p,
                  const std::optional<double>& delta) {
  double c = 0.0;
  for (const auto& u : ranges) c += robust_cost(distance(p, u.anchor) - u.distance, delta);
  return c;
}

Eigen::Vector2d unit_row(const Point2& p, const Point2& anchor) {
  const Point2 d = p - anchor;
  const double n = d.norm();
  if (n < 1e-12) return Eigen::Vector2d::Zero();
  return {d.x / n, d.y / n};
}

// Differencing every range equation against the first gives a linear system
// in p, exact for noiseless ranges. Anchors are already known not to be
// collinear, so the normal matrix is invertible.
Point2 linearized_solution(std::span<const UsableRange> ranges) {
  Eigen::Matrix2d ata = Eigen::Matrix2d::Zero();
  Eigen::Vector2d atb = Eigen::Vector2d::Zero();
  const UsableRange& r0 = ranges[0];
  const double k0 = r0.anchor.x * r0.anchor.x + r0.anchor.y * r0.anchor.y - r0.distance * r0.distance;
  for (std::size_t i = 1; i < ranges.size(); ++i) {
    const UsableRange& ri = ranges[i];
    const Eigen::Vector2d row(2.0 * (ri.anchor.x - r0.anchor.x), 2.0 * (ri.anchor.y - r0.anchor.y));
    const double b = ri.anchor.x * ri.anchor.x + ri.anchor.y * ri.anchor.y - ri.distance * ri.distance - k0;
    ata += row * row.transpose();
    atb += row * b;
  }
  const Eigen::Vector2d p = ata.ldlt().solve(atb);
  return {p.x(), p.y()};
}

struct Descent {
  Point2 p;
  double cost;
  int iterations;
  double last_step;
  bool converged;
};

Descent levenberg_marquardt(std::span<const UsableRange> used, Point2 p, const TrilaterationConfig& config) {
  double lambda = config.initial_damping;
  double cost = total_cost(used, p, config.huber_delta);
  double last_step = std::numeric_limits<double>::infinity();
  int iterations = 0;
  while (iterations < config.max_iterations) {
    ++iterations;
    Eigen::Matrix2d h = Eigen::Matrix2d::Zero();
    Eigen::Vector2d g = Eigen::Vector2d::Zero();
    for (const auto& u : used) {
      const double r = distance(p, u.anchor) - u.distance;
      const double w = huber_weight(r, config.huber_delta);
      const Eigen::Vector2d j = unit_row(p, u.anchor);
      h += w * j * j.transpose();
      g += w * j * r;
    }
    const Eigen::Matrix2d damped = h + lambda * Eigen::Matrix2d::Identity();
    const Eigen::Vector2d delta = damped.ldlt().solve(-g);
    const Point2 candidate{p.x + delta.x(), p.y + delta.y()};
    const double candidate_cost = total_cost(used, candidate, config.huber_delta);
    last_step = delta.norm();
    if (candidate_cost < cost) {
      p = candidate;
      cost = candidate_cost;
      lambda = std::max(lambda / 10.0, 1e-12);
    } else {
      lambda = std::min(lambda * 10.0, 1e12);
    }
    if (last_step < config.step_tolerance) return {p, cost, iterations, last_step, true};
  }
  return {p, cost, iterations, last_step, false};
}

}  // namespace

AnchorMap::AnchorMap(std::vector<Anchor> anchors) : anchors_(std::move(anchors)) {
  if (anchors_.empty()) throw Error(ErrorCode::InvalidAnchorMap, "anchor map is empty");
  for (std::size_t i = 0; i < anchors_.size(); ++i) {
    if (!anchors_[i].position.value.finite()) {
      throw Error(ErrorCode::InvalidAnchorMap, "anchor position is not finite");
    }
    for (std::size_t j = i + 1; j < anchors_.size(); ++j) {
      if (anchors_[i].id == anchors_[j].id) {
        throw Error(ErrorCode::InvalidAnchorMap,
                    "duplicate anchor id " + std::to_string(anchors_[i].id.value));
      }
      if (distance(anchors_[i].position.value, anchors_[j].position.value) < kMinSeparation) {
        throw Error(ErrorCode::InvalidAnchorMap,
                    "anchors " + std::to_string(anchors_[i].id.value) + " and " +
                        std::to_string(anchors_[j].id.value) + " are closer than 0.1 m");
      }
    }
  }
}

const Anchor* AnchorMap::find(AnchorId id) const noexcept {
  auto it = std::find_if(anchors_.begin(), anchors_.end(),
                         [id](const Anchor& a) { return a.id == id; });
  return it == anchors_.end() ? nullptr : &*it;
}

AnchorMap AnchorMap::subset(std::span<const AnchorId> ids) const {
  std::vector<Anchor> out;
  for (const auto& a : anchors_) {
    if (std::find(ids.begin(), ids.end(), a.id) != ids.end()) out.push_back(a);
  }
  return AnchorMap(std::move(out));
}

FixResult trilaterate(const AnchorMap& anchors, std::span<const RangeMeasurement> ranges,
                      std::optional<Point2> initial_guess, const TrilaterationConfig& config) {
  std::map<AnchorId, UsableRange> newest;
  for (const auto& m : ranges) {
    if (m.quality != RangeQuality::Ok) continue;
    const Anchor* a = anchors.find(m.anchor_id);
    if (a == nullptr) continue;
    auto [it, inserted] =
        newest.try_emplace(m.anchor_id, UsableRange{m.anchor_id, a->position.value, m.distance, m.timestamp});
    if (!inserted && m.timestamp >= it->second.timestamp) {
      it->second = {m.anchor_id, a->position.value, m.distance, m.timestamp};
    }
  }
  if (newest.size() < 3) {
    throw Error(ErrorCode::InsufficientAnchors,
                std::to_string(newest.size()) + " usable ranges, need 3");
  }
  std::vector<UsableRange> used;
  used.reserve(newest.size());
  for (const auto& [id, u] : newest) used.push_back(u);

  Point2 centroid{};
  for (const auto& u : used) centroid += u.anchor;
  centroid = centroid / static_cast<double>(used.size());

  // Collinear constellations leave the position unobservable across the line.
  Eigen::Matrix2d scatter = Eigen::Matrix2d::Zero();
  for (const auto& u : used) {
    const Eigen::Vector2d d(u.anchor.x - centroid.x, u.anchor.y - centroid.y);
    scatter += d * d.transpose();
  }
  if (condition_number(scatter) > config.max_condition) {
    throw Error(ErrorCode::SingularGeometry, "anchors are collinear");
  }

  // Without a caller's guess, descend from both the centroid and the
  // linearized solution: from the centroid alone LM can settle in a local
  // minimum when the rover is outside the anchor hull.
  Descent best = levenberg_marquardt(used, initial_guess.value_or(centroid), config);
  if (!initial_guess) {
    const Point2 linear = linearized_solution(used);
    if (linear.finite()) {
      const Descent other = levenberg_marquardt(used, linear, config);
      const bool other_ok = other.converged || other.last_step < config.divergence_tolerance;
      const bool best_ok = best.converged || best.last_step < config.divergence_tolerance;
      if (other_ok && (!best_ok || other.cost < best.cost)) best = other;
    }
  }
  if (!best.converged && best.last_step >= config.divergence_tolerance) {
    throw Error(ErrorCode::NoConvergence,
                "trilateration step norm " + std::to_string(best.last_step) + " after " +
                    std::to_string(best.iterations) + " iterations");
  }
  const Point2 p = best.p;
  const int iterations = best.iterations;

  Eigen::Matrix2d jtj = Eigen::Matrix2d::Zero();
  double sum_sq = 0.0;
  for (const auto& u : used) {
    const Eigen::Vector2d j = unit_row(p, u.anchor);
    jtj += j * j.transpose();
    const double r = distance(p, u.anchor) - u.distance;
    sum_sq += r * r;
  }
  if (condition_number(jtj) > config.max_condition) {
    throw Error(ErrorCode::SingularGeometry, "normal matrix is ill-conditioned at the solution");
  }

  FixResult fix;
  fix.position = {p};
  fix.residual_rms = std::sqrt(sum_sq / static_cast<double>(used.size()));
  fix.iterations = iterations;
  fix.gdop = std::sqrt(jtj.inverse().trace());
  for (const auto& u : used) {
    fix.used_anchor_ids.push_back(u.id);
    fix.timestamp = std::max(fix.timestamp, u.timestamp);
  }
  return fix;
}

double gdop(const AnchorMap& anchors, const Point2& position, double max_condition) {
  if (anchors.size() < 3) {
    throw Error(ErrorCode::InsufficientAnchors, "gdop needs at least 3 anchors");
  }
  Eigen::Matrix2d jtj = Eigen::Matrix2d::Zero();
  for (const auto& a : anchors.anchors()) {
    if (distance(position, a.position.value) < 1e-9) {
      throw Error(ErrorCode::InvalidArgument, "position coincides with an anchor");
    }
    const Eigen::Vector2d j = unit_row(position, a.position.value);
    jtj += j * j.transpose();
  }
  if (condition_number(jtj) > max_condition) {
    throw Error(ErrorCode::SingularGeometry, "J^T J is singular");
  }
  return std::sqrt(jtj.inverse().trace());
}

std::vector<RangeMeasurement> select_measurements(std::span<const RangeMeasurement> ranges,
                                                  double window, double now) {
  std::map<AnchorId, RangeMeasurement> newest;
  for (const auto& m : ranges) {
    if (m.quality != RangeQuality::Ok) continue;
    if (m.timestamp < now - window || m.timestamp > now) continue;
    auto [it, inserted] = newest.try_emplace(m.anchor_id, m);
    if (!inserted && m.timestamp >= it->second.timestamp) it->second = m;
  }
  std::vector<RangeMeasurement> out;
  out.reserve(newest.size());
  for (const auto& [id, m] : newest) out.push_back(m);
  return out;
}

}  // namespace uwbloc
