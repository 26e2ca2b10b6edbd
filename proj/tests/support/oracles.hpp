#pragma once

// Independent reference computations for tests. Nothing here calls into the
// library's solvers; each oracle recomputes its quantity from first
// principles (explicit matrices, grids, SVD) so agreement means something.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "uwbloc/error.hpp"
#include "uwbloc/geometry.hpp"

#define EXPECT_ERROR_CODE(statement, expected)                                  \
  do {                                                                          \
    try {                                                                       \
      statement;                                                                \
      ADD_FAILURE() << "expected " << ::uwbloc::to_string(expected);            \
    } catch (const ::uwbloc::Error& e__) {                                      \
      EXPECT_EQ(e__.code(), expected) << e__.what();                            \
    }                                                                           \
  } while (0)

namespace oracle {

using uwbloc::Point2;

// Homogeneous 3x3 matrix of a rigid transform.
inline Eigen::Matrix3d homogeneous(double theta, Point2 t) {
  Eigen::Matrix3d m;
  m << std::cos(theta), -std::sin(theta), t.x, std::sin(theta), std::cos(theta), t.y, 0, 0, 1;
  return m;
}

inline Point2 apply(const Eigen::Matrix3d& m, Point2 p) {
  const Eigen::Vector3d r = m * Eigen::Vector3d(p.x, p.y, 1.0);
  return {r.x(), r.y()};
}

inline double angle_of(const Eigen::Matrix3d& m) { return std::atan2(m(1, 0), m(0, 0)); }

// SDS-TWR intervals forward-simulated from a flight time, with each interval
// measured by the clock of the node that times it.
struct Intervals {
  double round1, reply1, round2, reply2;
};
inline Intervals forward_twr(double tof, double reply_tag, double reply_anchor, double drift_tag,
                             double drift_anchor) {
  return {(2 * tof + reply_anchor) * (1 + drift_tag), reply_anchor * (1 + drift_anchor),
          (2 * tof + reply_tag) * (1 + drift_anchor), reply_tag * (1 + drift_tag)};
}

// sqrt(trace((J^T J)^-1)) with the 2x2 inverse written out.
inline double gdop(std::span<const Point2> anchors, Point2 p) {
  double a = 0, b = 0, d = 0;
  for (const auto& q : anchors) {
    const double dx = p.x - q.x, dy = p.y - q.y, r = std::hypot(dx, dy);
    a += dx * dx / (r * r);
    b += dx * dy / (r * r);
    d += dy * dy / (r * r);
  }
  const double det = a * d - b * b;
  return std::sqrt((a + d) / det);
}

inline double range_objective(std::span<const Point2> anchors, std::span<const double> ranges, Point2 p) {
  double s = 0;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const double r = std::hypot(p.x - anchors[i].x, p.y - anchors[i].y) - ranges[i];
    s += r * r;
  }
  return s;
}

// Exhaustive search over a regular grid; returns (argmin, min).
inline std::pair<Point2, double> grid_minimum(std::span<const Point2> anchors, std::span<const double> ranges,
                                              double x0, double x1, double y0, double y1, double step) {
  const long nx = std::lround((x1 - x0) / step), ny = std::lround((y1 - y0) / step);
  std::vector<double> ax, ay;
  for (const auto& a : anchors) {
    ax.push_back(a.x);
    ay.push_back(a.y);
  }
  Point2 best{};
  double best_value = std::numeric_limits<double>::infinity();
  std::vector<double> row(static_cast<std::size_t>(nx + 1));
  for (long j = 0; j <= ny; ++j) {
    const double y = y0 + j * step;
    std::fill(row.begin(), row.end(), 0.0);
    for (std::size_t k = 0; k < ax.size(); ++k) {
      const double dy2 = (y - ay[k]) * (y - ay[k]);
      for (long i = 0; i <= nx; ++i) {
        const double x = x0 + i * step;
        const double r = std::sqrt((x - ax[k]) * (x - ax[k]) + dy2) - ranges[k];
        row[i] += r * r;
      }
    }
    for (long i = 0; i <= nx; ++i) {
      if (row[i] < best_value) {
        best_value = row[i];
        best = {x0 + i * step, y};
      }
    }
  }
  return {best, best_value};
}

// Rigid least-squares fit o ~ R u + t by SVD of the cross-covariance (Kabsch).
inline std::pair<double, Point2> kabsch(std::span<const Point2> u, std::span<const Point2> o) {
  Eigen::Vector2d cu = Eigen::Vector2d::Zero(), co = Eigen::Vector2d::Zero();
  for (std::size_t i = 0; i < u.size(); ++i) {
    cu += Eigen::Vector2d(u[i].x, u[i].y);
    co += Eigen::Vector2d(o[i].x, o[i].y);
  }
  cu /= static_cast<double>(u.size());
  co /= static_cast<double>(u.size());
  Eigen::Matrix2d h = Eigen::Matrix2d::Zero();
  for (std::size_t i = 0; i < u.size(); ++i) {
    h += (Eigen::Vector2d(u[i].x, u[i].y) - cu) * (Eigen::Vector2d(o[i].x, o[i].y) - co).transpose();
  }
  Eigen::JacobiSVD<Eigen::Matrix2d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix2d d = Eigen::Matrix2d::Identity();
  d(1, 1) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0 ? -1.0 : 1.0;
  const Eigen::Matrix2d r = svd.matrixV() * d * svd.matrixU().transpose();
  const Eigen::Vector2d t = co - r * cu;
  return {std::atan2(r(1, 0), r(0, 0)), {t.x(), t.y()}};
}

inline double angle_diff(double a, double b) { return std::abs(std::remainder(a - b, 2 * M_PI)); }

}  // namespace oracle
