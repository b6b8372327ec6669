#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace skillplan {

using Vec2 = Eigen::Vector2d;

/// Wrap an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * M_PI);
  if (a <= -M_PI) a += 2.0 * M_PI;
  if (a > M_PI) a -= 2.0 * M_PI;
  return a;
}

/// Planar rigid-body pose (meters, radians). theta is kept in (-pi, pi].
struct PlanarPose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  PlanarPose() = default;
  PlanarPose(double px, double py, double pth) : x(px), y(py), theta(wrap_angle(pth)) {}

  Vec2 position() const { return Vec2(x, y); }

  /// this * other (apply `other` in this pose's frame).
  PlanarPose compose(const PlanarPose& other) const {
    const double c = std::cos(theta), s = std::sin(theta);
    return PlanarPose(x + c * other.x - s * other.y,
                      y + s * other.x + c * other.y,
                      theta + other.theta);
  }

  PlanarPose inverse() const {
    const double c = std::cos(theta), s = std::sin(theta);
    return PlanarPose(-(c * x + s * y), -(-s * x + c * y), -theta);
  }

  /// Pose of `other` expressed in this pose's frame: this^-1 * other.
  PlanarPose relative(const PlanarPose& other) const { return inverse().compose(other); }

  Vec2 transform_point(const Vec2& p) const {
    const double c = std::cos(theta), s = std::sin(theta);
    return Vec2(x + c * p.x() - s * p.y(), y + s * p.x() + c * p.y());
  }

  bool approx_equal(const PlanarPose& other, double tol_xy, double tol_th) const {
    return std::abs(x - other.x) <= tol_xy && std::abs(y - other.y) <= tol_xy &&
           std::abs(wrap_angle(theta - other.theta)) <= tol_th;
  }
};

/// Distance from point p to segment [a, b].
inline double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 <= 0.0) return (p - a).norm();
  double t = (p - a).dot(ab) / len2;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

/// Distance between segments [a,b] and [c,d]. Zero if they intersect.
double segment_segment_distance(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d);

/// Axis-aligned rectangle, lo <= hi componentwise.
struct Aabb {
  Vec2 lo = Vec2::Zero();
  Vec2 hi = Vec2::Zero();

  bool contains(const Vec2& p) const {
    return p.x() >= lo.x() && p.x() <= hi.x() && p.y() >= lo.y() && p.y() <= hi.y();
  }
};

/// Distance from segment [a,b] to the rectangle (0 if they touch or overlap).
double segment_aabb_distance(const Vec2& a, const Vec2& b, const Aabb& box);

/// Distance from a point to the rectangle (0 inside).
double point_aabb_distance(const Vec2& p, const Aabb& box);

}  // namespace skillplan
