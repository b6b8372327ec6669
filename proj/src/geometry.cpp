#include "skillplan/geometry.hpp"

#include <algorithm>
#include <array>

namespace skillplan {

namespace {

int orientation_sign(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double v = (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
  if (v > 0) return 1;
  if (v < 0) return -1;
  return 0;
}

bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
  return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) &&
         std::min(a.y(), b.y()) <= p.y() && p.y() <= std::max(a.y(), b.y());
}

bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const int o1 = orientation_sign(a, b, c);
  const int o2 = orientation_sign(a, b, d);
  const int o3 = orientation_sign(c, d, a);
  const int o4 = orientation_sign(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

}  // namespace

double segment_segment_distance(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  if (segments_intersect(a, b, c, d)) return 0.0;
  return std::min(std::min(point_segment_distance(c, a, b), point_segment_distance(d, a, b)),
                  std::min(point_segment_distance(a, c, d), point_segment_distance(b, c, d)));
}

double segment_aabb_distance(const Vec2& a, const Vec2& b, const Aabb& box) {
  if (box.contains(a) || box.contains(b)) return 0.0;
  const Vec2 c0 = box.lo;
  const Vec2 c1(box.hi.x(), box.lo.y());
  const Vec2 c2 = box.hi;
  const Vec2 c3(box.lo.x(), box.hi.y());
  const std::array<std::pair<Vec2, Vec2>, 4> edges = {
      std::make_pair(c0, c1), std::make_pair(c1, c2),
      std::make_pair(c2, c3), std::make_pair(c3, c0)};
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [e0, e1] : edges) best = std::min(best, segment_segment_distance(a, b, e0, e1));
  return best;
}

double point_aabb_distance(const Vec2& p, const Aabb& box) {
  const double dx = std::max({box.lo.x() - p.x(), 0.0, p.x() - box.hi.x()});
  const double dy = std::max({box.lo.y() - p.y(), 0.0, p.y() - box.hi.y()});
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace skillplan
