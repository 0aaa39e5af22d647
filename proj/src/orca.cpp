#include "swarm/orca.hpp"

#include <algorithm>
#include <cmath>

namespace swarm {
namespace {

constexpr double kEps = 1e-10;

double det2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// ---------------------------------------------------------------------------
// 2D solver. Constraints are directed lines; the feasible side of each is
// normal . (v - point) >= 0 with normal = rot90ccw(direction).

struct Line2 {
  Vec2 point;
  Vec2 direction;  // unit tangent, feasible half-plane on its left
};

Vec2 left_normal(const Vec2& d) { return Vec2(-d.y(), d.x()); }

// Optimizes along the boundary of constraint `index` subject to the earlier
// constraints and the speed disc. Returns false when that segment is empty.
bool lp1(const std::vector<Line2>& lines, int index, double radius, const Vec2& opt,
         bool direction_opt, Vec2& result) {
  const Vec2& q = lines[index].point;
  const Vec2& d = lines[index].direction;

  const double dot = q.dot(d);
  const double disc = dot * dot + radius * radius - q.squaredNorm();
  if (disc < 0.0) return false;

  const double root = std::sqrt(disc);
  double t_left = -dot - root;
  double t_right = -dot + root;

  for (int j = 0; j < index; ++j) {
    const double denom = det2(d, lines[j].direction);
    const double num = det2(lines[j].direction, q - lines[j].point);
    if (std::abs(denom) <= kEps) {
      if (num < 0.0) return false;  // parallel and on the wrong side
      continue;
    }
    const double t = num / denom;
    if (denom >= 0.0)
      t_right = std::min(t_right, t);
    else
      t_left = std::max(t_left, t);
    if (t_left > t_right) return false;
  }

  double t;
  if (direction_opt)
    t = opt.dot(d) > 0.0 ? t_right : t_left;
  else
    t = std::clamp(d.dot(opt - q), t_left, t_right);
  result = q + t * d;
  return true;
}

// Incrementally enforces constraints; on a violated one the optimum moves to
// that boundary via lp1. Returns the index of the first unsatisfiable
// constraint, or lines.size() when all hold.
int lp2(const std::vector<Line2>& lines, double radius, const Vec2& opt, bool direction_opt,
        Vec2& result) {
  if (direction_opt)
    result = opt * radius;  // opt is a unit direction here
  else if (opt.squaredNorm() > radius * radius)
    result = opt.normalized() * radius;
  else
    result = opt;

  for (int i = 0; i < static_cast<int>(lines.size()); ++i) {
    if (det2(lines[i].direction, lines[i].point - result) > 0.0) {
      const Vec2 temp = result;
      if (!lp1(lines, i, radius, opt, direction_opt, result)) {
        result = temp;
        return i;
      }
    }
  }
  return static_cast<int>(lines.size());
}

// Least-penetration fallback: walks the constraints from the first failure
// and minimizes the maximum violation over the prefix.
void lp3(const std::vector<Line2>& lines, int begin, double radius, Vec2& result) {
  double distance = 0.0;
  for (int i = begin; i < static_cast<int>(lines.size()); ++i) {
    if (det2(lines[i].direction, lines[i].point - result) > distance) {
      std::vector<Line2> proj;
      proj.reserve(i);
      for (int j = 0; j < i; ++j) {
        Line2 line;
        const double determinant = det2(lines[i].direction, lines[j].direction);
        if (std::abs(determinant) <= kEps) {
          if (lines[i].direction.dot(lines[j].direction) > 0.0) continue;
          line.point = 0.5 * (lines[i].point + lines[j].point);
        } else {
          line.point = lines[i].point + (det2(lines[j].direction, lines[i].point - lines[j].point) /
                                         determinant) *
                                            lines[i].direction;
        }
        line.direction = (lines[j].direction - lines[i].direction).normalized();
        proj.push_back(line);
      }
      const Vec2 temp = result;
      if (lp2(proj, radius, left_normal(lines[i].direction), true, result) <
          static_cast<int>(proj.size()))
        result = temp;
      distance = det2(lines[i].direction, lines[i].point - result);
    }
  }
}

Line2 constraint_for(const Vec2& own_velocity, const Vec2& rel_pos, const Vec2& rel_vel,
                     double combined_radius, const OrcaParams& p) {
  const double dist_sq = rel_pos.squaredNorm();
  const double r_sq = combined_radius * combined_radius;
  const double inv_tau = 1.0 / p.time_horizon;

  Vec2 direction;
  Vec2 u;
  if (dist_sq > r_sq) {
    const Vec2 w = rel_vel - inv_tau * rel_pos;
    const double w_sq = w.squaredNorm();
    const double dot = w.dot(rel_pos);
    if (dot < 0.0 && dot * dot > r_sq * w_sq) {
      // Closest point on the truncation disc.
      const double w_len = std::sqrt(w_sq);
      const Vec2 unit_w = w / w_len;
      direction = Vec2(unit_w.y(), -unit_w.x());
      u = (combined_radius * inv_tau - w_len) * unit_w;
    } else {
      // Closest point on one of the cone legs.
      const double leg = std::sqrt(dist_sq - r_sq);
      if (det2(rel_pos, w) > 0.0)
        direction = Vec2(rel_pos.x() * leg - rel_pos.y() * combined_radius,
                         rel_pos.x() * combined_radius + rel_pos.y() * leg) /
                    dist_sq;
      else
        direction = -Vec2(rel_pos.x() * leg + rel_pos.y() * combined_radius,
                          -rel_pos.x() * combined_radius + rel_pos.y() * leg) /
                    dist_sq;
      u = rel_vel.dot(direction) * direction - rel_vel;
    }
  } else {
    // Discs already overlap; push apart within one control step.
    const double inv_step = 1.0 / p.time_step;
    const Vec2 w = rel_vel - inv_step * rel_pos;
    const double w_len = w.norm();
    const Vec2 unit_w = w_len > kEps ? Vec2(w / w_len) : Vec2(1.0, 0.0);
    direction = Vec2(unit_w.y(), -unit_w.x());
    u = (combined_radius * inv_step - w_len) * unit_w;
  }

  Line2 line;
  line.point = own_velocity + 0.5 * u;
  line.direction = direction;
  return line;
}

std::vector<Line2> build_lines(const Vec2& own_velocity,
                               const std::vector<NeighborObservation<2>>& neighbors,
                               const OrcaParams& p) {
  std::vector<Line2> lines;
  lines.reserve(neighbors.size());
  for (const auto& nb : neighbors) {
    if (nb.distance <= kEps) continue;  // coincident reading carries no direction
    const Vec2 rel_pos = neighbor_rel_position(nb);
    // Observations carry v_other - v_self; the cone wants self-relative.
    const Vec2 rel_vel = -nb.rel_velocity;
    lines.push_back(constraint_for(own_velocity, rel_pos, rel_vel, 2.0 * p.agent_radius, p));
  }
  return lines;
}

// ---------------------------------------------------------------------------
// 3D solver. Constraints are planes with the feasible side along the normal.

struct Plane3 {
  Vec3 point;
  Vec3 normal;  // unit, feasible: normal . (v - point) >= 0
};

struct Ray3 {
  Vec3 point;
  Vec3 direction;
};

bool lp1_3d(const std::vector<Plane3>& planes, int index, const Ray3& line, double radius,
            const Vec3& opt, bool direction_opt, Vec3& result) {
  const double dot = line.point.dot(line.direction);
  const double disc = dot * dot + radius * radius - line.point.squaredNorm();
  if (disc < 0.0) return false;

  const double root = std::sqrt(disc);
  double t_left = -dot - root;
  double t_right = -dot + root;

  for (int j = 0; j < index; ++j) {
    const double num = (planes[j].point - line.point).dot(planes[j].normal);
    const double denom = line.direction.dot(planes[j].normal);
    if (denom * denom <= kEps) {
      if (num > 0.0) return false;
      continue;
    }
    const double t = num / denom;
    if (denom >= 0.0)
      t_left = std::max(t_left, t);
    else
      t_right = std::min(t_right, t);
    if (t_left > t_right) return false;
  }

  double t;
  if (direction_opt)
    t = opt.dot(line.direction) > 0.0 ? t_right : t_left;
  else
    t = std::clamp(line.direction.dot(opt - line.point), t_left, t_right);
  result = line.point + t * line.direction;
  return true;
}

bool lp2_3d(const std::vector<Plane3>& planes, int index, double radius, const Vec3& opt,
            bool direction_opt, Vec3& result) {
  const double plane_dist = planes[index].point.dot(planes[index].normal);
  const double radius_sq = radius * radius;
  if (plane_dist * plane_dist > radius_sq) return false;

  const double circle_r_sq = radius_sq - plane_dist * plane_dist;
  const Vec3 center = plane_dist * planes[index].normal;

  if (direction_opt) {
    const Vec3 in_plane = opt - opt.dot(planes[index].normal) * planes[index].normal;
    const double len_sq = in_plane.squaredNorm();
    if (len_sq <= kEps)
      result = center;
    else
      result = center + std::sqrt(circle_r_sq / len_sq) * in_plane;
  } else {
    result = opt + (planes[index].point - opt).dot(planes[index].normal) * planes[index].normal;
    if (result.squaredNorm() > radius_sq) {
      const Vec3 off = result - center;
      result = center + std::sqrt(circle_r_sq / off.squaredNorm()) * off;
    }
  }

  for (int j = 0; j < index; ++j) {
    if (planes[j].normal.dot(planes[j].point - result) > 0.0) {
      const Vec3 cross = planes[j].normal.cross(planes[index].normal);
      if (cross.squaredNorm() <= kEps) return false;
      Ray3 line;
      line.direction = cross.normalized();
      const Vec3 line_normal = line.direction.cross(planes[index].normal);
      line.point = planes[index].point +
                   ((planes[j].point - planes[index].point).dot(planes[j].normal) /
                    line_normal.dot(planes[j].normal)) *
                       line_normal;
      if (!lp1_3d(planes, j, line, radius, opt, direction_opt, result)) return false;
    }
  }
  return true;
}

int lp3_3d(const std::vector<Plane3>& planes, double radius, const Vec3& opt, bool direction_opt,
           Vec3& result) {
  if (direction_opt)
    result = opt * radius;
  else if (opt.squaredNorm() > radius * radius)
    result = opt.normalized() * radius;
  else
    result = opt;

  for (int i = 0; i < static_cast<int>(planes.size()); ++i) {
    if (planes[i].normal.dot(planes[i].point - result) > 0.0) {
      const Vec3 temp = result;
      if (!lp2_3d(planes, i, radius, opt, direction_opt, result)) {
        result = temp;
        return i;
      }
    }
  }
  return static_cast<int>(planes.size());
}

void lp4_3d(const std::vector<Plane3>& planes, int begin, double radius, Vec3& result) {
  double distance = 0.0;
  for (int i = begin; i < static_cast<int>(planes.size()); ++i) {
    if (planes[i].normal.dot(planes[i].point - result) > distance) {
      std::vector<Plane3> proj;
      proj.reserve(i);
      for (int j = 0; j < i; ++j) {
        Plane3 plane;
        const Vec3 cross = planes[j].normal.cross(planes[i].normal);
        if (cross.squaredNorm() <= kEps) {
          if (planes[i].normal.dot(planes[j].normal) > 0.0) continue;
          plane.point = 0.5 * (planes[i].point + planes[j].point);
        } else {
          const Vec3 line_normal = cross.cross(planes[i].normal);
          plane.point = planes[i].point +
                        ((planes[j].point - planes[i].point).dot(planes[j].normal) /
                         line_normal.dot(planes[j].normal)) *
                            line_normal;
        }
        plane.normal = (planes[j].normal - planes[i].normal).normalized();
        proj.push_back(plane);
      }
      const Vec3 temp = result;
      if (lp3_3d(proj, radius, planes[i].normal, true, result) < static_cast<int>(proj.size()))
        result = temp;
      distance = planes[i].normal.dot(planes[i].point - result);
    }
  }
}

Plane3 constraint_for_3d(const Vec3& own_velocity, const Vec3& rel_pos, const Vec3& rel_vel,
                         double combined_radius, const OrcaParams& p) {
  const double dist_sq = rel_pos.squaredNorm();
  const double r_sq = combined_radius * combined_radius;
  const double inv_tau = 1.0 / p.time_horizon;

  Vec3 normal;
  Vec3 u;
  if (dist_sq > r_sq) {
    const Vec3 w = rel_vel - inv_tau * rel_pos;
    const double w_sq = w.squaredNorm();
    const double dot = w.dot(rel_pos);
    if (dot < 0.0 && dot * dot > r_sq * w_sq) {
      const double w_len = std::sqrt(w_sq);
      normal = w / w_len;
      u = (combined_radius * inv_tau - w_len) * normal;
    } else {
      // Project onto the cone surface; t parametrizes the tangent point.
      const double a = dist_sq;
      const double b = rel_pos.dot(rel_vel);
      const double c = rel_vel.squaredNorm() -
                       rel_pos.cross(rel_vel).squaredNorm() / (dist_sq - r_sq);
      const double t = (b + std::sqrt(std::max(0.0, b * b - a * c))) / a;
      const Vec3 w_leg = rel_vel - t * rel_pos;
      const double w_len = w_leg.norm();
      normal = w_len > kEps ? Vec3(w_leg / w_len) : Vec3(Vec3::UnitX());
      u = (combined_radius * t - w_len) * normal;
    }
  } else {
    const double inv_step = 1.0 / p.time_step;
    const Vec3 w = rel_vel - inv_step * rel_pos;
    const double w_len = w.norm();
    normal = w_len > kEps ? Vec3(w / w_len) : Vec3(Vec3::UnitX());
    u = (combined_radius * inv_step - w_len) * normal;
  }

  Plane3 plane;
  plane.point = own_velocity + 0.5 * u;
  plane.normal = normal;
  return plane;
}

}  // namespace

std::vector<HalfPlane> orca_halfplanes(const Vec2& own_velocity,
                                       const std::vector<NeighborObservation<2>>& neighbors,
                                       const OrcaParams& params) {
  params.validate();
  std::vector<HalfPlane> out;
  for (const auto& line : build_lines(own_velocity, neighbors, params))
    out.push_back(HalfPlane{line.point, left_normal(line.direction)});
  return out;
}

OrcaResult<2> orca_velocity(const Vec2& own_velocity,
                            const std::vector<NeighborObservation<2>>& neighbors,
                            const Vec2& preferred_velocity, const OrcaParams& params) {
  params.validate();
  const std::vector<Line2> lines = build_lines(own_velocity, neighbors, params);

  OrcaResult<2> res;
  const int fail = lp2(lines, params.max_speed, preferred_velocity, false, res.velocity);
  if (fail < static_cast<int>(lines.size())) {
    res.feasible = false;
    lp3(lines, fail, params.max_speed, res.velocity);
  }
  return res;
}

OrcaResult<3> orca_velocity(const Vec3& own_velocity,
                            const std::vector<NeighborObservation<3>>& neighbors,
                            const Vec3& preferred_velocity, const OrcaParams& params) {
  params.validate();
  std::vector<Plane3> planes;
  planes.reserve(neighbors.size());
  for (const auto& nb : neighbors) {
    if (nb.distance <= kEps) continue;
    const Vec3 rel_pos = neighbor_rel_position(nb);
    const Vec3 rel_vel = -nb.rel_velocity;
    planes.push_back(
        constraint_for_3d(own_velocity, rel_pos, rel_vel, 2.0 * params.agent_radius, params));
  }

  OrcaResult<3> res;
  const int fail = lp3_3d(planes, params.max_speed, preferred_velocity, false, res.velocity);
  if (fail < static_cast<int>(planes.size())) {
    res.feasible = false;
    lp4_3d(planes, fail, params.max_speed, res.velocity);
  }
  return res;
}

}  // namespace swarm
