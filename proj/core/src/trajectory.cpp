#include "csmaap/sim.hpp"

#include <cmath>

namespace csmaap::sim {

double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

Trajectory Trajectory::fixed(Vec2 p) {
  Trajectory t;
  t.origin = p;
  return t;
}

Trajectory Trajectory::linear(Vec2 a, Vec2 b, double speed, double start_time) {
  Trajectory t;
  t.kind = TrajectoryKind::LinearBackAndForth;
  t.origin = a;
  t.end = b;
  t.speed_mps = speed;
  t.start_time_s = start_time;
  return t;
}

Trajectory Trajectory::circular(Vec2 centre, double radius, double speed, double start_angle,
                                double start_time) {
  Trajectory t;
  t.kind = TrajectoryKind::Circular;
  t.origin = centre;
  t.radius_m = radius;
  t.speed_mps = speed;
  t.start_angle_rad = start_angle;
  t.start_time_s = start_time;
  return t;
}

void Trajectory::validate() const {
  if (!(speed_mps >= 0.0) || !std::isfinite(speed_mps)) {
    throw InvalidArgument("trajectory: speed must be finite and non-negative");
  }
  if (!std::isfinite(start_time_s)) throw InvalidArgument("trajectory: start_time must be finite");
  switch (kind) {
    case TrajectoryKind::Static:
      break;
    case TrajectoryKind::LinearBackAndForth:
      if (distance(origin, end) <= 0.0 && speed_mps > 0.0) {
        throw InvalidArgument("trajectory: linear path needs distinct endpoints");
      }
      break;
    case TrajectoryKind::Circular:
      if (!(radius_m > 0.0)) throw InvalidArgument("trajectory: circle radius must be positive");
      break;
    case TrajectoryKind::Waypoints:
      if (waypoints.size() < 2) throw InvalidArgument("trajectory: need at least two waypoints");
      break;
  }
}

namespace {

// Arc length s in [0, 2L) folded onto a back-and-forth walk of length L.
double fold(double travelled, double length) {
  const double s = std::fmod(travelled, 2.0 * length);
  return s <= length ? s : 2.0 * length - s;
}

Vec2 lerp(Vec2 a, Vec2 b, double f) { return Vec2{a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f}; }

}  // namespace

Vec2 trajectory_position(const Trajectory& traj, double t) {
  const double moving = std::max(0.0, t - traj.start_time_s);
  const double travelled = traj.speed_mps * moving;
  switch (traj.kind) {
    case TrajectoryKind::Static:
      return traj.origin;
    case TrajectoryKind::LinearBackAndForth: {
      const double length = distance(traj.origin, traj.end);
      if (length <= 0.0) return traj.origin;
      return lerp(traj.origin, traj.end, fold(travelled, length) / length);
    }
    case TrajectoryKind::Circular: {
      const double angle = traj.start_angle_rad + travelled / traj.radius_m;
      return Vec2{traj.origin.x + traj.radius_m * std::cos(angle),
                  traj.origin.y + traj.radius_m * std::sin(angle)};
    }
    case TrajectoryKind::Waypoints: {
      const auto& w = traj.waypoints;
      if (w.empty()) return traj.origin;
      double total = 0.0;
      for (std::size_t i = 1; i < w.size(); ++i) total += distance(w[i - 1], w[i]);
      if (total <= 0.0) return w.front();
      double s = fold(travelled, total);
      for (std::size_t i = 1; i < w.size(); ++i) {
        const double seg = distance(w[i - 1], w[i]);
        if (s <= seg || i + 1 == w.size()) {
          return seg > 0.0 ? lerp(w[i - 1], w[i], std::min(1.0, s / seg)) : w[i];
        }
        s -= seg;
      }
      return w.back();
    }
  }
  return traj.origin;
}

}  // namespace csmaap::sim
