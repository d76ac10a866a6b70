#include "cpf/path.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace cpf {
namespace {

constexpr double kTieTolerance = 1e-12;
constexpr double kRangeTolerance = 1e-12;

Vector2<double> arc_center(const Segment& seg) {
  return seg.start.position + seg.start.normal() / seg.curvature;
}

// Local arclength of the nearest point on one segment.
double nearest_local_s(const Segment& seg, const Vector2<double>& p) {
  if (seg.kind == SegmentKind::kLine) {
    const double along = (p - seg.start.position).dot(seg.start.tangent());
    return std::clamp(along, 0.0, seg.length);
  }
  const Vector2<double> rel = p - arc_center(seg);
  if (rel.norm() < 1e-15) return 0.0;  // every point is equally far
  const double radial = std::atan2(rel.y(), rel.x());
  const double sign = seg.curvature > 0.0 ? 1.0 : -1.0;
  const double heading = radial + sign * kPi<double> / 2.0;
  double turned = std::fmod(sign * (heading - seg.start.heading), 2.0 * kPi<double>);
  if (turned < 0.0) turned += 2.0 * kPi<double>;
  const double local = turned / std::abs(seg.curvature);
  if (local <= seg.length) return local;
  // Foot outside the sweep: the closer endpoint wins, start on ties.
  const double d0 = (seg.start.position - p).norm();
  const double d1 = (seg.end().position - p).norm();
  return d1 < d0 - kTieTolerance ? seg.length : 0.0;
}

void push_if_better(std::optional<PathPoint>& best, const PathPoint& candidate) {
  if (!best || candidate.distance < best->distance - kTieTolerance ||
      (std::abs(candidate.distance - best->distance) <= kTieTolerance &&
       candidate.s < best->s)) {
    best = candidate;
  }
}

}  // namespace

Pose Segment::pose_at(double local_s) const {
  if (kind == SegmentKind::kLine) {
    return {start.position + local_s * start.tangent(), start.heading};
  }
  const double h0 = start.heading;
  const double h1 = h0 + curvature * local_s;
  const Vector2<double> shift((std::sin(h1) - std::sin(h0)) / curvature,
                              (std::cos(h0) - std::cos(h1)) / curvature);
  return {start.position + shift, h1};
}

PathModel::PathModel(std::vector<Segment> segments, std::vector<GapInterval> gaps,
                     std::vector<InspectionObject> objects)
    : segments_(std::move(segments)),
      gaps_(std::move(gaps)),
      objects_(std::move(objects)) {
  for (const auto& seg : segments_) total_length_ += seg.length;
  std::sort(gaps_.begin(), gaps_.end(),
            [](const GapInterval& a, const GapInterval& b) { return a.start < b.start; });
}

bool PathModel::in_gap(double s) const {
  return std::any_of(gaps_.begin(), gaps_.end(), [s](const GapInterval& g) {
    return g.start <= s && s <= g.end;
  });
}

std::size_t PathModel::segment_index(double s) const {
  auto it = std::upper_bound(
      segments_.begin(), segments_.end(), s,
      [](double value, const Segment& seg) { return value < seg.start_s; });
  if (it == segments_.begin()) return 0;
  return static_cast<std::size_t>(std::distance(segments_.begin(), it)) - 1;
}

Vector2<double> PathModel::object_position(const InspectionObject& object) const {
  const PathPoint p = point_at(*this, object.s);
  return p.pose.position + object.lateral_offset * p.pose.normal();
}

PathModel build_path(const PathSpec& spec) {
  if (spec.segments.empty()) throw PathError("path needs at least one segment");
  std::vector<Segment> segments;
  segments.reserve(spec.segments.size());
  Pose cursor = spec.start;
  double s = 0.0;
  for (std::size_t i = 0; i < spec.segments.size(); ++i) {
    const SegmentSpec& in = spec.segments[i];
    Segment seg;
    seg.kind = in.kind;
    seg.start = cursor;
    seg.start_s = s;
    if (in.kind == SegmentKind::kLine) {
      if (!(in.length > 0.0) || !std::isfinite(in.length)) {
        throw PathError("segment " + std::to_string(i) + ": length must be positive");
      }
      seg.length = in.length;
    } else {
      if (!(in.radius > 0.0) || !std::isfinite(in.radius)) {
        throw PathError("segment " + std::to_string(i) + ": arc radius must be positive");
      }
      if (in.sweep == 0.0 || !std::isfinite(in.sweep)) {
        throw PathError("segment " + std::to_string(i) + ": arc sweep must be non-zero");
      }
      seg.curvature = (in.sweep > 0.0 ? 1.0 : -1.0) / in.radius;
      seg.length = in.radius * std::abs(in.sweep);
    }
    cursor = seg.end();
    s += seg.length;
    segments.push_back(seg);
  }

  std::vector<GapInterval> gaps = spec.gaps;
  std::sort(gaps.begin(), gaps.end(),
            [](const GapInterval& a, const GapInterval& b) { return a.start < b.start; });
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    const GapInterval& g = gaps[i];
    if (!(g.start < g.end) || g.start < 0.0 || g.end > s) {
      std::ostringstream msg;
      msg << "gap (" << g.start << ", " << g.end << ") must satisfy 0 <= start < end <= "
          << s;
      throw PathError(msg.str());
    }
    if (i > 0 && g.start < gaps[i - 1].end) {
      std::ostringstream msg;
      msg << "overlapping gaps (" << gaps[i - 1].start << ", " << gaps[i - 1].end
          << ") and (" << g.start << ", " << g.end << ")";
      throw PathError(msg.str());
    }
  }
  for (const auto& object : spec.objects) {
    if (object.s < 0.0 || object.s > s) {
      throw PathError("inspection object arclength outside the path");
    }
    if (object.slit_count < 0) throw PathError("slit_count must be >= 0");
  }
  return PathModel(std::move(segments), std::move(gaps), spec.objects);
}

PathPoint point_at(const PathModel& path, double s) {
  s = std::clamp(s, 0.0, path.total_length());
  const Segment& seg = path.segments()[path.segment_index(s)];
  const double local = std::clamp(s - seg.start_s, 0.0, seg.length);
  PathPoint out;
  out.pose = seg.pose_at(local);
  out.s = s;
  out.curvature = seg.curvature;
  out.in_gap = path.in_gap(s);
  return out;
}

PathPoint project(const PathModel& path, const Pose& robot) {
  std::optional<PathPoint> best;
  for (const Segment& seg : path.segments()) {
    const double local = nearest_local_s(seg, robot.position);
    PathPoint candidate;
    candidate.pose = seg.pose_at(local);
    candidate.s = std::min(seg.start_s + local, path.total_length());
    candidate.curvature = seg.curvature;
    candidate.distance = (candidate.pose.position - robot.position).norm();
    push_if_better(best, candidate);
  }
  best->in_gap = path.in_gap(best->s);
  return *best;
}

std::optional<PathPoint> reference_on_lateral_axis(const PathModel& path,
                                                   const Pose& robot) {
  const Vector2<double> t = robot.tangent();
  std::optional<PathPoint> best;
  auto consider = [&](const Segment& seg, double local) {
    if (local < -kRangeTolerance || local > seg.length + kRangeTolerance) return;
    local = std::clamp(local, 0.0, seg.length);
    PathPoint candidate;
    candidate.pose = seg.pose_at(local);
    candidate.s = std::min(seg.start_s + local, path.total_length());
    candidate.curvature = seg.curvature;
    candidate.distance = (candidate.pose.position - robot.position).norm();
    push_if_better(best, candidate);
  };

  for (const Segment& seg : path.segments()) {
    if (seg.kind == SegmentKind::kLine) {
      const double facing = seg.start.tangent().dot(t);
      if (facing <= 1e-9) continue;
      consider(seg, (robot.position - seg.start.position).dot(t) / facing);
      continue;
    }
    // Arc point with tangent heading psi sits at c + (sin psi, -cos psi)/kappa;
    // it lies on the lateral axis iff sin(psi - theta) = -kappa (c - p).t.
    const double q = -seg.curvature * (arc_center(seg) - robot.position).dot(t);
    if (!(std::abs(q) < 1.0)) continue;
    const double base = wrap_angle(robot.heading + std::asin(q) - seg.start.heading);
    for (int k = -2; k <= 2; ++k) {
      consider(seg, (base + 2.0 * kPi<double> * k) / seg.curvature);
    }
  }
  if (best) best->in_gap = path.in_gap(best->s);
  return best;
}

bool detect(const PathModel& path, const Pose& robot, double sensing_radius) {
  if (!(sensing_radius > 0.0)) throw PathError("sensing radius must be positive");
  const PathPoint nearest = project(path, robot);
  return nearest.distance <= sensing_radius && !nearest.in_gap;
}

}  // namespace cpf
