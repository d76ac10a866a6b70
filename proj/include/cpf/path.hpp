#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpf/geometry.hpp"

namespace cpf {

enum class SegmentKind { kLine, kArc };

struct Segment {
  SegmentKind kind = SegmentKind::kLine;
  Pose start;
  double length = 0.0;
  double curvature = 0.0;  // 0 for lines, +-1/radius for arcs (positive turns left)
  double start_s = 0.0;    // arclength at the segment start

  Pose pose_at(double local_s) const;
  Pose end() const { return pose_at(length); }
};

struct GapInterval {
  double start = 0.0;
  double end = 0.0;
};

struct InspectionObject {
  double s = 0.0;
  double lateral_offset = 0.0;
  int slit_count = 0;
};

struct PathPoint {
  Pose pose;
  double s = 0.0;
  double curvature = 0.0;
  bool in_gap = false;
  double distance = 0.0;  // to the queried robot position, when projected
};

/// One element of a path description: either a straight of given length or a
/// circular arc of given radius and signed sweep (positive turns left).
struct SegmentSpec {
  SegmentKind kind = SegmentKind::kLine;
  double length = 0.0;  // lines
  double radius = 0.0;  // arcs
  double sweep = 0.0;   // arcs, rad
};

struct PathSpec {
  Pose start;
  std::vector<SegmentSpec> segments;
  std::vector<GapInterval> gaps;
  std::vector<InspectionObject> objects;
};

class PathError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Arclength-parameterized chain of line and arc segments. Immutable after
/// construction.
class PathModel {
 public:
  PathModel() = default;
  PathModel(std::vector<Segment> segments, std::vector<GapInterval> gaps,
            std::vector<InspectionObject> objects);

  const std::vector<Segment>& segments() const { return segments_; }
  const std::vector<GapInterval>& gaps() const { return gaps_; }
  const std::vector<InspectionObject>& objects() const { return objects_; }
  double total_length() const { return total_length_; }

  bool in_gap(double s) const;
  /// World position of an inspection object.
  Vector2<double> object_position(const InspectionObject& object) const;
  /// Index of the segment containing arclength `s` (clamped to the path).
  std::size_t segment_index(double s) const;

 private:
  std::vector<Segment> segments_;
  std::vector<GapInterval> gaps_;
  std::vector<InspectionObject> objects_;
  double total_length_ = 0.0;
};

/// Throws PathError on overlapping gaps, non-positive lengths or zero radius.
PathModel build_path(const PathSpec& spec);

/// Point at arclength `s`; `s` is clamped to [0, total_length].
PathPoint point_at(const PathModel& path, double s);

/// Nearest point on the path to the robot position; ties go to the smaller s.
PathPoint project(const PathModel& path, const Pose& robot);

/// Point where the path crosses the robot's lateral axis with the path tangent
/// within +-90 deg of the robot heading, i.e. the reference point for which
/// e1 = 0. Among several crossings the closest wins (ties: smaller s).
std::optional<PathPoint> reference_on_lateral_axis(const PathModel& path,
                                                   const Pose& robot);

/// True iff the robot is within `sensing_radius` of the path and the nearest
/// path point is not inside a gap.
bool detect(const PathModel& path, const Pose& robot, double sensing_radius);

}  // namespace cpf
