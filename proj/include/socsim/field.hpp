#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "socsim/geometry.hpp"

namespace socsim {

enum class GoalColor { Blue, Yellow };

std::string to_string(GoalColor c);
GoalColor goal_color_from_string(const std::string& s);

struct Goal {
  GoalColor color;
  Segment mouth;  // between the posts, on the goal line
  Vec2 center() const { return (mouth.a + mouth.b) * 0.5; }
};

/// Raw field description, as read from a config file. Origin at the field center, x toward
/// the blue goal. Empty `segments` means the standard marking set for the given dimensions.
struct FieldConfig {
  double length = 12.0;
  double width = 8.0;
  double goal_width = 2.0;
  double goal_area_depth = 0.75;
  double goal_area_width = 3.0;
  std::vector<Segment> segments;
};

/// Expected relation between two field lines. Parallel relations constrain both angle and
/// offset; perpendicular ones constrain the angle only (delta_rho is empty).
struct LineRelation {
  double delta_phi = 0.0;
  std::optional<double> delta_rho;
};

/// One distinct infinite line of the model, with the segments lying on it.
struct ModelLine {
  LineParams params;
  std::vector<std::size_t> segments;
};

class FieldModel {
 public:
  double length() const { return length_; }
  double width() const { return width_; }
  const std::vector<Segment>& segments() const { return segments_; }
  const std::vector<ModelLine>& lines() const { return lines_; }
  const std::vector<LineRelation>& line_relations() const { return relations_; }
  const Goal& goal(GoalColor c) const { return c == GoalColor::Blue ? blue_ : yellow_; }

  /// The field's 180° rotation about its center.
  static Pose mirror(const Pose& p) { return {-p.x, -p.y, p.theta() + kPi}; }

 private:
  friend FieldModel make_field(const FieldConfig&);
  double length_ = 0.0;
  double width_ = 0.0;
  std::vector<Segment> segments_;
  std::vector<ModelLine> lines_;
  std::vector<LineRelation> relations_;
  Goal blue_{GoalColor::Blue, {}};
  Goal yellow_{GoalColor::Yellow, {}};
};

/// Standard markings: side lines, goal lines, center line and the two goal areas.
std::vector<Segment> default_field_segments(const FieldConfig& cfg);

/// Validates the configuration and precomputes the line relations.
/// Throws ConfigError on non-positive dimensions, degenerate or out-of-bounds segments,
/// or a marking set that is not symmetric under the 180° rotation.
FieldModel make_field(const FieldConfig& cfg);

/// Point where the scan circles cross a field line, in the robot frame.
struct TransitionPixel {
  double x = 0.0;
  double y = 0.0;
  Vec2 vec() const { return {x, y}; }
};

Vec2 transform_to_field(TransitionPixel p, const Pose& robot);
TransitionPixel transform_to_robot(Vec2 field_point, const Pose& robot);

/// Minimum Euclidean distance from a field-frame point to any marking segment.
double distance_to_segments(Vec2 p, const FieldModel& field);

}  // namespace socsim
