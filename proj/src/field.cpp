#include "socsim/field.hpp"

#include <algorithm>
#include <limits>

#include "socsim/error.hpp"

namespace socsim {

namespace {

constexpr double kGeomEps = 1e-9;

bool same_segment(const Segment& s, const Segment& t) {
  auto close = [](Vec2 a, Vec2 b) { return (a - b).norm() < kGeomEps; };
  return (close(s.a, t.a) && close(s.b, t.b)) || (close(s.a, t.b) && close(s.b, t.a));
}

bool same_line(const LineParams& a, const LineParams& b) {
  const double dphi = std::abs(a.phi - b.phi);
  if (dphi < kGeomEps) return std::abs(a.rho - b.rho) < kGeomEps;
  if (dphi > kPi - kGeomEps) return std::abs(a.rho + b.rho) < kGeomEps;
  return false;
}

}  // namespace

std::string to_string(GoalColor c) { return c == GoalColor::Blue ? "blue" : "yellow"; }

GoalColor goal_color_from_string(const std::string& s) {
  if (s == "blue") return GoalColor::Blue;
  if (s == "yellow") return GoalColor::Yellow;
  throw ConfigError("unknown goal color '" + s + "'");
}

std::vector<Segment> default_field_segments(const FieldConfig& cfg) {
  const double hx = cfg.length / 2.0;
  const double hy = cfg.width / 2.0;
  const double ax = hx - cfg.goal_area_depth;
  const double ay = cfg.goal_area_width / 2.0;
  return {
      {{-hx, -hy}, {hx, -hy}},  // side lines
      {{-hx, hy}, {hx, hy}},
      {{-hx, -hy}, {-hx, hy}},  // goal lines
      {{hx, -hy}, {hx, hy}},
      {{0.0, -hy}, {0.0, hy}},  // center line
      {{ax, -ay}, {ax, ay}},    // blue goal area
      {{ax, -ay}, {hx, -ay}},
      {{ax, ay}, {hx, ay}},
      {{-ax, -ay}, {-ax, ay}},  // yellow goal area
      {{-hx, -ay}, {-ax, -ay}},
      {{-hx, ay}, {-ax, ay}},
  };
}

FieldModel make_field(const FieldConfig& cfg) {
  if (!(cfg.length > 0.0) || !(cfg.width > 0.0))
    throw ConfigError("field length and width must be positive");
  if (!(cfg.goal_width > 0.0) || cfg.goal_width > cfg.width)
    throw ConfigError("goal width must be in (0, field width]");

  FieldModel f;
  f.length_ = cfg.length;
  f.width_ = cfg.width;
  f.segments_ = cfg.segments.empty() ? default_field_segments(cfg) : cfg.segments;
  if (f.segments_.empty()) throw ConfigError("field has no line segments");

  const double hx = cfg.length / 2.0 + kGeomEps;
  const double hy = cfg.width / 2.0 + kGeomEps;
  for (const auto& s : f.segments_) {
    if (!std::isfinite(s.a.x) || !std::isfinite(s.a.y) || !std::isfinite(s.b.x) ||
        !std::isfinite(s.b.y))
      throw ConfigError("field segment has non-finite coordinates");
    if (s.length() < kGeomEps) throw ConfigError("degenerate field segment (identical endpoints)");
    for (Vec2 p : {s.a, s.b})
      if (std::abs(p.x) > hx || std::abs(p.y) > hy)
        throw ConfigError("field segment lies outside the field rectangle");
  }

  // The orientation ambiguity that goal colors resolve exists only for symmetric fields.
  for (const auto& s : f.segments_) {
    const Segment rotated{-s.a, -s.b};
    const bool found = std::any_of(f.segments_.begin(), f.segments_.end(),
                                   [&](const Segment& t) { return same_segment(rotated, t); });
    if (!found) throw ConfigError("field markings are not symmetric under 180° rotation");
  }

  for (std::size_t i = 0; i < f.segments_.size(); ++i) {
    const LineParams lp = line_through(f.segments_[i]);
    auto it = std::find_if(f.lines_.begin(), f.lines_.end(),
                           [&](const ModelLine& m) { return same_line(m.params, lp); });
    if (it == f.lines_.end())
      f.lines_.push_back({lp, {i}});
    else
      it->segments.push_back(i);
  }

  auto add_relation = [&](LineRelation r) {
    const bool dup = std::any_of(f.relations_.begin(), f.relations_.end(), [&](const LineRelation& q) {
      if (std::abs(q.delta_phi - r.delta_phi) > kGeomEps) return false;
      if (q.delta_rho.has_value() != r.delta_rho.has_value()) return false;
      return !q.delta_rho || std::abs(*q.delta_rho - *r.delta_rho) < kGeomEps;
    });
    if (!dup) f.relations_.push_back(r);
  };
  for (std::size_t i = 0; i < f.lines_.size(); ++i) {
    for (std::size_t j = i + 1; j < f.lines_.size(); ++j) {
      const auto& a = f.lines_[i].params;
      const auto& b = f.lines_[j].params;
      const double raw = std::abs(a.phi - b.phi);
      const double dphi = std::min(raw, kPi - raw);
      if (dphi < kGeomEps) {
        const double other = raw > kPi / 2.0 ? -b.rho : b.rho;
        add_relation({0.0, std::abs(a.rho - other)});
      } else if (std::abs(dphi - kPi / 2.0) < kGeomEps) {
        add_relation({kPi / 2.0, std::nullopt});
      }
    }
  }

  const double gx = cfg.length / 2.0;
  const double gy = cfg.goal_width / 2.0;
  f.blue_ = {GoalColor::Blue, {{gx, -gy}, {gx, gy}}};
  f.yellow_ = {GoalColor::Yellow, {{-gx, -gy}, {-gx, gy}}};
  return f;
}

Vec2 transform_to_field(TransitionPixel p, const Pose& robot) { return robot.to_field(p.vec()); }

TransitionPixel transform_to_robot(Vec2 field_point, const Pose& robot) {
  const Vec2 b = robot.to_body(field_point);
  return {b.x, b.y};
}

double distance_to_segments(Vec2 p, const FieldModel& field) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : field.segments()) best = std::min(best, s.distance(p));
  return best;
}

}  // namespace socsim
