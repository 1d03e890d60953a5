#pragma once

#include <cmath>
#include <numbers>

namespace socsim {

inline constexpr double kPi = std::numbers::pi;

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  if (!std::isfinite(a)) return a;
  a = std::fmod(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  else if (a > kPi) a -= 2.0 * kPi;
  return a;
}

/// Absolute difference between two angles, in [0, pi].
inline double angle_distance(double a, double b) { return std::abs(wrap_angle(a - b)); }

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
  constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  constexpr Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
  constexpr bool operator==(const Vec2&) const = default;

  constexpr double dot(Vec2 o) const { return x * o.x + y * o.y; }
  constexpr double cross(Vec2 o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
  constexpr double squared_norm() const { return x * x + y * y; }
  double angle() const { return std::atan2(y, x); }

  static Vec2 unit(double angle) { return {std::cos(angle), std::sin(angle)}; }
};

inline constexpr Vec2 operator*(double s, Vec2 v) { return v * s; }

inline Vec2 rotate(Vec2 v, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

/// Planar posture. theta is kept in (-pi, pi] by every constructor path.
class Pose {
 public:
  constexpr Pose() = default;
  Pose(double x, double y, double theta) : x(x), y(y), theta_(wrap_angle(theta)) {}
  Pose(Vec2 p, double theta) : Pose(p.x, p.y, theta) {}

  double x = 0.0;
  double y = 0.0;

  double theta() const { return theta_; }
  void set_theta(double t) { theta_ = wrap_angle(t); }
  Vec2 position() const { return {x, y}; }
  Vec2 heading() const { return Vec2::unit(theta_); }

  /// this ∘ other: `other` is expressed in this pose's frame.
  Pose compose(const Pose& other) const {
    const Vec2 p = position() + rotate(other.position(), theta_);
    return {p, theta_ + other.theta_};
  }

  Pose inverse() const {
    const Vec2 p = rotate(-position(), -theta_);
    return {p, -theta_};
  }

  /// Body-frame point to field frame.
  Vec2 to_field(Vec2 body) const { return position() + rotate(body, theta_); }
  /// Field-frame point to body frame.
  Vec2 to_body(Vec2 field) const { return rotate(field - position(), -theta_); }

  /// Bearing of a field point relative to the heading, in (-pi, pi].
  double bearing_to(Vec2 field) const {
    const Vec2 b = to_body(field);
    return std::atan2(b.y, b.x);
  }

  bool operator==(const Pose&) const = default;

 private:
  double theta_ = 0.0;
};

struct Segment {
  Vec2 a;
  Vec2 b;

  double length() const { return (b - a).norm(); }
  Vec2 direction() const { return (b - a) / length(); }

  Vec2 closest_point(Vec2 p) const {
    const Vec2 d = b - a;
    const double len2 = d.squared_norm();
    if (len2 == 0.0) return a;
    double t = (p - a).dot(d) / len2;
    t = t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
    return a + d * t;
  }

  double distance(Vec2 p) const { return (p - closest_point(p)).norm(); }
};

/// Infinite line in half-plane normal form: points p with p·(cos phi, sin phi) = rho,
/// phi in [0, pi), rho signed.
struct LineParams {
  double rho = 0.0;
  double phi = 0.0;
};

LineParams line_through(const Segment& s);

/// Brings (rho, phi) with arbitrary phi into the phi ∈ [0, pi) convention.
LineParams normalize_line(double rho, double phi);

/// Up to two intersections of the circle |p - c| = r with segment s.
int intersect_circle_segment(Vec2 c, double r, const Segment& s, Vec2 out[2]);

/// Smallest t >= 0 with origin + t*dir on the circle boundary of (center, radius), or -1.
double ray_circle(Vec2 origin, Vec2 dir, Vec2 center, double radius);

/// Smallest t >= 0 with origin + t*dir on segment s, or -1.
double ray_segment(Vec2 origin, Vec2 dir, const Segment& s);

/// True when segment a-b passes within `radius` of `center`.
bool segment_hits_disc(Vec2 a, Vec2 b, Vec2 center, double radius);

}  // namespace socsim
