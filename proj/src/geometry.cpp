#include "socsim/geometry.hpp"

namespace socsim {

LineParams normalize_line(double rho, double phi) {
  phi = std::fmod(phi, 2.0 * kPi);
  if (phi < 0.0) phi += 2.0 * kPi;
  if (phi >= kPi) {
    phi -= kPi;
    rho = -rho;
  }
  if (phi > kPi - 1e-12) {
    phi = 0.0;
    rho = -rho;
  }
  return {rho, phi};
}

LineParams line_through(const Segment& s) {
  const Vec2 d = s.b - s.a;
  const double phi = std::atan2(d.y, d.x) + kPi / 2.0;
  const Vec2 n = Vec2::unit(phi);
  return normalize_line(s.a.dot(n), phi);
}

int intersect_circle_segment(Vec2 c, double r, const Segment& s, Vec2 out[2]) {
  const Vec2 d = s.b - s.a;
  const Vec2 f = s.a - c;
  const double A = d.dot(d);
  const double B = 2.0 * f.dot(d);
  const double C = f.dot(f) - r * r;
  if (A == 0.0) return 0;
  const double disc = B * B - 4.0 * A * C;
  if (disc < 0.0) return 0;
  const double sq = std::sqrt(disc);
  const double t1 = (-B - sq) / (2.0 * A);
  const double t2 = (-B + sq) / (2.0 * A);
  int n = 0;
  if (t1 >= 0.0 && t1 <= 1.0) out[n++] = s.a + d * t1;
  if (disc > 0.0 && t2 >= 0.0 && t2 <= 1.0) out[n++] = s.a + d * t2;
  return n;
}

double ray_circle(Vec2 origin, Vec2 dir, Vec2 center, double radius) {
  const Vec2 f = origin - center;
  const double b = f.dot(dir);
  const double c = f.dot(f) - radius * radius;
  const double disc = b * b - c;
  if (disc < 0.0) return -1.0;
  const double sq = std::sqrt(disc);
  const double t1 = -b - sq;
  const double t2 = -b + sq;
  if (t1 >= 0.0) return t1;
  if (t2 >= 0.0) return t2;
  return -1.0;
}

double ray_segment(Vec2 origin, Vec2 dir, const Segment& s) {
  const Vec2 e = s.b - s.a;
  const double denom = dir.cross(e);
  if (std::abs(denom) < 1e-15) return -1.0;
  const Vec2 w = s.a - origin;
  const double t = w.cross(e) / denom;
  const double u = w.cross(dir) / denom;
  if (t < 0.0 || u < 0.0 || u > 1.0) return -1.0;
  return t;
}

bool segment_hits_disc(Vec2 a, Vec2 b, Vec2 center, double radius) {
  return Segment{a, b}.distance(center) <= radius;
}

}  // namespace socsim
