#include <cmath>

#include "doctest.h"

#include "socsim/error.hpp"
#include "socsim/field.hpp"
#include "socsim/random.hpp"

using namespace socsim;

namespace {

bool has_relation(const FieldModel& f, double dphi, std::optional<double> drho) {
  for (const auto& r : f.line_relations()) {
    if (std::abs(r.delta_phi - dphi) > 1e-9) continue;
    if (r.delta_rho.has_value() != drho.has_value()) continue;
    if (!drho || std::abs(*r.delta_rho - *drho) < 1e-9) return true;
  }
  return false;
}

// Distance by sampling the segment every millimetre, then a ternary search around the best sample.
double sampled_distance(Vec2 p, const Segment& s) {
  const int n = std::max(1, static_cast<int>(std::ceil(s.length() / 1e-3)));
  auto at = [&](double t) { return (s.a + (s.b - s.a) * t - p).norm(); };
  int best = 0;
  for (int i = 1; i <= n; ++i)
    if (at(static_cast<double>(i) / n) < at(static_cast<double>(best) / n)) best = i;
  double lo = std::max(0.0, (best - 1.0) / n), hi = std::min(1.0, (best + 1.0) / n);
  for (int it = 0; it < 200; ++it) {
    const double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
    if (at(m1) < at(m2)) hi = m2;
    else lo = m1;
  }
  return at(0.5 * (lo + hi));
}

}  // namespace

TEST_SUITE("field") {

TEST_CASE("center line is perpendicular to the side lines") {
  const FieldModel f = make_field({});
  CHECK(has_relation(f, kPi / 2, std::nullopt));
}

TEST_CASE("side lines give a parallel relation at the field width") {
  const FieldModel f = make_field({});
  CHECK(has_relation(f, 0.0, 8.0));
}

TEST_CASE("every relation is realized by a pair of segments") {
  const FieldModel f = make_field({});
  for (const auto& r : f.line_relations()) {
    bool found = false;
    for (std::size_t i = 0; i < f.segments().size() && !found; ++i) {
      for (std::size_t j = i + 1; j < f.segments().size() && !found; ++j) {
        const LineParams a = line_through(f.segments()[i]);
        const LineParams b = line_through(f.segments()[j]);
        double dphi = std::abs(a.phi - b.phi);
        if (dphi > kPi / 2) dphi = kPi - dphi;
        if (std::abs(dphi - r.delta_phi) > 1e-9) continue;
        if (!r.delta_rho) { found = true; continue; }
        // Parallel pair: offset between the lines along the shared normal.
        const Vec2 n = Vec2::unit(a.phi);
        const double off = std::abs(n.dot(f.segments()[j].a) - a.rho);
        if (std::abs(off - *r.delta_rho) < 1e-9) found = true;
      }
    }
    CHECK(found);
  }
}

TEST_CASE("degenerate segment is rejected") {
  FieldConfig cfg;
  cfg.segments = {{{-6, 0}, {6, 0}}, {{1, 1}, {1, 1}}, {{-1, -1}, {-1, -1}}};
  CHECK_THROWS_AS(make_field(cfg), ConfigError);
}

TEST_CASE("asymmetric markings are rejected") {
  FieldConfig cfg;
  cfg.segments = {{{-6, 0}, {6, 0}}, {{1, 1}, {2, 1}}};
  CHECK_THROWS_AS(make_field(cfg), ConfigError);
}

TEST_CASE("non-positive dimensions are rejected") {
  FieldConfig cfg;
  cfg.length = 0.0;
  CHECK_THROWS_AS(make_field(cfg), ConfigError);
}

TEST_CASE("pixel transforms") {
  const Vec2 a = transform_to_field({1, 0}, Pose{0, 0, 0});
  CHECK(a.x == doctest::Approx(1.0));
  CHECK(a.y == doctest::Approx(0.0));
  const Vec2 b = transform_to_field({1, 0}, Pose{0, 0, kPi / 2});
  CHECK(b.x == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(b.y == doctest::Approx(1.0));
}

TEST_CASE("transform round trip and rigidity") {
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const Pose pose{rng.uniform(-6, 6), rng.uniform(-4, 4), rng.uniform(-kPi, kPi)};
    const TransitionPixel p{rng.uniform(-5, 5), rng.uniform(-5, 5)};
    const TransitionPixel q{rng.uniform(-5, 5), rng.uniform(-5, 5)};
    const TransitionPixel back = transform_to_robot(transform_to_field(p, pose), pose);
    CHECK(std::abs(back.x - p.x) < 1e-9);
    CHECK(std::abs(back.y - p.y) < 1e-9);
    const double d0 = (p.vec() - q.vec()).norm();
    const double d1 = (transform_to_field(p, pose) - transform_to_field(q, pose)).norm();
    CHECK(std::abs(d0 - d1) < 1e-9);
  }
}

TEST_CASE("composed poses keep theta in (-pi, pi]") {
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const Pose a{rng.uniform(-6, 6), rng.uniform(-4, 4), rng.uniform(-10, 10)};
    const Pose b{rng.uniform(-6, 6), rng.uniform(-4, 4), rng.uniform(-10, 10)};
    const double t = a.compose(b).theta();
    CHECK(t > -kPi);
    CHECK(t <= kPi);
  }
}

TEST_CASE("distance to segments") {
  FieldConfig cfg;
  cfg.segments = {{{-2, 0}, {2, 0}}};
  const FieldModel iso = make_field(cfg);
  CHECK(distance_to_segments({1, 0}, iso) == doctest::Approx(0.0));
  CHECK(distance_to_segments({0.5, 0.3}, iso) == doctest::Approx(0.3));

  const FieldModel f = make_field({});
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const Vec2 p{rng.uniform(-6.5, 6.5), rng.uniform(-4.5, 4.5)};
    double oracle = 1e300;
    for (const auto& s : f.segments()) oracle = std::min(oracle, sampled_distance(p, s));
    CHECK(std::abs(distance_to_segments(p, f) - oracle) < 1e-6);
  }
}

}  // TEST_SUITE
