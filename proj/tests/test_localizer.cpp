#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"

#include "socsim/field.hpp"
#include "socsim/hough.hpp"
#include "socsim/localizer.hpp"
#include "socsim/sim.hpp"

using namespace socsim;

namespace {

constexpr double kDeg = kPi / 180.0;

// Total least squares line through points: normal is the minor principal axis.
LineParams tls_fit(const std::vector<Vec2>& pts) {
  Vec2 c{};
  for (auto p : pts) c += p;
  c = c / static_cast<double>(pts.size());
  double sxx = 0, sxy = 0, syy = 0;
  for (auto p : pts) {
    const Vec2 d = p - c;
    sxx += d.x * d.x;
    sxy += d.x * d.y;
    syy += d.y * d.y;
  }
  const double major = 0.5 * std::atan2(2 * sxy, sxx - syy);
  const double phi = major + kPi / 2;
  return normalize_line(c.dot(Vec2::unit(phi)), phi);
}

// Bin distance between two lines, treating (rho, phi) and (-rho, phi - pi) as the same line.
double rho_gap(const HoughLine& h, LineParams l, double* phi_gap) {
  double dphi = std::abs(h.phi - l.phi), drho = std::abs(h.rho - l.rho);
  if (dphi > kPi / 2) {
    dphi = kPi - dphi;
    drho = std::abs(h.rho + l.rho);
  }
  *phi_gap = dphi;
  return drho;
}

RobotState at(Pose p) {
  RobotState r;
  r.pose = p;
  return r;
}

// Nearest-bearing goal sighting, noise free.
std::optional<GoalObservation> goal_seen(const Pose& p, const FieldModel& f) {
  std::optional<GoalObservation> best;
  for (GoalColor c : {GoalColor::Blue, GoalColor::Yellow}) {
    const double b = p.bearing_to(f.goal(c).center());
    if (!best || std::abs(b) < std::abs(best->bearing)) best = GoalObservation{c, b};
  }
  return best;
}

}  // namespace

TEST_SUITE("localizer") {

TEST_CASE("three collinear pixels peak at their line") {
  const std::vector<TransitionPixel> px{{0, 1}, {1, 1}, {2, 1}};
  const HoughAccumulator acc = hough_accumulate(px, {});
  const auto lines = top_lines(acc, 1);
  REQUIRE(lines.size() == 1);
  CHECK(std::abs(lines[0].rho - 1.0) <= acc.rho_resolution());
  CHECK(std::abs(lines[0].phi - kPi / 2) <= acc.phi_resolution());
  CHECK(lines[0].votes == 3);
}

TEST_CASE("a single pixel votes once per phi column") {
  const std::vector<TransitionPixel> px{{1.3, -0.7}};
  const HoughAccumulator acc = hough_accumulate(px, {});
  for (int p = 0; p < acc.phi_bins(); ++p) {
    int sum = 0;
    for (int r = 0; r < acc.rho_bins(); ++r) sum += acc.votes(r, p);
    CHECK(sum == 1);
  }
  CHECK(acc.total_votes() == acc.phi_bins());
}

TEST_CASE("empty pixel set is an error") {
  CHECK_THROWS_AS(hough_accumulate(std::vector<TransitionPixel>{}, {}), LocalizationError);
}

TEST_CASE("peak agrees with a least-squares fit of the inliers") {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const double phi = rng.uniform(0, kPi), rho = rng.uniform(-3, 3);
    const Vec2 n = Vec2::unit(phi), d{-n.y, n.x};
    std::vector<TransitionPixel> px;
    std::vector<Vec2> inliers;
    for (int i = 0; i < 50; ++i) {
      const Vec2 p = n * rho + d * rng.uniform(-2, 2) + n * rng.gaussian(0.005);
      inliers.push_back(p);
      px.push_back({p.x, p.y});
    }
    for (int i = 0; i < 5; ++i) px.push_back({rng.uniform(-4, 4), rng.uniform(-4, 4)});
    const HoughAccumulator acc = hough_accumulate(px, {});
    const auto best = top_lines(acc, 1);
    REQUIRE(best.size() == 1);
    double dphi = 0;
    const double drho = rho_gap(best[0], tls_fit(inliers), &dphi);
    CHECK(dphi <= acc.phi_resolution() + 1e-12);
    CHECK(drho <= acc.rho_resolution() + 1e-12);
  }
}

TEST_CASE("one clean line yields one peak") {
  FieldConfig cfg;
  cfg.segments = {{{-6, 0}, {6, 0}}};
  const FieldModel f = make_field(cfg);
  ScanConfig sc;
  const auto px = scan_transitions(at({0.4, 1.0, 0.3}), f, sc);
  const LocalizerConfig lc;
  CHECK(top_lines(hough_accumulate(px, lc.accumulator), 3).size() == 1);
}

TEST_CASE("a dense synthetic line yields one peak") {
  std::vector<TransitionPixel> px;
  for (int i = -25; i <= 25; ++i) px.push_back({0.1 * i, 0.3 * 0.1 * i + 0.7});
  CHECK(top_lines(hough_accumulate(px, {}), 3).size() == 1);
}

TEST_CASE("two perpendicular lines are both recovered") {
  std::vector<TransitionPixel> px;
  for (int i = -20; i <= 20; ++i) {
    px.push_back({0.1 * i, 1.5});
    px.push_back({-0.8, 0.1 * i});
  }
  const HoughAccumulator acc = hough_accumulate(px, {});
  const auto lines = top_lines(acc, 2);
  REQUIRE(lines.size() == 2);
  for (LineParams truth : {LineParams{1.5, kPi / 2}, normalize_line(-0.8, 0.0)}) {
    bool found = false;
    for (const auto& l : lines) {
      double dphi = 0;
      const double drho = rho_gap(l, truth, &dphi);
      found = found || (dphi <= acc.phi_resolution() + 1e-12 && drho <= acc.rho_resolution() + 1e-12);
    }
    CHECK(found);
  }
}

TEST_CASE("q = 1 returns the global maximum") {
  Rng rng(2);
  std::vector<TransitionPixel> px;
  for (int i = 0; i < 40; ++i) px.push_back({rng.uniform(-3, 3), rng.uniform(-3, 3)});
  const HoughAccumulator acc = hough_accumulate(px, {});
  int best = 0;
  for (int p = 0; p < acc.phi_bins(); ++p)
    for (int r = 0; r < acc.rho_bins(); ++r) best = std::max(best, acc.votes(r, p));
  const auto top = top_lines(acc, 1);
  REQUIRE(top.size() == 1);
  CHECK(top[0].votes == best);
}

TEST_CASE("pair distances") {
  const auto a = line_pair_distance({1, kPi / 2, 1}, {3, kPi / 2, 1});
  CHECK(a.delta_phi == doctest::Approx(0.0));
  CHECK(a.delta_rho == doctest::Approx(2.0));
  const auto b = line_pair_distance({1, 0, 1}, {1, kPi / 2, 1});
  CHECK(b.delta_phi == doctest::Approx(kPi / 2));
  const std::vector<HoughLine> four{{0, 0, 1}, {1, 0.5, 1}, {2, 1.0, 1}, {3, 1.5, 1}};
  CHECK(pair_distances(four).size() == 6);
  CHECK_THROWS_AS(pair_distances(std::span(four).first(1)), LocalizationError);
}

TEST_CASE("relevance keeps field-consistent pairs only") {
  const FieldModel f = make_field({});
  const RelevanceTolerance tol;
  const std::vector<HoughLine> sides{{4, kPi / 2, 10}, {-4, kPi / 2, 10}};
  CHECK(relevance_filter(sides, pair_distances(sides), f, tol).size() == 2);

  const std::vector<HoughLine> odd{{4, kPi / 2, 10}, {-4, kPi / 2, 10}, {1, kPi / 2 + 37 * kDeg, 10}};
  const auto kept = relevance_filter(odd, pair_distances(odd), f, tol);
  CHECK(kept.size() == 2);

  const std::vector<HoughLine> lone{{1, 0.1, 5}, {0.3, 0.1 + 37 * kDeg, 5}};
  CHECK_THROWS_AS(relevance_filter(lone, pair_distances(lone), f, tol), LocalizationError);
}

TEST_CASE("relevance matches exhaustive relation matching") {
  const FieldModel f = make_field({});
  const RelevanceTolerance tol;
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const Pose pose{rng.uniform(-5, 5), rng.uniform(-3.5, 3.5), rng.uniform(-kPi, kPi)};
    std::vector<HoughLine> lines;
    for (const auto& ml : f.lines()) {
      // Model line in the robot frame.
      const Vec2 n = Vec2::unit(ml.params.phi);
      const double rho = ml.params.rho - n.dot(pose.position());
      const LineParams l = normalize_line(rho, ml.params.phi - pose.theta());
      if (std::abs(l.rho) < 5.0) lines.push_back({l.rho, l.phi, 10});
    }
    const int clutter = std::max(1, static_cast<int>(lines.size()) / 4);
    for (int i = 0; i < clutter; ++i) lines.push_back({rng.uniform(-5, 5), rng.uniform(0, kPi), 4});
    if (lines.size() < 2) continue;

    std::vector<char> expect(lines.size(), 0);
    for (std::size_t j = 0; j < lines.size(); ++j)
      for (std::size_t k = 0; k < lines.size(); ++k) {
        if (j == k) continue;
        double dphi = 0;
        const double drho = rho_gap(lines[j], {lines[k].rho, lines[k].phi}, &dphi);
        for (const auto& rel : f.line_relations()) {
          if (std::abs(dphi - rel.delta_phi) > tol.phi_tol) continue;
          if (rel.delta_rho && std::abs(drho - *rel.delta_rho) > tol.rho_tol) continue;
          expect[j] = 1;
        }
      }
    std::vector<HoughLine> want;
    for (std::size_t j = 0; j < lines.size(); ++j)
      if (expect[j]) want.push_back(lines[j]);

    if (want.empty()) {
      CHECK_THROWS_AS(relevance_filter(lines, pair_distances(lines), f, tol), LocalizationError);
      continue;
    }
    const auto got = relevance_filter(lines, pair_distances(lines), f, tol);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].rho == want[i].rho);
      CHECK(got[i].phi == want[i].phi);
    }
  }
}

TEST_CASE("noise-free scan yields the pose and its twin") {
  const FieldModel f = make_field({});
  const Pose truth{1.0, -0.5, 30 * kDeg};
  const auto px = scan_transitions(at(truth), f, {});
  const LocalizationTrace tr = localize_traced(px, f, std::nullopt, {}, {});
  REQUIRE(tr.candidates.size() >= 2);
  auto near = [&](const Pose& want) {
    return std::any_of(tr.candidates.begin(), tr.candidates.end(), [&](const PoseEstimate& c) {
      return (c.pose.position() - want.position()).norm() <= 0.02 &&
             angle_distance(c.pose.theta(), want.theta()) <= 1 * kDeg;
    });
  };
  CHECK(near(truth));
  CHECK(near(FieldModel::mirror(truth)));
}

TEST_CASE("two perpendicular field lines explain the scan fully") {
  const FieldModel f = make_field({});
  const Pose truth{0.0, 3.0, 0.2};
  ScanConfig sc;
  sc.radii = {0.25, 0.5, 0.75, 1.25, 1.5};
  const auto px = scan_transitions(at(truth), f, sc);
  LocalizerConfig lc;
  lc.scan_radii = sc.radii;
  const LocalizationTrace tr = localize_traced(px, f, std::nullopt, {}, lc);
  REQUIRE(tr.lines.size() >= 2);
  CHECK(line_match_score(tr.lines, truth, f, lc) == doctest::Approx(1.0));
  REQUIRE(!tr.candidates.empty());
  const Pose& p = tr.result.pose;
  const bool direct = (p.position() - truth.position()).norm() < 0.05;
  const bool twin = (p.position() - FieldModel::mirror(truth).position()).norm() < 0.05;
  CHECK((direct || twin));
}

TEST_CASE("correlation needs lines") {
  const FieldModel f = make_field({});
  CHECK_THROWS_AS(correlate_with_field({}, {}, f, {}), LocalizationError);
}

TEST_CASE("goal sighting breaks the symmetry") {
  const FieldModel f = make_field({});
  const LocalizerConfig lc;
  const std::vector<PoseEstimate> twins{{Pose{2, 0.5, 0}, 1.0, 1.0, false},
                                        {Pose{-2, -0.5, kPi}, 1.0, 1.0, false}};
  const Pose& a = twins[0].pose;
  const auto pick = disambiguate(twins, GoalObservation{GoalColor::Blue, a.bearing_to(f.goal(GoalColor::Blue).center())},
                                 std::nullopt, f, lc);
  CHECK(pick.pose == twins[0].pose);
  CHECK(pick.trusted);

  const PoseEstimate prev{Pose{-1.9, -0.4, 3.0}, 0, 0, true};
  const auto blind = disambiguate(twins, std::nullopt, prev, f, lc);
  CHECK(blind.pose == twins[1].pose);
  CHECK_FALSE(blind.trusted);

  const auto off = disambiguate(twins, GoalObservation{GoalColor::Blue, kPi / 2}, prev, f, lc);
  CHECK(off.pose == twins[1].pose);
  CHECK_FALSE(off.trusted);
}

TEST_CASE("empty scan returns the previous estimate untrusted") {
  const FieldModel f = make_field({});
  const PoseEstimate prev{Pose{1, 2, 0.5}, 0.9, 0.9, true};
  const PoseEstimate out = localize({}, f, std::nullopt, prev);
  CHECK(out.pose == prev.pose);
  CHECK_FALSE(out.trusted);
}

TEST_CASE("clean scans localize within 5 cm and 2 degrees") {
  const FieldModel f = make_field({});
  Rng rng(77);
  int good = 0;
  const int n = 40;
  for (int i = 0; i < n; ++i) {
    const Pose truth{rng.uniform(-5.7, 5.7), rng.uniform(-3.7, 3.7), rng.uniform(-kPi, kPi)};
    Rng noise(1000 + i);
    ScanConfig sc;
    sc.clutter_fraction = 0.0;
    const auto px = scan_transitions(at(truth), f, sc, &noise);
    const PoseEstimate prev{Pose{truth.x + 0.3, truth.y - 0.3, truth.theta() + 0.2}, 0, 0, false};
    const PoseEstimate est = localize(px, f, goal_seen(truth, f), prev);
    good += (est.pose.position() - truth.position()).norm() <= 0.05 &&
            angle_distance(est.pose.theta(), truth.theta()) <= 2 * kDeg;
  }
  CHECK(good >= 38);
}

TEST_CASE("rotating the scan rotates the estimate") {
  const FieldModel f = make_field({});
  Rng rng(8);
  const LocalizerConfig lc;
  for (int i = 0; i < 20; ++i) {
    const Pose truth{rng.uniform(-5, 5), rng.uniform(-3.5, 3.5), rng.uniform(-kPi, kPi)};
    const double delta = rng.uniform(-kPi, kPi);
    const auto px = scan_transitions(at(truth), f, {});
    std::vector<TransitionPixel> turned;
    for (auto p : px) {
      const Vec2 q = rotate(p.vec(), delta);
      turned.push_back({q.x, q.y});
    }
    auto g = goal_seen(truth, f);
    auto g2 = g;
    if (g2) g2->bearing = wrap_angle(g2->bearing + delta);
    const PoseEstimate a = localize(px, f, g, {}, lc);
    const PoseEstimate b = localize(turned, f, g2, {}, lc);
    CHECK(angle_distance(b.pose.theta(), a.pose.theta() - delta) <= lc.accumulator.phi_resolution);
  }
}

}  // TEST_SUITE
