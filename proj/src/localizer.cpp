#include "socsim/localizer.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

namespace socsim {

namespace {

// Model line (field frame) as seen from `pose`, in robot-frame half-plane form.
HoughLine render_line(const LineParams& m, const Pose& pose) {
  const Vec2 n = Vec2::unit(m.phi);
  const LineParams r = normalize_line(m.rho - pose.position().dot(n), m.phi - pose.theta());
  return {r.rho, r.phi, 0};
}

struct Hypothesis {
  Pose pose;
  double score = 0.0;
  double fit = 0.0;
};

bool near_pose(const Pose& a, const Pose& b, double pos_tol, double ang_tol) {
  return (a.position() - b.position()).norm() <= pos_tol && angle_distance(a.theta(), b.theta()) <= ang_tol;
}

}  // namespace

double line_match_score(std::span<const HoughLine> lines, const Pose& pose, const FieldModel& field,
                        const LocalizerConfig& cfg) {
  double total = 0.0, matched = 0.0;
  for (const auto& obs : lines) {
    const double w = std::max(obs.votes, 1);
    total += w;
    for (const auto& ml : field.lines()) {
      const LinePairDistance d = line_pair_distance(obs, render_line(ml.params, pose));
      if (d.delta_phi <= cfg.match_phi_tol && d.delta_rho <= cfg.match_rho_tol) {
        matched += w;
        break;
      }
    }
  }
  return total > 0.0 ? matched / total : 0.0;
}

double pixel_fit(std::span<const TransitionPixel> pixels, const Pose& pose, const FieldModel& field,
                 const LocalizerConfig& cfg) {
  if (pixels.empty()) return 0.0;
  std::vector<Vec2> observed;
  observed.reserve(pixels.size());
  std::size_t on_marking = 0;
  for (const auto& p : pixels) {
    const Vec2 f = transform_to_field(p, pose);
    observed.push_back(f);
    if (distance_to_segments(f, field) <= cfg.fit_tol) ++on_marking;
  }
  const double precision = static_cast<double>(on_marking) / pixels.size();

  std::size_t predicted = 0, seen = 0;
  const double tol2 = cfg.fit_tol * cfg.fit_tol;
  for (double r : cfg.scan_radii) {
    for (const auto& seg : field.segments()) {
      Vec2 hits[2];
      const int n = intersect_circle_segment(pose.position(), r, seg, hits);
      for (int i = 0; i < n; ++i) {
        ++predicted;
        for (const auto& o : observed)
          if ((o - hits[i]).squared_norm() <= tol2) {
            ++seen;
            break;
          }
      }
    }
  }
  const double recall = predicted ? static_cast<double>(seen) / predicted : 0.0;
  if (precision + recall <= 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

Pose refine_pose(std::span<const TransitionPixel> pixels, const Pose& start, const FieldModel& field,
                 const LocalizerConfig& cfg) {
  Pose pose = start;
  double gate = 0.25;
  for (int it = 0; it < cfg.refine_iterations; ++it) {
    Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
    Eigen::Vector3d g = Eigen::Vector3d::Zero();
    const double c = std::cos(pose.theta()), s = std::sin(pose.theta());
    int used = 0;
    for (const auto& px : pixels) {
      const Vec2 f = transform_to_field(px, pose);
      double best = std::numeric_limits<double>::infinity();
      const Segment* seg = nullptr;
      for (const auto& sg : field.segments()) {
        const double d = sg.distance(f);
        if (d < best) {
          best = d;
          seg = &sg;
        }
      }
      if (!seg || best > gate) continue;
      const Vec2 q = seg->closest_point(f);
      Vec2 n;
      const Vec2 dir = seg->direction();
      const double t = (f - seg->a).dot(dir);
      if (t > 0.0 && t < seg->length()) {
        n = {-dir.y, dir.x};
      } else if (best > 1e-12) {
        n = (f - q) / best;
      } else {
        continue;
      }
      const double r = (f - q).dot(n);
      const Vec2 dtheta{-s * px.x - c * px.y, c * px.x - s * px.y};
      const Eigen::Vector3d J(n.x, n.y, n.dot(dtheta));
      const double w = std::abs(r) <= 0.03 ? 1.0 : 0.03 / std::abs(r);
      H += w * J * J.transpose();
      g += w * J * r;
      ++used;
    }
    if (used < 3) break;
    H.diagonal().array() += 1e-9 * (1.0 + H.trace());
    const Eigen::Vector3d step = H.ldlt().solve(-g);
    if (!step.allFinite()) break;
    pose = Pose(pose.x + step(0), pose.y + step(1), pose.theta() + step(2));
    gate = std::max(0.05, gate * 0.6);
    if (step.head<2>().norm() < 1e-7 && std::abs(step(2)) < 1e-8 && gate <= 0.05) break;
  }
  if (!near_pose(pose, start, 0.5, 10.0 * kPi / 180.0)) return start;
  return pose;
}

std::vector<PoseEstimate> correlate_with_field(std::span<const HoughLine> lines,
                                               std::span<const TransitionPixel> pixels,
                                               const FieldModel& field, const LocalizerConfig& cfg) {
  if (lines.size() < 2) throw LocalizationError(LocalizationFailure::InsufficientLines);

  bool observable = false;
  for (std::size_t i = 0; i < lines.size() && !observable; ++i)
    for (std::size_t j = i + 1; j < lines.size(); ++j)
      if (line_pair_distance(lines[i], lines[j]).delta_phi >= cfg.min_pair_angle) {
        observable = true;
        break;
      }
  if (!observable) throw LocalizationError(LocalizationFailure::UnobservablePose);

  const auto& model = field.lines();
  const double x_lim = field.length() / 2.0 + 0.5;
  const double y_lim = field.width() / 2.0 + 0.5;

  std::vector<Hypothesis> hyps;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    for (std::size_t j = i + 1; j < lines.size(); ++j) {
      const LinePairDistance obs_pair = line_pair_distance(lines[i], lines[j]);
      if (obs_pair.delta_phi < cfg.min_pair_angle) continue;
      for (std::size_t m = 0; m < model.size(); ++m) {
        for (std::size_t n = 0; n < model.size(); ++n) {
          if (m == n) continue;
          const HoughLine mm{model[m].params.rho, model[m].params.phi, 0};
          const HoughLine mn{model[n].params.rho, model[n].params.phi, 0};
          if (std::abs(line_pair_distance(mm, mn).delta_phi - obs_pair.delta_phi) > cfg.match_phi_tol)
            continue;
          for (int s1 : {1, -1}) {
            const double th1 = mm.phi - lines[i].phi + (s1 < 0 ? kPi : 0.0);
            const double d = wrap_angle(lines[j].phi + th1 - mn.phi);
            int s2;
            if (std::abs(d) <= cfg.match_phi_tol)
              s2 = 1;
            else if (std::abs(wrap_angle(d - kPi)) <= cfg.match_phi_tol)
              s2 = -1;
            else
              continue;
            const double th2 = mn.phi - lines[j].phi + (s2 < 0 ? kPi : 0.0);
            const double theta = th1 + wrap_angle(th2 - th1) / 2.0;

            const Vec2 nm = Vec2::unit(mm.phi), nn = Vec2::unit(mn.phi);
            const double det = nm.cross(nn);
            if (std::abs(det) < 1e-6) continue;
            const double c1 = mm.rho - s1 * lines[i].rho;
            const double c2 = mn.rho - s2 * lines[j].rho;
            const Vec2 t{(c1 * nn.y - c2 * nm.y) / det, (nm.x * c2 - nn.x * c1) / det};
            if (std::abs(t.x) > x_lim || std::abs(t.y) > y_lim) continue;
            Hypothesis h;
            h.pose = Pose(t, theta);
            h.score = line_match_score(lines, h.pose, field, cfg);
            hyps.push_back(h);
          }
        }
      }
    }
  }
  if (hyps.empty()) throw LocalizationError(LocalizationFailure::UnobservablePose);

  std::stable_sort(hyps.begin(), hyps.end(),
                   [](const Hypothesis& a, const Hypothesis& b) { return a.score > b.score; });
  std::vector<Hypothesis> clusters;
  for (const auto& h : hyps) {
    const bool dup = std::any_of(clusters.begin(), clusters.end(), [&](const Hypothesis& c) {
      return near_pose(c.pose, h.pose, 0.15, 4.0 * kPi / 180.0);
    });
    if (!dup) clusters.push_back(h);
    if (static_cast<int>(clusters.size()) >= cfg.scored_clusters) break;
  }
  for (auto& c : clusters) c.fit = pixel_fit(pixels, c.pose, field, cfg);
  std::stable_sort(clusters.begin(), clusters.end(), [](const Hypothesis& a, const Hypothesis& b) {
    return a.score * a.fit > b.score * b.fit;
  });

  PoseEstimate best;
  double best_rank = -1.0;
  const std::size_t n_refine = std::min<std::size_t>(std::max(cfg.refined_candidates, 1), clusters.size());
  for (std::size_t i = 0; i < n_refine; ++i) {
    PoseEstimate e;
    e.pose = refine_pose(pixels, clusters[i].pose, field, cfg);
    e.score = line_match_score(lines, e.pose, field, cfg);
    e.fit = pixel_fit(pixels, e.pose, field, cfg);
    if (e.score * e.fit > best_rank) {
      best_rank = e.score * e.fit;
      best = e;
    }
  }
  const Pose refined = best.pose;
  const Pose twin = FieldModel::mirror(refined);
  std::vector<PoseEstimate> out;
  for (const Pose& p : {refined, twin}) {
    PoseEstimate e;
    e.pose = p;
    e.score = line_match_score(lines, p, field, cfg);
    e.fit = pixel_fit(pixels, p, field, cfg);
    out.push_back(e);
  }
  return out;
}

PoseEstimate disambiguate(std::span<const PoseEstimate> candidates,
                          const std::optional<GoalObservation>& goal,
                          const std::optional<PoseEstimate>& prev, const FieldModel& field,
                          const LocalizerConfig& cfg) {
  if (candidates.empty()) throw LocalizationError(LocalizationFailure::UnobservablePose);
  const std::size_t n = std::min<std::size_t>(2, candidates.size());

  if (goal) {
    const Vec2 target = field.goal(goal->color).center();
    std::size_t best = 0;
    double best_err = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      const double err = angle_distance(candidates[i].pose.bearing_to(target), goal->bearing);
      if (err < best_err) {
        best_err = err;
        best = i;
      }
    }
    if (best_err <= cfg.goal_bearing_tol) {
      PoseEstimate out = candidates[best];
      out.trusted = out.score >= cfg.trust_threshold;
      return out;
    }
  }

  std::size_t pick = 0;
  if (prev) {
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      const auto& p = candidates[i].pose;
      const double d = (p.position() - prev->pose.position()).norm() +
                       0.5 * angle_distance(p.theta(), prev->pose.theta());
      if (d < best_d) {
        best_d = d;
        pick = i;
      }
    }
  }
  PoseEstimate out = candidates[pick];
  out.trusted = false;
  return out;
}

LocalizationTrace localize_traced(std::span<const TransitionPixel> scan, const FieldModel& field,
                                  const std::optional<GoalObservation>& goal, const PoseEstimate& prev,
                                  const LocalizerConfig& cfg) {
  LocalizationTrace tr;
  try {
    const HoughAccumulator acc = hough_accumulate(scan, cfg.accumulator);
    tr.lines = top_lines(acc, cfg.top_q, cfg.min_votes, cfg.suppression_radius, cfg.peak_threshold);
    const auto pairs = pair_distances(tr.lines);
    tr.relevant = relevance_filter(tr.lines, pairs, field, cfg.relevance);
    tr.candidates = correlate_with_field(tr.relevant, scan, field, cfg);
    tr.result = disambiguate(tr.candidates, goal, prev, field, cfg);
  } catch (const LocalizationError& e) {
    tr.failure = e.failure;
    tr.result = prev;
    tr.result.trusted = false;
  }
  return tr;
}

PoseEstimate localize(std::span<const TransitionPixel> scan, const FieldModel& field,
                      const std::optional<GoalObservation>& goal, const PoseEstimate& prev,
                      const LocalizerConfig& cfg) {
  return localize_traced(scan, field, goal, prev, cfg).result;
}

}  // namespace socsim
