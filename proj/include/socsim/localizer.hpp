#pragma once

#include <optional>
#include <span>
#include <vector>

#include "socsim/field.hpp"
#include "socsim/hough.hpp"
#include "socsim/sim.hpp"

namespace socsim {

struct PoseEstimate {
  Pose pose;
  double score = 0.0;  // vote-weighted share of observed lines explained by the model, [0, 1]
  double fit = 0.0;    // pixel-level agreement (F1 of pixel precision and predicted-crossing recall)
  bool trusted = false;
};

struct LocalizerConfig {
  AccumulatorConfig accumulator;
  int top_q = 8;
  int min_votes = 3;
  int suppression_radius = 2;  // bins around a reported peak
  double peak_threshold = 0.0;  // share of the strongest cell a peak must reach; short lines
                                // can hold under a fifth of the longest line's votes
  RelevanceTolerance relevance;
  double match_phi_tol = 4.0 * kPi / 180.0;  // observed vs rendered model line
  double match_rho_tol = 0.15;
  double min_pair_angle = 20.0 * kPi / 180.0;  // line pairs used to solve a pose
  double fit_tol = 0.10;                       // pixel-to-marking distance counted as a hit
  std::vector<double> scan_radii = default_scan_radii();
  int scored_clusters = 1000;
  int refined_candidates = 3;  // best-ranked hypotheses polished before the final pick
  int refine_iterations = 10;
  double trust_threshold = 0.6;
  double goal_bearing_tol = 25.0 * kPi / 180.0;
};

/// Pose hypotheses from line-to-model assignments, ranked by line score times pixel fit.
/// The best hypothesis is refined on the pixels and returned together with its 180° twin,
/// best first. Throws LocalizationError when fewer than two lines are given or all are parallel.
std::vector<PoseEstimate> correlate_with_field(std::span<const HoughLine> lines,
                                               std::span<const TransitionPixel> pixels,
                                               const FieldModel& field, const LocalizerConfig& cfg);

/// Vote-weighted fraction of `lines` that coincide with some model line seen from `pose`.
double line_match_score(std::span<const HoughLine> lines, const Pose& pose, const FieldModel& field,
                        const LocalizerConfig& cfg);

/// F1 of (pixels lying on markings) and (predicted circle crossings that were observed).
double pixel_fit(std::span<const TransitionPixel> pixels, const Pose& pose, const FieldModel& field,
                 const LocalizerConfig& cfg);

/// Point-to-marking least squares on the pixels, starting from `start`.
Pose refine_pose(std::span<const TransitionPixel> pixels, const Pose& start, const FieldModel& field,
                 const LocalizerConfig& cfg);

/// Picks between the symmetric twins (the first two candidates) using the goal sighting.
/// Without a usable sighting the twin nearest `prev` is returned untrusted.
PoseEstimate disambiguate(std::span<const PoseEstimate> candidates,
                          const std::optional<GoalObservation>& goal,
                          const std::optional<PoseEstimate>& prev, const FieldModel& field,
                          const LocalizerConfig& cfg);

/// Full pipeline. Never throws on bad scans: any stage failure returns `prev` untrusted.
PoseEstimate localize(std::span<const TransitionPixel> scan, const FieldModel& field,
                      const std::optional<GoalObservation>& goal, const PoseEstimate& prev,
                      const LocalizerConfig& cfg = {});

/// Stage-by-stage result of one frame, for diagnostics and the experiment harness.
struct LocalizationTrace {
  std::vector<HoughLine> lines;
  std::vector<HoughLine> relevant;
  std::vector<PoseEstimate> candidates;
  std::optional<LocalizationFailure> failure;
  PoseEstimate result;
};

LocalizationTrace localize_traced(std::span<const TransitionPixel> scan, const FieldModel& field,
                                  const std::optional<GoalObservation>& goal, const PoseEstimate& prev,
                                  const LocalizerConfig& cfg = {});

}  // namespace socsim
