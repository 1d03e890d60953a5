#include "socsim/hough.hpp"

#include <algorithm>
#include <cmath>

namespace socsim {

const char* to_string(LocalizationFailure f) {
  switch (f) {
    case LocalizationFailure::EmptyScan: return "empty scan: no transition pixels";
    case LocalizationFailure::InsufficientLines: return "fewer than two lines";
    case LocalizationFailure::NoRelevantLines: return "no line matches the field geometry";
    case LocalizationFailure::UnobservablePose: return "all lines parallel: pose unobservable";
  }
  return "localization failure";
}

HoughAccumulator::HoughAccumulator(double rho_max, const AccumulatorConfig& cfg)
    : rho_res_(cfg.rho_resolution), phi_res_(cfg.phi_resolution) {
  if (!(rho_res_ > 0.0) || !(phi_res_ > 0.0))
    throw std::invalid_argument("accumulator resolutions must be positive");
  phi_bins_ = std::max(1, static_cast<int>(std::lround(kPi / phi_res_)));
  phi_res_ = kPi / phi_bins_;
  rho_center_ = static_cast<int>(std::ceil(std::max(rho_max, 0.0) / rho_res_)) + 1;
  rho_bins_ = 2 * rho_center_ + 1;
  cells_.assign(static_cast<std::size_t>(rho_bins_) * phi_bins_, 0);
  cos_.resize(phi_bins_);
  sin_.resize(phi_bins_);
  for (int p = 0; p < phi_bins_; ++p) {
    cos_[p] = std::cos(phi_of(p));
    sin_[p] = std::sin(phi_of(p));
  }
}

int HoughAccumulator::phi_bin(double phi) const {
  int b = static_cast<int>(std::lround(phi / phi_res_));
  return ((b % phi_bins_) + phi_bins_) % phi_bins_;
}

void HoughAccumulator::add_pixel(double x, double y) {
  for (int p = 0; p < phi_bins_; ++p) {
    const int r = rho_bin(x * cos_[p] + y * sin_[p]);
    ++cells_[index(r, p)];
  }
  total_ += phi_bins_;
}

HoughAccumulator hough_accumulate(std::span<const TransitionPixel> pixels, const AccumulatorConfig& cfg) {
  if (pixels.empty()) throw LocalizationError(LocalizationFailure::EmptyScan);
  double rho_max = 0.0;
  for (const auto& p : pixels) rho_max = std::max(rho_max, std::hypot(p.x, p.y));
  HoughAccumulator acc(rho_max, cfg);
  for (const auto& p : pixels) acc.add_pixel(p.x, p.y);
  return acc;
}

std::vector<HoughLine> top_lines(const HoughAccumulator& acc, int q, int min_votes,
                                 int suppression_radius, double relative_threshold) {
  if (q < 1) throw std::invalid_argument("top_lines: q must be at least 1");
  const int nr = acc.rho_bins();
  const int np = acc.phi_bins();
  const int rad = std::max(0, suppression_radius);

  // Neighbour lookup across the phi seam: (r, -1) is (mirror r, np-1) and (r, np) is (mirror r, 0).
  auto at = [&](int r, int p) -> int {
    if (p < 0) {
      p += np;
      r = nr - 1 - r;
    } else if (p >= np) {
      p -= np;
      r = nr - 1 - r;
    }
    if (r < 0 || r >= nr) return -1;
    return acc.votes(r, p);
  };

  struct Peak {
    int votes, r, p;
  };
  int global = 0;
  for (int p = 0; p < np; ++p)
    for (int r = 0; r < nr; ++r) global = std::max(global, acc.votes(r, p));
  const int floor_votes = std::max(min_votes, static_cast<int>(std::ceil(relative_threshold * global)));

  std::vector<Peak> peaks;
  for (int p = 0; p < np; ++p) {
    for (int r = 0; r < nr; ++r) {
      const int v = acc.votes(r, p);
      if (v < floor_votes || v <= 0) continue;
      bool is_max = true;
      for (int dp = -rad; dp <= rad && is_max; ++dp)
        for (int dr = -rad; dr <= rad; ++dr) {
          if (dp == 0 && dr == 0) continue;
          if (at(r + dr, p + dp) > v) {
            is_max = false;
            break;
          }
        }
      if (is_max) peaks.push_back({v, r, p});
    }
  }
  std::stable_sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.votes > b.votes; });

  // Plateaus yield several equal maxima; keep the first and suppress its neighbourhood.
  auto near = [&](const Peak& a, const Peak& b) {
    auto close = [&](int ra, int pa, int rb, int pb) {
      return std::abs(ra - rb) <= rad && std::abs(pa - pb) <= rad;
    };
    if (close(a.r, a.p, b.r, b.p)) return true;
    // same comparison with b reflected across the seam
    return close(a.r, a.p, nr - 1 - b.r, b.p - np) || close(a.r, a.p, nr - 1 - b.r, b.p + np);
  };
  std::vector<Peak> chosen;
  for (const auto& pk : peaks) {
    if (static_cast<int>(chosen.size()) >= q) break;
    if (std::any_of(chosen.begin(), chosen.end(), [&](const Peak& c) { return near(c, pk); })) continue;
    chosen.push_back(pk);
  }

  std::vector<HoughLine> out;
  out.reserve(chosen.size());
  for (const auto& c : chosen) out.push_back({acc.rho_of(c.r), acc.phi_of(c.p), c.votes});
  return out;
}

LinePairDistance line_pair_distance(const HoughLine& a, const HoughLine& b) {
  const double raw = std::abs(a.phi - b.phi);
  LinePairDistance d;
  if (raw <= kPi / 2.0) {
    d.delta_phi = raw;
    d.delta_rho = std::abs(a.rho - b.rho);
  } else {
    // normals are anti-aligned across the seam; compare against the flipped offset
    d.delta_phi = kPi - raw;
    d.delta_rho = std::abs(a.rho + b.rho);
  }
  return d;
}

std::vector<LinePairDistance> pair_distances(std::span<const HoughLine> lines) {
  if (lines.size() < 2) throw LocalizationError(LocalizationFailure::InsufficientLines);
  std::vector<LinePairDistance> out;
  out.reserve(lines.size() * (lines.size() - 1) / 2);
  for (std::size_t j = 0; j < lines.size(); ++j)
    for (std::size_t k = j + 1; k < lines.size(); ++k) {
      LinePairDistance d = line_pair_distance(lines[j], lines[k]);
      d.j = j;
      d.k = k;
      out.push_back(d);
    }
  return out;
}

bool matches_relation(const LinePairDistance& d, const LineRelation& rel, const RelevanceTolerance& tol) {
  if (std::abs(d.delta_phi - rel.delta_phi) > tol.phi_tol) return false;
  return !rel.delta_rho || std::abs(d.delta_rho - *rel.delta_rho) <= tol.rho_tol;
}

std::vector<HoughLine> relevance_filter(std::span<const HoughLine> lines,
                                        std::span<const LinePairDistance> pairs,
                                        const FieldModel& field, const RelevanceTolerance& tol) {
  std::vector<char> keep(lines.size(), 0);
  for (const auto& d : pairs) {
    if (d.j >= lines.size() || d.k >= lines.size()) continue;
    const bool relevant = std::any_of(field.line_relations().begin(), field.line_relations().end(),
                                      [&](const LineRelation& r) { return matches_relation(d, r, tol); });
    if (relevant) keep[d.j] = keep[d.k] = 1;
  }
  std::vector<HoughLine> out;
  for (std::size_t i = 0; i < lines.size(); ++i)
    if (keep[i]) out.push_back(lines[i]);
  if (out.empty()) throw LocalizationError(LocalizationFailure::NoRelevantLines);
  return out;
}

}  // namespace socsim
