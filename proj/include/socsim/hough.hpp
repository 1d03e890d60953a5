#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "socsim/field.hpp"

namespace socsim {

enum class LocalizationFailure { EmptyScan, InsufficientLines, NoRelevantLines, UnobservablePose };

const char* to_string(LocalizationFailure f);

/// Raised by the individual pipeline stages; localize() turns it into an untrusted estimate.
class LocalizationError : public std::runtime_error {
 public:
  explicit LocalizationError(LocalizationFailure f) : std::runtime_error(to_string(f)), failure(f) {}
  LocalizationFailure failure;
};

struct AccumulatorConfig {
  double rho_resolution = 0.02;         // m per bin
  double phi_resolution = kPi / 180.0;  // rad per bin
};

/// Line in half-plane form: rho may be negative, phi in [0, pi).
struct HoughLine {
  double rho = 0.0;
  double phi = 0.0;
  int votes = 0;
};

/// Vote grid over (rho, phi). The rho axis is symmetric about zero so that the cell
/// (rho, phi) at the phi = pi seam neighbours (-rho, 0).
class HoughAccumulator {
 public:
  HoughAccumulator(double rho_max, const AccumulatorConfig& cfg);

  int rho_bins() const { return rho_bins_; }
  int phi_bins() const { return phi_bins_; }
  double rho_resolution() const { return rho_res_; }
  double phi_resolution() const { return phi_res_; }

  double rho_of(int bin) const { return (bin - rho_center_) * rho_res_; }
  double phi_of(int bin) const { return bin * phi_res_; }
  int rho_bin(double rho) const { return static_cast<int>(std::lround(rho / rho_res_)) + rho_center_; }
  int phi_bin(double phi) const;

  int votes(int rho_bin, int phi_bin) const { return cells_[index(rho_bin, phi_bin)]; }
  long long total_votes() const { return total_; }

  /// One vote per phi column along the pixel's sinusoid.
  void add_pixel(double x, double y);

 private:
  std::size_t index(int r, int p) const { return static_cast<std::size_t>(p) * rho_bins_ + r; }

  double rho_res_;
  double phi_res_;
  int rho_bins_;
  int phi_bins_;
  int rho_center_;
  std::vector<int> cells_;
  std::vector<double> cos_;
  std::vector<double> sin_;
  long long total_ = 0;
};

/// Throws LocalizationError(EmptyScan) for an empty pixel set.
HoughAccumulator hough_accumulate(std::span<const TransitionPixel> pixels, const AccumulatorConfig& cfg);

/// The q strongest local maxima, strongest first, each suppressing its
/// (2*radius+1)^2 neighbourhood. Cells below `min_votes` or below `relative_threshold`
/// times the global maximum are never reported; the latter drops the single-vote tails and
/// discretization side lobes that a long line leaves outside any small neighbourhood.
std::vector<HoughLine> top_lines(const HoughAccumulator& acc, int q, int min_votes = 1,
                                 int suppression_radius = 1, double relative_threshold = 0.5);

struct LinePairDistance {
  std::size_t j = 0;
  std::size_t k = 0;
  double delta_phi = 0.0;  // [0, pi/2] after wrapping
  double delta_rho = 0.0;  // offset between the lines once their normals are aligned
};

/// Distance of one pair; symmetric in its arguments.
LinePairDistance line_pair_distance(const HoughLine& a, const HoughLine& b);

/// All unordered pairs. Throws LocalizationError(InsufficientLines) for fewer than two lines.
std::vector<LinePairDistance> pair_distances(std::span<const HoughLine> lines);

struct RelevanceTolerance {
  double phi_tol = 3.0 * kPi / 180.0;
  double rho_tol = 0.10;
};

bool matches_relation(const LinePairDistance& d, const LineRelation& rel, const RelevanceTolerance& tol);

/// Keeps, in order, the lines that take part in at least one pair consistent with the
/// field's line relations. Throws LocalizationError(NoRelevantLines) when nothing survives.
std::vector<HoughLine> relevance_filter(std::span<const HoughLine> lines,
                                        std::span<const LinePairDistance> pairs,
                                        const FieldModel& field, const RelevanceTolerance& tol);

}  // namespace socsim
