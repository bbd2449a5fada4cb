#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "cbranch/colored_branching.hpp"
#include "cbranch/measures.hpp"

namespace cbranch {

using BigCount = boost::multiprecision::cpp_int;

/// (1/n) ln value against a predicted exponential rate.
struct RateEstimate {
  std::size_t n = 0;
  double log_value = 0.0;
  double log_rate = 0.0;
  double predicted = 0.0;
  double gap = 0.0;
};

RateEstimate make_rate_estimate(std::size_t n, double log_value, double predicted);

/// Largest depth accepted by the exact enumerations for r = 2; r = 3, 4 are
/// limited to depth 40 and larger alphabets are refused.
inline constexpr std::size_t kMaxExactDepthBinary = 20000;
inline constexpr std::size_t kMaxExactDepthSmallAlphabet = 40;

/// ln mu^n{x in X^n : delta_{x,n} in O(nu)}, summing multinomial(n; c) prod
/// mu(i)^{c_i} over composition vectors c with c/n in the ball. Coefficients
/// are exact integers; the sum is carried in 50-digit binary floating point.
/// Returns -infinity when no composition qualifies.
double ldp_log_mass_exact(const MeasureVec& mu, const TVNeighborhood& nbhd, std::size_t n);
double ldp_mass_exact(const MeasureVec& mu, const TVNeighborhood& nbhd, std::size_t n);

/// #{x in X^n : delta_{x,n} in O(nu)} over the full alphabet, exactly.
BigCount mcmillan_count_exact(const TVNeighborhood& nbhd, std::size_t n);
double log_of(const BigCount& value);

/// Exact-LDP table for one radius over depths 1..n_max.
struct LdpRadiusTable {
  double radius = 0.0;
  std::vector<RateEstimate> rows;
  /// max(0, max gap) over the top half of the depths: the certified epsilon
  /// for the upper bound rate <= -rho + eps.
  double certified_upper_eps = 0.0;
  /// max(0, max -gap) over the top half: certified epsilon for the lower bound.
  double certified_lower_eps = 0.0;
  /// Smallest n0 with rate >= -rho - eps for all n0 <= n <= n_max, for the
  /// requested eps; empty if the last depth already fails.
  std::optional<std::size_t> lower_threshold;
};

inline const std::vector<double> kRadiusGrid = {0.2, 0.1, 0.05, 0.02, 0.01};

LdpRadiusTable ldp_radius_table(const MeasureVec& mu, const MeasureVec& nu, double radius,
                                std::size_t n_max, double eps);

struct ColoredTrialRow {
  std::size_t trial = 0;
  LineCount count = 0;
  RateEstimate estimate;
  bool survived = false;
};

struct ColoredMcMillanConfig {
  double radius = 0.1;
  std::size_t depth = 40;
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  /// Tolerance for the per-trial upper-bound violation count.
  double eps = 0.1;
};

struct ColoredMcMillanResult {
  double rho = 0.0;
  double predicted = 0.0;
  bool lower_bound_applicable = false;
  double extinction_probability = 0.0;
  double survival_frequency = 0.0;
  std::size_t survivors = 0;
  /// Median over surviving trials at the final depth.
  double median_log_rate = 0.0;
  double median_gap = 0.0;
  /// Fraction of surviving trials with final rate > -rho + eps.
  double upper_violation_frequency = 0.0;
  /// Per radius in kRadiusGrid: max over the top half of depths of the
  /// absolute median (over surviving trials) gap.
  std::vector<std::pair<double, double>> certified_eps;
  /// One row per trial per depth 1..depth.
  std::vector<ColoredTrialRow> rows;
};

/// Simulates `trials` independent histogram evolutions and compares the
/// number of lines with spectrum in O(nu) against exp(-n rho(nu, mu)).
ColoredMcMillanResult colored_mcmillan_experiment(const ColorStructureLaw& law, const MeasureVec& nu,
                                                  const ColoredMcMillanConfig& config);

double median(std::vector<double> values);

}  // namespace cbranch
