#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cbranch/colored_branching.hpp"
#include "cbranch/measures.hpp"

namespace cbranch {

/// Cylinder metric weights: the depth-n cylinder around x has diameter
/// prod_{t<=n} theta(x_t). Each theta(i) must lie in (0,1).
class ThetaMetric {
 public:
  explicit ThetaMetric(MeasureVec theta);

  std::size_t size() const { return theta_.size(); }
  double operator[](std::size_t i) const { return theta_[i]; }
  double log(std::size_t i) const { return log_theta_[i]; }
  const MeasureVec& weights() const { return theta_; }

 private:
  MeasureVec theta_;
  std::vector<double> log_theta_;
};

double cylinder_diameter(const ThetaMetric& theta, std::span<const std::uint32_t> prefix);

/// Distance between two stored words: diameter of the longest common prefix
/// cylinder, 0 for identical words.
double cylinder_distance(const ThetaMetric& theta, std::span<const std::uint32_t> x,
                         std::span<const std::uint32_t> y);

/// sum nu ln nu / sum nu ln theta; 0 when nu is a point mass.
double billingsley_entropy(const MeasureVec& nu, const ThetaMetric& theta);

/// rho(nu, mu) / sum nu ln theta. -infinity when rho is +infinity.
double billingsley_kullback_entropy(const MeasureVec& nu, const MeasureVec& mu,
                                    const ThetaMetric& theta);

/// Root of sum_{i in subset} theta(i)^s = 1.
double moran_root(const ThetaMetric& theta, std::span<const std::uint32_t> subset);

struct BowenRoot {
  double s;
  /// s <= 0: the process dies out almost surely and X_infinity is empty.
  bool x_infinity_empty;
};

/// Root of sum_i mu(i) theta(i)^s = 1 (strictly decreasing in s).
BowenRoot bowen_root(const MeasureVec& mu, const ThetaMetric& theta);

/// sum ln nu(x_t) / sum ln theta(x_t) over the first n colors of the line.
/// +infinity if the line visits a color of zero weight.
double pointwise_dimension(const SampledLine& line, const MeasureVec& weights,
                           const ThetaMetric& theta, std::size_t n);

enum class DimensionMethod { kPointwise, kCoveringRoot };
std::string to_string(DimensionMethod method);

struct DimensionReport {
  double estimate = 0.0;
  DimensionMethod method = DimensionMethod::kCoveringRoot;
  std::size_t depth = 0;
  /// The covered set is empty (extinct or nothing passed the filter);
  /// estimate is 0 by convention.
  bool empty = false;
  /// Membership in the spectrum filter was decided at the reporting depth
  /// only (condensation is not decidable at finite depth).
  bool filtered = false;
  /// |s_n - s_{n-1}| per depth when a series was available.
  std::vector<double> convergence_gaps;
};

/// Root s_n of sum_c count(c) * (prod_i theta(i)^{c_i})^s = 1 over the keys
/// of h: the dimension of the natural depth-n cylinder cover.
DimensionReport covering_dimension_estimate(const GenerationHistogram& h, const ThetaMetric& theta);

/// Covering roots at each depth of an evolution, optionally restricted to
/// keys with spectrum in nbhd. Entry 0 corresponds to depth 1.
std::vector<DimensionReport> covering_root_series(const std::vector<GenerationHistogram>& history,
                                                  const ThetaMetric& theta,
                                                  const std::optional<TVNeighborhood>& nbhd = {});

void write_report_json(std::ostream& out, const DimensionReport& report);

struct DimensionExperimentConfig {
  std::size_t depth = 40;
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::optional<TVNeighborhood> filter;
};

struct DimensionExperimentResult {
  /// series[t][n-1] = covering report at depth n for trial t.
  std::vector<std::vector<DimensionReport>> series;
  std::vector<char> survived;
  double survival_frequency = 0.0;
  /// Median of s at the final depth over trials with a nonempty cover.
  double median_estimate = 0.0;
  /// Bowen root, or d(nu, mu, theta) when a filter is set.
  double predicted = 0.0;
  /// Median over nonempty trials of |s_n - s_{n-5}| for each n >= 6.
  std::vector<double> median_lag5_gaps;
};

DimensionExperimentResult dimension_experiment(const ColorStructureLaw& law, const ThetaMetric& theta,
                                               const DimensionExperimentConfig& config);

}  // namespace cbranch
