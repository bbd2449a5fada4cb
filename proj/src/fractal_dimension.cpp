#include "cbranch/fractal_dimension.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"

#include "cbranch/error.hpp"
#include "cbranch/mcmillan.hpp"
#include "cbranch/parallel.hpp"
#include "cbranch/rate_functions.hpp"

namespace cbranch {
namespace {

constexpr double kRootTolerance = 1e-13;

// Bisection for the root of a strictly decreasing function on [lo, hi]
// with f(lo) >= 0 >= f(hi).
template <typename F>
double bisect_decreasing(F f, double lo, double hi) {
  for (int it = 0; it < 400 && hi - lo > kRootTolerance * std::max(1.0, std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Root of a strictly decreasing function on the whole line, by bracketing
// outward from [-1, 1].
template <typename F>
double root_on_line(F f) {
  double lo = -1.0, hi = 1.0;
  while (f(lo) < 0.0) {
    hi = lo;
    lo *= 2.0;
    if (lo < -1e12) throw NumericGuard("root bracketing diverged");
  }
  while (f(hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) throw NumericGuard("root bracketing diverged");
  }
  return bisect_decreasing(f, lo, hi);
}

double log_sum_exp(const std::vector<double>& log_weights, const std::vector<double>& slopes, double s) {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < log_weights.size(); ++k) best = std::max(best, log_weights[k] + s * slopes[k]);
  double sum = 0.0;
  for (std::size_t k = 0; k < log_weights.size(); ++k) sum += std::exp(log_weights[k] + s * slopes[k] - best);
  return best + std::log(sum);
}

double sum_nu_log_theta(const MeasureVec& nu, const ThetaMetric& theta) {
  require_same_size(nu.size(), theta.size(), "theta pairing");
  double sum = 0.0;
  for (std::size_t i = 0; i < nu.size(); ++i) sum += nu[i] * theta.log(i);
  return sum;
}

}  // namespace

ThetaMetric::ThetaMetric(MeasureVec theta) : theta_(std::move(theta)) {
  for (double t : theta_.weights()) {
    if (!(t > 0.0 && t < 1.0)) throw DomainError("theta(i) in (0,1) required");
    log_theta_.push_back(std::log(t));
  }
}

double cylinder_diameter(const ThetaMetric& theta, std::span<const std::uint32_t> prefix) {
  if (prefix.empty()) throw DomainError("cylinder_diameter: empty prefix");
  double d = 1.0;
  for (auto c : prefix) {
    if (c >= theta.size()) throw DomainError("cylinder_diameter: color out of range");
    d *= theta[c];
  }
  return d;
}

double cylinder_distance(const ThetaMetric& theta, std::span<const std::uint32_t> x,
                         std::span<const std::uint32_t> y) {
  const std::size_t len = std::min(x.size(), y.size());
  std::size_t common = 0;
  while (common < len && x[common] == y[common]) ++common;
  if (common == x.size() && common == y.size()) return 0.0;
  double d = 1.0;
  for (std::size_t t = 0; t < common; ++t) d *= theta[x[t]];
  return d;
}

double billingsley_entropy(const MeasureVec& nu, const ThetaMetric& theta) {
  const double h = shannon_entropy(nu);
  if (h == 0.0) return 0.0;
  return -h / sum_nu_log_theta(nu, theta);
}

double billingsley_kullback_entropy(const MeasureVec& nu, const MeasureVec& mu,
                                    const ThetaMetric& theta) {
  const double rho = kullback_action(nu, mu);
  if (is_plus_infinity(rho)) return -std::numeric_limits<double>::infinity();
  return rho / sum_nu_log_theta(nu, theta);
}

double moran_root(const ThetaMetric& theta, std::span<const std::uint32_t> subset) {
  if (subset.empty()) throw DomainError("moran_root: empty color subset");
  std::vector<double> indicator(theta.size(), 0.0);
  for (auto c : subset) {
    if (c >= theta.size()) throw DomainError("moran_root: color out of range");
    indicator[c] = 1.0;
  }
  std::size_t distinct = 0;
  for (double v : indicator) distinct += v > 0.0;
  if (distinct == 1) return 0.0;
  return bowen_root(MeasureVec(std::move(indicator)), theta).s;
}

BowenRoot bowen_root(const MeasureVec& mu, const ThetaMetric& theta) {
  require_same_size(mu.size(), theta.size(), "bowen_root");
  std::vector<double> log_mu, slopes;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (mu[i] > 0.0) {
      log_mu.push_back(std::log(mu[i]));
      slopes.push_back(theta.log(i));
    }
  }
  if (log_mu.empty()) throw DomainError("bowen_root: all expectations are zero");
  const double s = root_on_line([&](double x) { return log_sum_exp(log_mu, slopes, x); });
  return {s, s <= 0.0};
}

double pointwise_dimension(const SampledLine& line, const MeasureVec& weights,
                           const ThetaMetric& theta, std::size_t n) {
  require_same_size(weights.size(), theta.size(), "pointwise_dimension");
  if (n == 0 || n > line.colors.size()) throw DomainError("pointwise_dimension: depth out of range");
  double num = 0.0, den = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const auto c = line.colors[t];
    if (c >= weights.size()) throw DomainError("pointwise_dimension: color out of range");
    if (weights[c] <= 0.0) return kPlusInfinity;
    num += std::log(weights[c]);
    den += theta.log(c);
  }
  if (num == 0.0) return 0.0;
  return num / den;
}

std::string to_string(DimensionMethod method) {
  return method == DimensionMethod::kPointwise ? "pointwise" : "covering-root";
}

DimensionReport covering_dimension_estimate(const GenerationHistogram& h, const ThetaMetric& theta) {
  require_same_size(h.colors(), theta.size(), "covering_dimension_estimate");
  DimensionReport report;
  report.depth = h.depth();
  if (h.empty() || h.depth() == 0) {
    report.empty = true;
    return report;
  }
  std::vector<double> log_counts, slopes;
  for (const auto& [key, count] : h.entries()) {
    double slope = 0.0;
    for (std::size_t i = 0; i < key.size(); ++i) slope += key[i] * theta.log(i);
    log_counts.push_back(std::log(to_double(count)));
    slopes.push_back(slope);
  }
  auto pressure = [&](double s) { return log_sum_exp(log_counts, slopes, s); };
  const double at_zero = pressure(0.0);
  if (at_zero <= 0.0) return report;  // a single line: dimension 0
  const double steepest = *std::max_element(slopes.begin(), slopes.end());
  report.estimate = bisect_decreasing(pressure, 0.0, at_zero / -steepest);
  return report;
}

std::vector<DimensionReport> covering_root_series(const std::vector<GenerationHistogram>& history,
                                                  const ThetaMetric& theta,
                                                  const std::optional<TVNeighborhood>& nbhd) {
  std::vector<DimensionReport> series;
  for (std::size_t n = 1; n < history.size(); ++n) {
    auto report = nbhd ? covering_dimension_estimate(history[n].filtered(*nbhd), theta)
                       : covering_dimension_estimate(history[n], theta);
    report.filtered = nbhd.has_value();
    if (!series.empty()) {
      report.convergence_gaps = series.back().convergence_gaps;
      report.convergence_gaps.push_back(std::abs(report.estimate - series.back().estimate));
    }
    series.push_back(std::move(report));
  }
  return series;
}

void write_report_json(std::ostream& out, const DimensionReport& report) {
  nlohmann::ordered_json j;
  j["estimate"] = report.estimate;
  j["method"] = to_string(report.method);
  j["depth"] = report.depth;
  j["empty"] = report.empty;
  j["filtered"] = report.filtered;
  j["convergence_gaps"] = report.convergence_gaps;
  out << j.dump(2) << '\n';
}

DimensionExperimentResult dimension_experiment(const ColorStructureLaw& law, const ThetaMetric& theta,
                                               const DimensionExperimentConfig& config) {
  if (config.depth == 0 || config.trials == 0) {
    throw DomainError("dimension_experiment: depth and trials must be positive");
  }
  require_same_size(law.colors(), theta.size(), "dimension_experiment");
  const auto mu = color_expectation(law).mu;
  DimensionExperimentResult result;
  result.predicted = config.filter
                         ? billingsley_kullback_entropy(config.filter->center(), mu, theta)
                         : bowen_root(mu, theta).s;
  result.series.resize(config.trials);
  result.survived.assign(config.trials, 0);

  parallel_for(config.trials, config.threads, [&](std::size_t t) {
    Rng rng = make_stream(config.seed, t);
    const auto history = evolve_histograms(law, config.depth, rng);
    result.series[t] = covering_root_series(history, theta, config.filter);
    result.survived[t] = !history.back().empty();
  });

  std::vector<double> finals;
  std::size_t survivors = 0;
  for (std::size_t t = 0; t < config.trials; ++t) {
    survivors += result.survived[t] != 0;
    if (!result.series[t].back().empty) finals.push_back(result.series[t].back().estimate);
  }
  result.survival_frequency = static_cast<double>(survivors) / static_cast<double>(config.trials);
  result.median_estimate = median(finals);
  for (std::size_t n = 6; n <= config.depth; ++n) {
    std::vector<double> gaps;
    for (const auto& s : result.series) {
      if (s.back().empty) continue;
      gaps.push_back(std::abs(s[n - 1].estimate - s[n - 6].estimate));
    }
    result.median_lag5_gaps.push_back(median(std::move(gaps)));
  }
  return result;
}

}  // namespace cbranch
