#include "cbranch/mcmillan.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "cbranch/error.hpp"
#include "cbranch/galton_watson.hpp"
#include "cbranch/parallel.hpp"
#include "cbranch/rate_functions.hpp"

namespace cbranch {
namespace {

using Real = boost::multiprecision::cpp_bin_float_50;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void guard_enumeration(std::size_t r, std::size_t n) {
  if (n == 0) throw DomainError("exact enumeration: depth must be positive");
  if (r == 2) {
    if (n > kMaxExactDepthBinary) {
      throw NumericGuard("exact enumeration: depth " + std::to_string(n) +
                         " too large for exact sums; use the Monte Carlo path");
    }
    return;
  }
  if (r > 4 || n > kMaxExactDepthSmallAlphabet) {
    throw NumericGuard("exact enumeration: r = " + std::to_string(r) + ", n = " + std::to_string(n) +
                       " exceeds the enumeration guard (r <= 4 with n <= 40); use the Monte Carlo path");
  }
}

// Calls visit(counts, multinomial coefficient) for every composition of n
// into r nonnegative parts.
void for_each_composition(std::size_t r, std::size_t n,
                          const std::function<void(const ColorCounts&, const BigCount&)>& visit) {
  ColorCounts counts(r, 0);
  if (r == 1) {
    counts[0] = static_cast<std::uint32_t>(n);
    visit(counts, BigCount(1));
    return;
  }
  if (r == 2) {
    BigCount binom = 1;
    for (std::size_t k = 0; k <= n; ++k) {
      counts[0] = static_cast<std::uint32_t>(k);
      counts[1] = static_cast<std::uint32_t>(n - k);
      visit(counts, binom);
      binom = binom * (n - k) / (k + 1);
    }
    return;
  }
  std::vector<BigCount> factorial(n + 1, BigCount(1));
  for (std::size_t k = 1; k <= n; ++k) factorial[k] = factorial[k - 1] * k;
  std::function<void(std::size_t, std::size_t)> recurse = [&](std::size_t i, std::size_t left) {
    if (i + 1 == r) {
      counts[i] = static_cast<std::uint32_t>(left);
      BigCount denom = 1;
      for (auto c : counts) denom *= factorial[c];
      visit(counts, factorial[n] / denom);
      return;
    }
    for (std::size_t c = 0; c <= left; ++c) {
      counts[i] = static_cast<std::uint32_t>(c);
      recurse(i + 1, left - c);
    }
  };
  recurse(0, n);
}

}  // namespace

RateEstimate make_rate_estimate(std::size_t n, double log_value, double predicted) {
  RateEstimate e;
  e.n = n;
  e.log_value = log_value;
  e.log_rate = log_value / static_cast<double>(n);
  e.predicted = predicted;
  e.gap = e.log_rate - predicted;
  return e;
}

double log_of(const BigCount& value) {
  if (value <= 0) return kNegInf;
  return static_cast<double>(log(Real(value)));
}

double ldp_log_mass_exact(const MeasureVec& mu, const TVNeighborhood& nbhd, std::size_t n) {
  require_same_size(mu.size(), nbhd.center().size(), "ldp_mass_exact");
  guard_enumeration(mu.size(), n);
  std::vector<Real> weights;
  for (double w : mu.weights()) weights.emplace_back(w);

  Real sum = 0;
  for_each_composition(mu.size(), n, [&](const ColorCounts& c, const BigCount& coef) {
    if (!tv_contains_counts(nbhd, c)) return;
    Real term(coef);
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (c[i] > 0) term *= pow(weights[i], static_cast<int>(c[i]));
    }
    sum += term;
  });
  if (sum <= 0) return kNegInf;
  return static_cast<double>(log(sum));
}

double ldp_mass_exact(const MeasureVec& mu, const TVNeighborhood& nbhd, std::size_t n) {
  return std::exp(ldp_log_mass_exact(mu, nbhd, n));
}

BigCount mcmillan_count_exact(const TVNeighborhood& nbhd, std::size_t n) {
  guard_enumeration(nbhd.center().size(), n);
  BigCount total = 0;
  for_each_composition(nbhd.center().size(), n, [&](const ColorCounts& c, const BigCount& coef) {
    if (tv_contains_counts(nbhd, c)) total += coef;
  });
  return total;
}

LdpRadiusTable ldp_radius_table(const MeasureVec& mu, const MeasureVec& nu, double radius,
                                std::size_t n_max, double eps) {
  const TVNeighborhood nbhd(nu, radius);
  const double predicted = -kullback_action(nu, mu);
  LdpRadiusTable table;
  table.radius = radius;
  for (std::size_t n = 1; n <= n_max; ++n) {
    table.rows.push_back(make_rate_estimate(n, ldp_log_mass_exact(mu, nbhd, n), predicted));
  }
  const std::size_t half = n_max / 2;
  for (std::size_t k = half; k < table.rows.size(); ++k) {
    const double gap = table.rows[k].gap;
    table.certified_upper_eps = std::max(table.certified_upper_eps, gap);
    table.certified_lower_eps = std::max(table.certified_lower_eps, -gap);
  }
  for (std::size_t k = table.rows.size(); k-- > 0;) {
    if (!(table.rows[k].gap >= -eps)) break;
    table.lower_threshold = table.rows[k].n;
  }
  return table;
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (values.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(values.begin(), mid);
  return 0.5 * (lower + upper);
}

ColoredMcMillanResult colored_mcmillan_experiment(const ColorStructureLaw& law, const MeasureVec& nu,
                                                  const ColoredMcMillanConfig& config) {
  if (config.depth == 0 || config.trials == 0) {
    throw DomainError("colored_mcmillan_experiment: depth and trials must be positive");
  }
  const auto expectation = color_expectation(law);
  ColoredMcMillanResult result;
  result.rho = kullback_action(nu, expectation.mu);
  result.predicted = -result.rho;
  result.lower_bound_applicable = result.rho < 0.0;
  result.extinction_probability = extinction_probability(total_offspring_law(law)).probability;

  const TVNeighborhood nbhd(nu, config.radius);
  std::vector<TVNeighborhood> grid;
  for (double r : kRadiusGrid) grid.emplace_back(nu, r);

  // counts[t][n-1] for the configured radius; grid_counts[t][g][n-1].
  std::vector<std::vector<LineCount>> counts(config.trials);
  std::vector<std::vector<std::vector<LineCount>>> grid_counts(config.trials);
  std::vector<char> survived(config.trials, 0);

  parallel_for(config.trials, config.threads, [&](std::size_t t) {
    Rng rng = make_stream(config.seed, t);
    GenerationHistogram h = GenerationHistogram::root(law.colors());
    counts[t].reserve(config.depth);
    grid_counts[t].assign(grid.size(), {});
    for (std::size_t n = 1; n <= config.depth; ++n) {
      h = step_generation(h, law, rng);
      counts[t].push_back(count_lines_in_neighborhood(h, nbhd));
      for (std::size_t g = 0; g < grid.size(); ++g) {
        grid_counts[t][g].push_back(count_lines_in_neighborhood(h, grid[g]));
      }
    }
    survived[t] = !h.empty();
  });

  std::vector<double> final_rates, final_gaps;
  std::size_t violations = 0;
  for (std::size_t t = 0; t < config.trials; ++t) {
    for (std::size_t n = 1; n <= config.depth; ++n) {
      const LineCount c = counts[t][n - 1];
      const double log_value = c == 0 ? kNegInf : std::log(to_double(c));
      result.rows.push_back({t, c, make_rate_estimate(n, log_value, result.predicted), survived[t] != 0});
    }
    if (!survived[t]) continue;
    ++result.survivors;
    const auto& last = result.rows.back().estimate;
    final_rates.push_back(last.log_rate);
    final_gaps.push_back(last.gap);
    if (last.log_rate > result.predicted + config.eps) ++violations;
  }
  result.survival_frequency = static_cast<double>(result.survivors) / static_cast<double>(config.trials);
  if (result.survivors > 0) {
    result.median_log_rate = median(final_rates);
    result.median_gap = median(final_gaps);
    result.upper_violation_frequency = static_cast<double>(violations) / result.survivors;
  } else {
    result.median_log_rate = result.median_gap = std::numeric_limits<double>::quiet_NaN();
  }

  for (std::size_t g = 0; g < grid.size(); ++g) {
    double eps = 0.0;
    for (std::size_t n = std::max<std::size_t>(1, config.depth / 2); n <= config.depth; ++n) {
      std::vector<double> gaps;
      for (std::size_t t = 0; t < config.trials; ++t) {
        if (!survived[t]) continue;
        const LineCount c = grid_counts[t][g][n - 1];
        const double rate = c == 0 ? kNegInf : std::log(to_double(c)) / static_cast<double>(n);
        gaps.push_back(rate - result.predicted);
      }
      if (!gaps.empty()) eps = std::max(eps, std::abs(median(std::move(gaps))));
    }
    result.certified_eps.emplace_back(kRadiusGrid[g], eps);
  }
  return result;
}

}  // namespace cbranch
