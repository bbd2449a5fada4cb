#pragma once

#include <cstdint>
#include <vector>

#include "cbranch/rng.hpp"

namespace cbranch {

/// Finitely supported law of the number of children of one individual.
class OffspringCountLaw {
 public:
  struct Atom {
    std::uint32_t children;
    double probability;
  };

  explicit OffspringCountLaw(std::vector<Atom> atoms);

  const std::vector<Atom>& atoms() const { return atoms_; }
  /// Every individual has exactly one child: the degenerate case excluded
  /// from the extinction dichotomy.
  bool is_degenerate_single_child() const;

 private:
  std::vector<Atom> atoms_;
};

struct ExtinctionResult {
  double probability;
  bool degenerate = false;
};

struct GWTrajectory {
  std::vector<std::uint64_t> counts;
  std::uint64_t seed;

  bool extinct() const { return counts.back() == 0; }
};

double mean_offspring(const OffspringCountLaw& law);
double generating_function(const OffspringCountLaw& law, double s);
/// n-fold composition of the generating function; P{Z_n = 0} at s = 0.
double iterate_generating_function(const OffspringCountLaw& law, std::size_t n, double s);
ExtinctionResult extinction_probability(const OffspringCountLaw& law);

/// Z_0 = 1, then Z_{t+1} is a sum of Z_t independent offspring counts. The
/// sum is drawn as a multinomial split of Z_t over the support, so the cost
/// per generation does not depend on the population size. Throws
/// NumericGuard if a count would exceed 2^62.
GWTrajectory simulate_gw(const OffspringCountLaw& law, std::size_t depth, std::uint64_t seed);

/// W_n = Z_n / m^n for n = 0..depth. Requires m > 1.
std::vector<double> martingale_sequence(const GWTrajectory& traj, double m);

/// Number of individuals (out of `count`) assigned to each outcome when each
/// independently picks outcome j with probability probs[j].
std::vector<std::uint64_t> sample_multinomial(Rng& rng, std::uint64_t count,
                                              const std::vector<double>& probs);

/// Binomial(n, p). Exact (std::binomial_distribution) up to 2^50 trials,
/// rounded normal approximation above that.
std::uint64_t sample_binomial(Rng& rng, std::uint64_t n, double p);
/// Same, for line counts that can exceed 64 bits.
unsigned __int128 sample_binomial_wide(Rng& rng, unsigned __int128 n, double p);
std::vector<unsigned __int128> sample_multinomial_wide(Rng& rng, unsigned __int128 count,
                                                       const std::vector<double>& probs);

}  // namespace cbranch
