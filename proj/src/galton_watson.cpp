#include "cbranch/galton_watson.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cbranch/error.hpp"
#include "cbranch/measures.hpp"

namespace cbranch {
namespace {

// std::binomial_distribution stalls for trial counts near 2^54 (libstdc++),
// so exact draws stop at 2^50. Above that the relative standard deviation
// is below 1e-7 and a rounded normal draw is used.
constexpr std::uint64_t kExactBinomialLimit = std::uint64_t{1} << 50;
constexpr std::uint64_t kPopulationLimit = std::uint64_t{1} << 62;
constexpr double kRootGuard = 1e-9;

unsigned __int128 normal_binomial(Rng& rng, long double n, double p) {
  const long double mean = n * p;
  const long double sd = std::sqrt(n * p * (1.0L - p));
  // Box-Muller on our own uniforms keeps this reproducible across libraries.
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  long double draw = std::round(mean + sd * z);
  draw = std::clamp(draw, 0.0L, n);
  return static_cast<unsigned __int128>(draw);
}

template <typename Count, typename Binomial>
std::vector<Count> multinomial_split(Rng& rng, Count count, const std::vector<double>& probs,
                                     Binomial binomial) {
  std::vector<Count> out(probs.size(), 0);
  std::size_t last = probs.size();
  double remaining_mass = 0.0;
  for (std::size_t j = 0; j < probs.size(); ++j) {
    if (probs[j] > 0.0) {
      last = j;
      remaining_mass += probs[j];
    }
  }
  if (last == probs.size()) return out;
  for (std::size_t j = 0; j < last && count > 0; ++j) {
    if (probs[j] <= 0.0) continue;
    const double p = std::min(probs[j] / remaining_mass, 1.0);
    out[j] = binomial(rng, count, p);
    count -= out[j];
    remaining_mass -= probs[j];
  }
  out[last] = count;
  return out;
}

}  // namespace

OffspringCountLaw::OffspringCountLaw(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
  if (atoms_.empty()) throw DomainError("offspring law: no atoms");
  double total = 0.0;
  for (const auto& a : atoms_) {
    if (!(a.probability >= 0.0)) throw DomainError("offspring law: negative probability");
    total += a.probability;
  }
  if (std::abs(total - 1.0) > kProbabilityTolerance) {
    throw DomainError("offspring law: probabilities sum to " + std::to_string(total));
  }
}

bool OffspringCountLaw::is_degenerate_single_child() const {
  for (const auto& a : atoms_) {
    if (a.probability > 0.0 && a.children != 1) return false;
  }
  return true;
}

double mean_offspring(const OffspringCountLaw& law) {
  double m = 0.0;
  for (const auto& a : law.atoms()) m += a.children * a.probability;
  return m;
}

double generating_function(const OffspringCountLaw& law, double s) {
  if (!(s >= 0.0 && s <= 1.0)) throw DomainError("generating_function: s must lie in [0,1]");
  double f = 0.0;
  for (const auto& a : law.atoms()) f += a.probability * std::pow(s, a.children);
  return std::min(f, 1.0);
}

double iterate_generating_function(const OffspringCountLaw& law, std::size_t n, double s) {
  if (!(s >= 0.0 && s <= 1.0)) throw DomainError("iterate_generating_function: s must lie in [0,1]");
  for (std::size_t k = 0; k < n; ++k) s = generating_function(law, s);
  return s;
}

ExtinctionResult extinction_probability(const OffspringCountLaw& law) {
  if (law.is_degenerate_single_child()) return {0.0, true};
  if (mean_offspring(law) <= 1.0) return {1.0, false};

  auto excess = [&](double s) { return generating_function(law, s) - s; };
  double lo = 0.0;
  double hi = 1.0 - kRootGuard;
  if (excess(lo) <= 0.0) return {0.0, false};
  if (excess(hi) >= 0.0) {
    // Barely supercritical: the root sits inside the guard band. The
    // iterates f_n(0) increase to it.
    return {iterate_generating_function(law, 200000, 0.0), false};
  }
  for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) > 0.0 ? lo : hi) = mid;
  }
  return {0.5 * (lo + hi), false};
}

std::uint64_t sample_binomial(Rng& rng, std::uint64_t n, double p) {
  if (n == 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  if (n <= kExactBinomialLimit) {
    std::binomial_distribution<long long> dist(static_cast<long long>(n), p);
    return static_cast<std::uint64_t>(dist(rng));
  }
  return static_cast<std::uint64_t>(normal_binomial(rng, static_cast<long double>(n), p));
}

unsigned __int128 sample_binomial_wide(Rng& rng, unsigned __int128 n, double p) {
  if (n <= kExactBinomialLimit) return sample_binomial(rng, static_cast<std::uint64_t>(n), p);
  if (p <= 0.0) return 0;
  if (p >= 1.0) return n;
  return normal_binomial(rng, static_cast<long double>(n), p);
}

std::vector<std::uint64_t> sample_multinomial(Rng& rng, std::uint64_t count,
                                              const std::vector<double>& probs) {
  return multinomial_split<std::uint64_t>(rng, count, probs, sample_binomial);
}

std::vector<unsigned __int128> sample_multinomial_wide(Rng& rng, unsigned __int128 count,
                                                       const std::vector<double>& probs) {
  return multinomial_split<unsigned __int128>(rng, count, probs, sample_binomial_wide);
}

GWTrajectory simulate_gw(const OffspringCountLaw& law, std::size_t depth, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> probs;
  for (const auto& a : law.atoms()) probs.push_back(a.probability);

  GWTrajectory traj{{1}, seed};
  traj.counts.reserve(depth + 1);
  for (std::size_t t = 0; t < depth; ++t) {
    const std::uint64_t z = traj.counts.back();
    unsigned __int128 next = 0;
    if (z > 0) {
      const auto split = sample_multinomial(rng, z, probs);
      for (std::size_t j = 0; j < split.size(); ++j) {
        next += static_cast<unsigned __int128>(split[j]) * law.atoms()[j].children;
      }
    }
    if (next > kPopulationLimit) {
      throw NumericGuard("simulate_gw: population exceeds 2^62 at generation " +
                         std::to_string(t + 1) + "; reduce the depth");
    }
    traj.counts.push_back(static_cast<std::uint64_t>(next));
  }
  return traj;
}

std::vector<double> martingale_sequence(const GWTrajectory& traj, double m) {
  if (!(m > 1.0)) throw DomainError("martingale_sequence: requires m > 1");
  std::vector<double> w;
  w.reserve(traj.counts.size());
  double scale = 1.0;
  for (auto z : traj.counts) {
    w.push_back(static_cast<double>(z) / scale);
    scale *= m;
  }
  return w;
}

}  // namespace cbranch
