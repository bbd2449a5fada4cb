#include "cbranch/rate_functions.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "cbranch/error.hpp"

namespace cbranch {
namespace {

// Off-support value for psi. exp(-1000) underflows to zero, which is the
// limit the Legendre supremum approaches when nu has zeros.
constexpr double kOffSupportTilt = -1000.0;

void require_positive_mass(const MeasureVec& mu, const char* what) {
  if (!(mu.total_mass() > 0.0)) throw DomainError(std::string(what) + ": zero-mass measure");
}

std::vector<double> tilted_weights(const FuncVec& phi, const MeasureVec& mu, double& log_norm) {
  require_same_size(phi.size(), mu.size(), "spectral potential");
  require_positive_mass(mu, "spectral potential");
  double shift = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (mu[i] > 0.0) shift = std::max(shift, phi[i]);
  }
  std::vector<double> w(mu.size(), 0.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (mu[i] > 0.0) {
      w[i] = mu[i] * std::exp(phi[i] - shift);
      sum += w[i];
    }
  }
  for (double& x : w) x /= sum;
  log_norm = shift + std::log(sum);
  return w;
}

// Solves a x = b in place by Gaussian elimination with partial pivoting.
// Returns false for a numerically singular system.
bool solve_dense(std::vector<std::vector<double>>& a, std::vector<double>& b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t row = col + 1; row < n; ++row) {
      if (std::abs(a[row][col]) > std::abs(a[pivot][col])) pivot = row;
    }
    if (std::abs(a[pivot][col]) < 1e-300) return false;
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (std::size_t row = col + 1; row < n; ++row) {
      const double factor = a[row][col] / a[col][col];
      for (std::size_t k = col; k < n; ++k) a[row][k] -= factor * a[col][k];
      b[row] -= factor * b[col];
    }
  }
  for (std::size_t col = n; col-- > 0;) {
    double acc = b[col];
    for (std::size_t k = col + 1; k < n; ++k) acc -= a[col][k] * b[k];
    b[col] = acc / a[col][col];
  }
  return true;
}

double legendre_objective(const MeasureVec& nu, const MeasureVec& mu, const std::vector<double>& psi) {
  const FuncVec f(psi);
  return integrate(nu, f) - spectral_potential(f, mu);
}

// Damped Newton ascent on the concave objective nu[psi] - lambda(psi, mu)
// over the free coordinates; psi at `gauge` stays fixed since the objective
// is invariant under adding constants.
double newton_ascent(const MeasureVec& nu, const MeasureVec& mu, std::vector<double> psi,
                     const std::vector<std::size_t>& free, std::size_t iterations) {
  double best = legendre_objective(nu, mu, psi);
  for (std::size_t it = 0; it < iterations && !free.empty(); ++it) {
    double log_norm = 0.0;
    const auto tilted = tilted_weights(FuncVec(psi), mu, log_norm);
    std::vector<double> grad(free.size());
    double grad_norm = 0.0;
    for (std::size_t a = 0; a < free.size(); ++a) {
      grad[a] = nu[free[a]] - tilted[free[a]];
      grad_norm = std::max(grad_norm, std::abs(grad[a]));
    }
    if (grad_norm < 1e-15) break;
    std::vector<std::vector<double>> cov(free.size(), std::vector<double>(free.size()));
    for (std::size_t a = 0; a < free.size(); ++a) {
      for (std::size_t b = 0; b < free.size(); ++b) {
        cov[a][b] = (a == b ? tilted[free[a]] : 0.0) - tilted[free[a]] * tilted[free[b]];
      }
    }
    std::vector<double> step = grad;
    if (!solve_dense(cov, step)) step = grad;
    double t = 1.0;
    bool improved = false;
    for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
      std::vector<double> trial = psi;
      for (std::size_t a = 0; a < free.size(); ++a) {
        trial[free[a]] = std::clamp(trial[free[a]] + t * step[a], -700.0, 700.0);
      }
      const double value = legendre_objective(nu, mu, trial);
      if (value > best) {
        best = value;
        psi = std::move(trial);
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  return best;
}

}  // namespace

double spectral_potential(const FuncVec& phi, const MeasureVec& mu) {
  double log_norm = 0.0;
  tilted_weights(phi, mu, log_norm);
  return log_norm;
}

TiltedFamily tilted_measure(const FuncVec& phi, const MeasureVec& mu) {
  double log_norm = 0.0;
  auto w = tilted_weights(phi, mu, log_norm);
  return TiltedFamily{mu, phi, log_norm, MeasureVec(std::move(w))};
}

MeasureVec potential_gradient(const FuncVec& phi, const MeasureVec& mu) {
  return tilted_measure(phi, mu).tilted;
}

double potential_hessian_quadform(const FuncVec& phi, const MeasureVec& mu, const FuncVec& f,
                                  const FuncVec& g) {
  require_same_size(f.size(), mu.size(), "potential_hessian_quadform");
  require_same_size(g.size(), mu.size(), "potential_hessian_quadform");
  const MeasureVec tilted = potential_gradient(phi, mu);
  const double mean_f = integrate(tilted, f);
  const double mean_g = integrate(tilted, g);
  // Centered form avoids the cancellation in E[fg] - E[f]E[g].
  double cov = 0.0;
  for (std::size_t i = 0; i < tilted.size(); ++i) {
    cov += tilted[i] * (f[i] - mean_f) * (g[i] - mean_g);
  }
  return cov;
}

double kullback_action(const MeasureVec& nu, const MeasureVec& mu) {
  require_same_size(nu.size(), mu.size(), "kullback_action");
  if (!nu.is_probability(kEmpiricalTolerance)) {
    throw DomainError("kullback_action: nu must be a probability measure");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < nu.size(); ++i) {
    if (nu[i] <= kZeroWeight) continue;
    if (mu[i] <= kZeroWeight) return kPlusInfinity;
    sum += nu[i] * std::log(nu[i] / mu[i]);
  }
  return sum;
}

double kullback_action_functional(const FuncVec& nu, const MeasureVec& mu) {
  require_same_size(nu.size(), mu.size(), "kullback_action_functional");
  double total = 0.0;
  for (double v : nu.values()) {
    if (v < 0.0) return kPlusInfinity;
    total += v;
  }
  if (std::abs(total - 1.0) > kEmpiricalTolerance) return kPlusInfinity;
  return kullback_action(MeasureVec(std::vector<double>(nu.values().begin(), nu.values().end())),
                         mu);
}

double shannon_entropy(const MeasureVec& nu) {
  if (!nu.is_probability(kEmpiricalTolerance)) {
    throw DomainError("shannon_entropy: nu must be a probability measure");
  }
  double h = 0.0;
  for (double p : nu.weights()) {
    if (p > kZeroWeight) h -= p * std::log(p);
  }
  return h;
}

FuncVec log_likelihood_ratio(const MeasureVec& nu, const MeasureVec& mu) {
  require_same_size(nu.size(), mu.size(), "log_likelihood_ratio");
  std::vector<double> psi(nu.size(), kOffSupportTilt);
  for (std::size_t i = 0; i < nu.size(); ++i) {
    if (nu[i] > kZeroWeight) {
      if (mu[i] <= kZeroWeight) throw DomainError("log_likelihood_ratio: nu is singular w.r.t. mu");
      psi[i] = std::log(nu[i] / mu[i]);
    }
  }
  return FuncVec(std::move(psi));
}

double legendre_sup_estimate(const MeasureVec& nu, const MeasureVec& mu, const LegendreSearch& search) {
  require_same_size(nu.size(), mu.size(), "legendre_sup_estimate");
  if (!nu.is_probability(kEmpiricalTolerance)) {
    throw DomainError("legendre_sup_estimate: nu must be a probability measure");
  }
  const FuncVec anchor = log_likelihood_ratio(nu, mu);

  // Coordinates on the support of nu are optimized; one of them is the gauge.
  std::vector<std::size_t> free;
  for (std::size_t i = 0; i < nu.size(); ++i) {
    if (nu[i] > kZeroWeight) free.push_back(i);
  }
  const std::size_t gauge = free.front();
  free.erase(free.begin());

  std::mt19937_64 rng(search.seed);
  std::normal_distribution<double> jitter(0.0, search.perturbation_scale);
  std::uniform_real_distribution<double> spread(-3.0, 3.0);

  const std::vector<double> base(anchor.values().begin(), anchor.values().end());
  double best = newton_ascent(nu, mu, base, free, search.newton_iterations);
  for (std::size_t k = 0; k < search.perturbations; ++k) {
    auto start = base;
    for (auto i : free) start[i] += jitter(rng);
    best = std::max(best, newton_ascent(nu, mu, start, free, search.newton_iterations));
  }
  for (std::size_t k = 0; k < search.random_starts; ++k) {
    auto start = base;
    start[gauge] = 0.0;
    for (auto i : free) start[i] = spread(rng);
    best = std::max(best, newton_ascent(nu, mu, start, free, search.newton_iterations));
  }
  return best;
}

double young_gap(const MeasureVec& nu, const MeasureVec& mu, const FuncVec& psi) {
  const double rho = kullback_action(nu, mu);
  if (is_plus_infinity(rho)) throw DomainError("young_gap: Kullback action is infinite");
  return rho - (integrate(nu, psi) - spectral_potential(psi, mu));
}

}  // namespace cbranch
