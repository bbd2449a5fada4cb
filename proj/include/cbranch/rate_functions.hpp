#pragma once

#include <cstdint>
#include <limits>

#include "cbranch/measures.hpp"

namespace cbranch {

/// Extended reals are plain doubles; +infinity is a legitimate value of the
/// Kullback action (singular or non-probability arguments), not an error.
inline constexpr double kPlusInfinity = std::numeric_limits<double>::infinity();
inline bool is_plus_infinity(double x) { return x == kPlusInfinity; }

/// mu_phi together with the potential that normalizes it:
/// tilted(i) = base(i) * exp(tilt(i) - value).
struct TiltedFamily {
  MeasureVec base;
  FuncVec tilt;
  double value;
  MeasureVec tilted;
};

/// ln mu[e^phi], evaluated with a max shift so large tilts do not overflow.
double spectral_potential(const FuncVec& phi, const MeasureVec& mu);

TiltedFamily tilted_measure(const FuncVec& phi, const MeasureVec& mu);

/// Gradient of the spectral potential in phi; equals the tilted measure.
MeasureVec potential_gradient(const FuncVec& phi, const MeasureVec& mu);

/// Second derivative of the spectral potential: the covariance of f and g
/// under mu_phi.
double potential_hessian_quadform(const FuncVec& phi, const MeasureVec& mu, const FuncVec& f,
                                  const FuncVec& g);

/// sum nu(i) ln(nu(i)/mu(i)) over the support of nu, with 0 ln 0 = 0.
/// Returns +infinity if nu charges a color that mu does not. nu must be a
/// probability measure; anything else is a DomainError.
double kullback_action(const MeasureVec& nu, const MeasureVec& mu);

/// The action on the whole dual space: an arbitrary linear functional nu
/// (given by its values on the colors) gets +infinity unless it is a
/// probability measure, in which case this agrees with kullback_action.
double kullback_action_functional(const FuncVec& nu, const MeasureVec& mu);

double shannon_entropy(const MeasureVec& nu);

struct LegendreSearch {
  std::size_t random_starts = 16;
  std::size_t perturbations = 16;
  double perturbation_scale = 0.5;
  std::size_t newton_iterations = 60;
  std::uint64_t seed = 0x5eed;
};

/// Numerically maximizes nu[psi] - lambda(psi, mu) over psi. Starts from
/// ln(nu/mu), perturbations of it and random restarts, each polished by a
/// damped Newton ascent. Throws DomainError if nu is singular w.r.t. mu.
double legendre_sup_estimate(const MeasureVec& nu, const MeasureVec& mu,
                             const LegendreSearch& search = {});

/// rho(nu, mu) - (nu[psi] - lambda(psi, mu)). Nonnegative, zero iff
/// nu == mu_psi. Throws DomainError if rho is infinite.
double young_gap(const MeasureVec& nu, const MeasureVec& mu, const FuncVec& psi);

/// ln(nu/mu) on the support of nu and a large negative value off it: the
/// maximizer of the Legendre objective (approached, when nu has zeros).
FuncVec log_likelihood_ratio(const MeasureVec& nu, const MeasureVec& mu);

}  // namespace cbranch
