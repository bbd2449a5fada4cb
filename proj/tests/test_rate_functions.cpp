#include <cmath>
#include <random>

#include "doctest.h"

#include "cbranch/error.hpp"
#include "cbranch/rate_functions.hpp"

using namespace cbranch;

namespace {

std::vector<double> random_positive(std::mt19937_64& rng, std::size_t r, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(r);
  for (auto& x : v) x = d(rng);
  return v;
}

MeasureVec random_probability(std::mt19937_64& rng, std::size_t r) {
  auto v = random_positive(rng, r, 0.05, 1.0);
  double s = 0;
  for (double x : v) s += x;
  for (auto& x : v) x /= s;
  return MeasureVec(v);
}

FuncVec shifted(const FuncVec& f, std::size_t i, double h) {
  std::vector<double> v(f.values().begin(), f.values().end());
  v[i] += h;
  return FuncVec(v);
}

}  // namespace

TEST_CASE("spectral potential values") {
  CHECK(spectral_potential(FuncVec{0, 0}, MeasureVec{0.5, 0.5}) == doctest::Approx(0.0));
  CHECK(spectral_potential(FuncVec{1.7, 1.7}, MeasureVec{0.5, 0.5}) ==
        doctest::Approx(1.7).epsilon(1e-14));
  CHECK(spectral_potential(FuncVec{0, 0}, MeasureVec{1.5, 1.5}) ==
        doctest::Approx(std::log(3.0)).epsilon(1e-14));
  CHECK_THROWS_AS(spectral_potential(FuncVec{0, 0}, MeasureVec{0, 0}), DomainError);
  // Large tilts do not overflow.
  CHECK(spectral_potential(FuncVec{800, 0}, MeasureVec{0.5, 0.5}) ==
        doctest::Approx(800 + std::log(0.5)));
}

TEST_CASE("tilted measures") {
  const MeasureVec mu{0.3, 0.7};
  const auto identity = tilted_measure(FuncVec{0, 0}, mu);
  CHECK(identity.tilted[0] == doctest::Approx(0.3));
  CHECK(identity.value == doctest::Approx(0.0));

  const auto t = tilted_measure(FuncVec{std::log(2.0), 0}, MeasureVec{0.5, 0.5});
  CHECK(t.tilted[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(t.tilted[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

  const auto u = tilted_measure(FuncVec{0, 0}, MeasureVec{2, 6});
  CHECK(u.tilted[0] == doctest::Approx(0.25));
  CHECK(u.tilted[1] == doctest::Approx(0.75));
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(u.tilted[i] == doctest::Approx(u.base[i] * std::exp(u.tilt[i] - u.value)));
  }
  CHECK(std::abs(u.tilted.total_mass() - 1.0) < 1e-12);
}

TEST_CASE("gradient and Hessian agree with finite differences") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> phi_dist(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t r = 2 + trial % 3;
    std::vector<double> pv(r);
    for (auto& x : pv) x = phi_dist(rng);
    const FuncVec phi(pv);
    const MeasureVec mu(random_positive(rng, r, 0.1, 2.0));

    const double h = 1e-5;
    const auto grad = potential_gradient(phi, mu);
    for (std::size_t i = 0; i < r; ++i) {
      const double fd = (spectral_potential(shifted(phi, i, h), mu) -
                         spectral_potential(shifted(phi, i, -h), mu)) / (2 * h);
      CHECK(std::abs(fd - grad[i]) < 1e-6);
    }

    const double k = 1e-4;
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < r; ++j) {
        const auto ei = FuncVec::constant(r, 0.0);
        const auto f = shifted(ei, i, 1.0);
        const auto g = shifted(ei, j, 1.0);
        const double fd = (spectral_potential(shifted(shifted(phi, i, k), j, k), mu) -
                           spectral_potential(shifted(shifted(phi, i, k), j, -k), mu) -
                           spectral_potential(shifted(shifted(phi, i, -k), j, k), mu) +
                           spectral_potential(shifted(shifted(phi, i, -k), j, -k), mu)) /
                          (4 * k * k);
        CHECK(std::abs(fd - potential_hessian_quadform(phi, mu, f, g)) < 1e-4);
      }
    }
  }
}

TEST_CASE("Hessian special values") {
  const MeasureVec mu{0.5, 0.5};
  CHECK(potential_hessian_quadform(FuncVec{0.3, -1}, mu, FuncVec{2, 2}, FuncVec{2, 2}) ==
        doctest::Approx(0.0));
  CHECK(potential_hessian_quadform(FuncVec{0, 0}, mu, FuncVec{1, 0}, FuncVec{1, 0}) ==
        doctest::Approx(0.25));
}

TEST_CASE("spectral potential is monotone, homogeneous and convex") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-3.0, 3.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t r = 2 + trial % 4;
    const MeasureVec mu(random_positive(rng, r, 0.01, 3.0));
    std::vector<double> a(r), b(r), up(r);
    for (std::size_t i = 0; i < r; ++i) {
      a[i] = d(rng);
      b[i] = d(rng);
      up[i] = a[i] + unit(rng);
    }
    const FuncVec phi(a), psi(b);
    CHECK(spectral_potential(FuncVec(up), mu) >= spectral_potential(phi, mu));

    const double t = d(rng);
    std::vector<double> at(a);
    for (auto& x : at) x += t;
    CHECK(std::abs(spectral_potential(FuncVec(at), mu) - spectral_potential(phi, mu) - t) < 1e-12);

    const double s = unit(rng);
    std::vector<double> mix(r);
    for (std::size_t i = 0; i < r; ++i) mix[i] = s * a[i] + (1 - s) * b[i];
    CHECK(spectral_potential(FuncVec(mix), mu) <=
          s * spectral_potential(phi, mu) + (1 - s) * spectral_potential(psi, mu) + 1e-12);
  }
}

TEST_CASE("Kullback action") {
  CHECK(kullback_action(MeasureVec{0.5, 0.5}, MeasureVec{0.5, 0.5}) == 0.0);
  CHECK(kullback_action(MeasureVec{1, 0}, MeasureVec{0.5, 0.5}) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(is_plus_infinity(kullback_action(MeasureVec{0.5, 0.5}, MeasureVec{0, 1})));
  CHECK_THROWS_AS(kullback_action(MeasureVec{0.5, 0.6}, MeasureVec{0.5, 0.5}), DomainError);

  // The functional form returns +infinity off the probability simplex,
  // including negative and non-normalized functionals.
  CHECK(is_plus_infinity(kullback_action_functional(FuncVec{-0.5, 1.5}, MeasureVec{1, 1})));
  CHECK(is_plus_infinity(kullback_action_functional(FuncVec{0.5, 0.6}, MeasureVec{1, 1})));
  CHECK(kullback_action_functional(FuncVec{1, 0}, MeasureVec{0.5, 0.5}) ==
        doctest::Approx(std::log(2.0)));
}

TEST_CASE("Kullback action properties") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> cdist(0.1, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t r = 2 + trial % 3;
    const auto nu = random_probability(rng, r);
    const auto mu1 = random_probability(rng, r);
    const double rho = kullback_action(nu, mu1);
    CHECK(rho >= 0.0);
    CHECK(kullback_action(mu1, mu1) == doctest::Approx(0.0));

    const double c = cdist(rng);
    std::vector<double> scaled(mu1.weights().begin(), mu1.weights().end());
    for (auto& x : scaled) x *= c;
    const MeasureVec mu(scaled);
    CHECK(std::abs(kullback_action(nu, mu) - (rho - std::log(c))) < 1e-12);
    CHECK(kullback_action(nu, mu) >= -std::log(mu.total_mass()) - 1e-12);
  }
}

TEST_CASE("Shannon entropy") {
  CHECK(shannon_entropy(MeasureVec{1, 0}) == 0.0);
  CHECK(shannon_entropy(MeasureVec{0.5, 0.5}) == doctest::Approx(std::log(2.0)));
  CHECK(shannon_entropy(MeasureVec{0.5, 0.5}) ==
        doctest::Approx(-kullback_action(MeasureVec{0.5, 0.5}, MeasureVec{1, 1})));
  CHECK_THROWS_AS(shannon_entropy(MeasureVec{0.5, 0.4}), DomainError);
}

TEST_CASE("Legendre supremum recovers the Kullback action") {
  CHECK(std::abs(legendre_sup_estimate(MeasureVec{0.3, 0.7}, MeasureVec{0.3, 0.7})) < 1e-12);
  const MeasureVec nu{0.25, 0.75}, mu{0.5, 0.5};
  CHECK(std::abs(legendre_sup_estimate(nu, mu) - kullback_action(nu, mu)) < 1e-8);
  const double negative = legendre_sup_estimate(MeasureVec{0.5, 0.5}, MeasureVec{1.5, 1.5});
  CHECK(std::abs(negative - std::log(1.0 / 3.0)) < 1e-8);
  CHECK(negative < 0.0);
  // Boundary nu: supremum approached, not attained.
  CHECK(std::abs(legendre_sup_estimate(MeasureVec{1, 0}, MeasureVec{0.5, 0.5}) - std::log(2.0)) <
        1e-8);
  CHECK_THROWS_AS(legendre_sup_estimate(MeasureVec{0.5, 0.5}, MeasureVec{0, 1}), DomainError);
}

TEST_CASE("Legendre objective grows along degenerate witness families") {
  // A non-normalized positive functional nu = (1,1) / 2 * 1.5: the objective
  // nu[t] - lambda(t, mu) = t (nu[1] - 1) grows without bound in t.
  const MeasureVec mu{0.5, 0.5};
  const FuncVec heavy{0.75, 0.75};
  double previous = -kPlusInfinity;
  for (double t : {1.0, 10.0, 100.0}) {
    const auto psi = FuncVec::constant(2, t);
    double paired = 0.0;
    for (std::size_t i = 0; i < 2; ++i) paired += heavy[i] * psi[i];
    const double value = paired - spectral_potential(psi, mu);
    CHECK(value > previous);
    previous = value;
  }
  CHECK(previous > 40.0);

  // A functional with a negative value: push psi to -infinity there.
  const FuncVec signed_functional{1.5, -0.5};
  previous = -kPlusInfinity;
  for (double t : {1.0, 10.0, 100.0}) {
    const FuncVec psi{0.0, -t};
    const double value = signed_functional[0] * psi[0] + signed_functional[1] * psi[1] -
                         spectral_potential(psi, mu);
    CHECK(value > previous);
    previous = value;
  }
  CHECK(previous > 40.0);
}

TEST_CASE("Young inequality gap") {
  const MeasureVec nu{0.2, 0.8}, mu{0.6, 0.9};
  CHECK(std::abs(young_gap(nu, mu, log_likelihood_ratio(nu, mu))) < 1e-10);
  CHECK(std::abs(young_gap(MeasureVec{0.5, 0.5}, MeasureVec{0.5, 0.5}, FuncVec{0, 0})) < 1e-15);
  const double expected = 0.0 - (0.5 - std::log((std::exp(1.0) + 1.0) / 2.0));
  CHECK(young_gap(MeasureVec{0.5, 0.5}, MeasureVec{0.5, 0.5}, FuncVec{1, 0}) ==
        doctest::Approx(expected).epsilon(1e-14));
  CHECK(expected > 0.0);
  CHECK_THROWS_AS(young_gap(MeasureVec{0.5, 0.5}, MeasureVec{0, 1}, FuncVec{0, 0}), DomainError);

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> d(-4, 4);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t r = 2 + trial % 3;
    const auto n = random_probability(rng, r);
    const MeasureVec m(random_positive(rng, r, 0.1, 3.0));
    std::vector<double> psi(r);
    for (auto& x : psi) x = d(rng);
    CHECK(young_gap(n, m, FuncVec(psi)) >= -1e-12);
  }
}
