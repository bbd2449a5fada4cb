#include "cbranch/measures.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "cbranch/error.hpp"

namespace cbranch {

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DomainError(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                      " vs " + std::to_string(b) + ")");
  }
}

ColorAlphabet::ColorAlphabet(std::size_t r) : r_(r) {
  if (r == 0) throw DomainError("alphabet must contain at least one color");
}

FuncVec::FuncVec(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw DomainError("FuncVec: empty alphabet");
  for (double v : values_) {
    if (!std::isfinite(v)) throw DomainError("FuncVec: entries must be finite");
  }
}

FuncVec::FuncVec(std::initializer_list<double> values) : FuncVec(std::vector<double>(values)) {}

FuncVec FuncVec::constant(std::size_t r, double value) {
  return FuncVec(std::vector<double>(r, value));
}

MeasureVec::MeasureVec(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) throw DomainError("MeasureVec: empty alphabet");
  for (double w : weights_) {
    if (!std::isfinite(w) || w < 0.0) {
      throw DomainError("MeasureVec: weights must be finite and nonnegative");
    }
  }
}

MeasureVec::MeasureVec(std::initializer_list<double> weights)
    : MeasureVec(std::vector<double>(weights)) {}

MeasureVec MeasureVec::uniform(std::size_t r) {
  ColorAlphabet check(r);
  return MeasureVec(std::vector<double>(r, 1.0 / static_cast<double>(r)));
}

MeasureVec MeasureVec::unit(std::size_t r) {
  ColorAlphabet check(r);
  return MeasureVec(std::vector<double>(r, 1.0));
}

MeasureVec MeasureVec::point_mass(std::size_t r, std::size_t color) {
  if (color >= r) throw DomainError("point_mass: color out of range");
  std::vector<double> w(r, 0.0);
  w[color] = 1.0;
  return MeasureVec(std::move(w));
}

double MeasureVec::total_mass() const {
  return std::accumulate(weights_.begin(), weights_.end(), 0.0);
}

bool MeasureVec::is_probability(double tol) const {
  return std::abs(total_mass() - 1.0) <= tol;
}

TVNeighborhood::TVNeighborhood(MeasureVec center, double radius)
    : center_(std::move(center)), radius_(radius) {
  if (!(radius_ > 0.0)) throw DomainError("TVNeighborhood: radius must be positive");
  if (!center_.is_probability(kEmpiricalTolerance)) {
    throw DomainError("TVNeighborhood: center must be a probability measure");
  }
}

double integrate(const MeasureVec& m, const FuncVec& f) {
  require_same_size(m.size(), f.size(), "integrate");
  double sum = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) sum += m[i] * f[i];
  return sum;
}

std::pair<MeasureVec, double> normalize(const MeasureVec& m) {
  const double mass = m.total_mass();
  if (!(mass > 0.0)) throw DomainError("normalize: zero total mass");
  std::vector<double> p(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) p[i] = m[i] / mass;
  return {MeasureVec(std::move(p)), mass};
}

double tv_distance(const MeasureVec& a, const MeasureVec& b) {
  require_same_size(a.size(), b.size(), "tv_distance");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
  return 0.5 * sum;
}

bool tv_contains(const TVNeighborhood& nbhd, const MeasureVec& delta) {
  return tv_distance(delta, nbhd.center()) + kBoundaryBand < nbhd.radius();
}

bool tv_contains_counts(const TVNeighborhood& nbhd, std::span<const std::uint32_t> counts) {
  require_same_size(counts.size(), nbhd.center().size(), "tv_contains_counts");
  double n = 0.0;
  for (auto c : counts) n += c;
  if (n == 0.0) throw DomainError("tv_contains_counts: empty word has no spectrum");
  double sum = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    sum += std::abs(static_cast<double>(counts[i]) - n * nbhd.center()[i]);
  }
  return 0.5 * sum + kBoundaryBand * n < n * nbhd.radius();
}

}  // namespace cbranch
