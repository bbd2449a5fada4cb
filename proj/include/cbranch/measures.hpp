#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

namespace cbranch {

inline constexpr double kProbabilityTolerance = 1e-12;
inline constexpr double kEmpiricalTolerance = 1e-9;
/// Weights below this are treated as exact zeros by the entropy functionals.
inline constexpr double kZeroWeight = 1e-300;
/// Open balls exclude a thin band at the boundary so that spectra landing
/// exactly on the radius (c/n arithmetic) are classified consistently.
inline constexpr double kBoundaryBand = 1e-12;

/// The finite color set {1, ..., r}. Colors are stored zero-based.
class ColorAlphabet {
 public:
  explicit ColorAlphabet(std::size_t r);
  std::size_t size() const { return r_; }
  bool operator==(const ColorAlphabet&) const = default;

 private:
  std::size_t r_;
};

/// Real value per color. Also used for linear functionals via the pairing
/// nu[f] = sum_i nu(i) f(i).
class FuncVec {
 public:
  FuncVec() = default;
  explicit FuncVec(std::vector<double> values);
  FuncVec(std::initializer_list<double> values);
  static FuncVec constant(std::size_t r, double value);

  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }
  ColorAlphabet alphabet() const { return ColorAlphabet(values_.size()); }

 private:
  std::vector<double> values_;
};

/// Nonnegative weight per color: a finite measure on the alphabet.
class MeasureVec {
 public:
  MeasureVec() = default;
  explicit MeasureVec(std::vector<double> weights);
  MeasureVec(std::initializer_list<double> weights);
  static MeasureVec uniform(std::size_t r);
  static MeasureVec unit(std::size_t r);
  static MeasureVec point_mass(std::size_t r, std::size_t color);

  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  std::span<const double> weights() const { return weights_; }
  ColorAlphabet alphabet() const { return ColorAlphabet(weights_.size()); }

  double total_mass() const;
  bool is_probability(double tol = kProbabilityTolerance) const;

 private:
  std::vector<double> weights_;
};

/// Open total-variation ball {delta : (1/2) sum |delta - center| < radius}.
class TVNeighborhood {
 public:
  TVNeighborhood(MeasureVec center, double radius);

  const MeasureVec& center() const { return center_; }
  double radius() const { return radius_; }

 private:
  MeasureVec center_;
  double radius_;
};

double integrate(const MeasureVec& m, const FuncVec& f);

/// Splits m into (probability, mass) with mass * probability == m.
std::pair<MeasureVec, double> normalize(const MeasureVec& m);

double tv_distance(const MeasureVec& a, const MeasureVec& b);
bool tv_contains(const TVNeighborhood& nbhd, const MeasureVec& delta);

/// Membership for the spectrum c/n of a color-count vector, evaluated as
/// (1/2) sum |c_i - n center_i| < n radius so no division is needed.
bool tv_contains_counts(const TVNeighborhood& nbhd, std::span<const std::uint32_t> counts);

void require_same_size(std::size_t a, std::size_t b, const char* what);

}  // namespace cbranch
