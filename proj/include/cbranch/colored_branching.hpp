#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cbranch/galton_watson.hpp"
#include "cbranch/measures.hpp"
#include "cbranch/rng.hpp"

namespace cbranch {

/// Number of genetic lines; exceeds 64 bits for supercritical laws at
/// moderate depth (3^40 > 2^63).
using LineCount = unsigned __int128;

std::string to_string(LineCount value);
inline double to_double(LineCount value) { return static_cast<double>(value); }

using ColorCounts = std::vector<std::uint32_t>;

/// Law of the colored offspring set of one individual: with probability p
/// it has k[i] children of color i. Independent of the parent's color.
class ColorStructureLaw {
 public:
  struct Atom {
    ColorCounts structure;
    double probability;
  };

  explicit ColorStructureLaw(std::vector<Atom> atoms);

  std::size_t colors() const { return atoms_.front().structure.size(); }
  const std::vector<Atom>& atoms() const { return atoms_; }
  std::vector<double> probabilities() const;

 private:
  std::vector<Atom> atoms_;
};

/// Expected number of children of each color.
struct ColorExpectation {
  MeasureVec mu;
};

ColorExpectation color_expectation(const ColorStructureLaw& law);

/// Law of the total number of children, which drives |X_n|.
OffspringCountLaw total_offspring_law(const ColorStructureLaw& law);

/// Lines at depth n grouped by their color-count vector c (|c| = n).
class GenerationHistogram {
 public:
  using Map = std::map<ColorCounts, LineCount>;

  /// The single empty line at depth 0.
  static GenerationHistogram root(std::size_t colors);
  GenerationHistogram(std::size_t colors, std::size_t depth) : colors_(colors), depth_(depth) {}

  std::size_t colors() const { return colors_; }
  std::size_t depth() const { return depth_; }
  const Map& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  LineCount total() const;

  void add(const ColorCounts& key, LineCount count);
  GenerationHistogram filtered(const TVNeighborhood& nbhd) const;

 private:
  std::size_t colors_;
  std::size_t depth_;
  Map entries_;
};

/// One more generation. For each key c, the lines counted there split over
/// the atoms of the law by an exact multinomial draw; an atom k chosen by
/// L lines contributes k[i] * L lines at c + e_i.
GenerationHistogram step_generation(const GenerationHistogram& h, const ColorStructureLaw& law,
                                    Rng& rng);

/// Histograms at depths 0..depth (index = depth). Stops growing once the
/// process is extinct but still returns depth + 1 (empty) entries.
std::vector<GenerationHistogram> evolve_histograms(const ColorStructureLaw& law, std::size_t depth,
                                                   Rng& rng);

MeasureVec spectrum_of_key(std::span<const std::uint32_t> counts, std::size_t depth);

LineCount count_lines_in_neighborhood(const GenerationHistogram& h, const TVNeighborhood& nbhd);

/// E #{x in X_n : colors(x) = word} = prod_t mu(word_t). Colors are zero-based.
double expected_line_count(const ColorExpectation& expectation,
                           std::span<const std::uint32_t> word);

struct SampledLine {
  std::vector<std::uint32_t> colors;
  std::string provenance;
};

/// i.i.d. colors with law nu (inverse-CDF on 53-bit uniforms).
SampledLine sample_bernoulli_line(const MeasureVec& nu, std::size_t length, std::uint64_t seed);

/// Draws an atom index of the law.
std::size_t sample_atom(const ColorStructureLaw& law, Rng& rng);

/// CSV with columns c_1,...,c_r,count.
void write_histogram_csv(std::ostream& out, const GenerationHistogram& h);

/// Genealogical tree with line identity, stored generation by generation.
/// The children of a node are contiguous. Node 0 is the uncolored root.
class ExplicitTree {
 public:
  static constexpr std::uint32_t kNoColor = UINT32_MAX;

  struct Node {
    std::uint32_t parent;
    std::uint32_t color;
    std::uint32_t depth;
    std::uint32_t first_child;
    std::uint32_t child_count;
  };

  explicit ExplicitTree(std::size_t colors);

  std::size_t colors() const { return colors_; }
  std::size_t size() const { return nodes_.size(); }
  std::size_t depth() const { return generation_start_.size() - 2; }
  const Node& node(std::uint32_t id) const { return nodes_[id]; }
  std::span<const Node> nodes() const { return nodes_; }

  /// Node ids of generation d (contiguous range).
  std::pair<std::uint32_t, std::uint32_t> generation(std::size_t d) const;

  /// Appends a generation; children[i] lists the colors of the children of
  /// the i-th node of the current last generation.
  void append_generation(const std::vector<std::vector<std::uint32_t>>& children);

  /// Colors from just below `ancestor` down to `id`, in order.
  std::vector<std::uint32_t> path_colors(std::uint32_t id, std::uint32_t ancestor = 0) const;
  std::uint32_t ancestor_at_depth(std::uint32_t id, std::size_t depth) const;

  /// Aggregates the lines at depth d by color counts.
  GenerationHistogram histogram(std::size_t d) const;

 private:
  std::size_t colors_;
  std::vector<Node> nodes_;
  std::vector<std::uint32_t> generation_start_;
};

inline constexpr std::size_t kDefaultPopulationCap = 1'000'000;

/// Simulates the process with line identity to `depth`. Throws NumericGuard
/// when the node count would exceed `population_cap`.
ExplicitTree simulate_explicit_tree(const ColorStructureLaw& law, std::size_t depth, Rng& rng,
                                    std::size_t population_cap = kDefaultPopulationCap);

}  // namespace cbranch
