#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cbranch/colored_branching.hpp"
#include "cbranch/measures.hpp"

namespace cbranch {

/// A prolongation-closed family of block sequences cut from an explicit
/// tree. Level k holds the sequences (y_1, ..., y_k), each identified by the
/// tree node that ends it; level 0 is the empty sequence at the start node.
class BlockTree {
 public:
  struct Member {
    std::uint32_t node;
    /// Index of the prefix sequence in the previous level (unused at level 0).
    std::uint32_t parent;
    /// Color counts of the last block (empty at level 0).
    ColorCounts block;
  };

  BlockTree(std::size_t order, std::uint32_t start) : order_(order), start_(start) {}

  std::size_t order() const { return order_; }
  std::uint32_t start() const { return start_; }
  std::size_t levels() const { return levels_.size(); }
  const std::vector<Member>& level(std::size_t k) const { return levels_[k]; }
  bool empty() const { return levels_.empty() || levels_.front().empty(); }
  std::size_t member_count() const;
  bool contains(std::size_t k, std::uint32_t node) const;

  void push_level(std::vector<Member> members) { levels_.push_back(std::move(members)); }

 private:
  std::size_t order_;
  std::uint32_t start_;
  std::vector<std::vector<Member>> levels_;
};

/// The maximal selection of order N inside `tree` below `start`: every block
/// has spectrum in one of `nbhds`, and every sequence below the last level
/// has at least thresholds[i] prolongations whose last block lies in
/// nbhds[i], for each i. A single measure is the one-neighborhood case.
/// The depth of the tree below `start` must be a positive multiple of N.
BlockTree maximal_block_selection(const ExplicitTree& tree, std::size_t order,
                                  std::span<const TVNeighborhood> nbhds,
                                  std::span<const std::size_t> thresholds, std::uint32_t start = 0);

BlockTree maximal_block_selection(const ExplicitTree& tree, std::size_t order,
                                  const TVNeighborhood& nbhd, std::size_t threshold,
                                  std::uint32_t start = 0);

/// True if no sequence violates the block or prolongation constraints.
bool is_valid_selection(const ExplicitTree& tree, const BlockTree& selection,
                        std::span<const TVNeighborhood> nbhds, std::span<const std::size_t> thresholds);

/// Runs the selection from every node of the first generation that has at
/// least `floor` members and leaves a positive multiple of N below it.
/// Returns one selection per ancestor, or nothing if no generation qualifies.
std::vector<BlockTree> boosted_block_selection(const ExplicitTree& tree, std::size_t order,
                                               std::span<const TVNeighborhood> nbhds,
                                               std::span<const std::size_t> thresholds,
                                               std::size_t floor);

struct SelectionRateReport {
  double rho = 0.0;
  bool hypothesis_holds = false;  // rho(nu, mu) < 0
  double target_prolongations = 0.0;  // l(N) = exp(N(-rho - eps))
  std::size_t threshold = 0;          // max(1, ceil(l(N)))
  bool nonempty = false;
  std::vector<std::size_t> level_sizes;
};

SelectionRateReport selection_rate_check(const ExplicitTree& tree, std::size_t order,
                                         const MeasureVec& nu, const MeasureVec& mu, double radius,
                                         double eps);

struct SelectionExperimentConfig {
  std::size_t order = 8;
  std::size_t levels = 1;
  double radius = 0.2;
  double eps = 0.5;
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::size_t population_cap = kDefaultPopulationCap;
};

struct SelectionExperimentResult {
  double rho = 0.0;
  std::size_t threshold = 0;
  std::size_t trials = 0;
  std::size_t refused = 0;  // population cap exceeded
  double nonempty_frequency = 0.0;
  /// Fraction of (non-refused) trials alive at depth levels * N.
  double survival_frequency = 0.0;
  double predicted_survival = 0.0;  // 1 - q*
  std::vector<char> nonempty;
  std::vector<char> survived;
};

SelectionExperimentResult selection_experiment(const ColorStructureLaw& law, const MeasureVec& nu,
                                               const SelectionExperimentConfig& config);

/// Smallest order among `orders` whose one-level selection is nonempty for
/// this trial; orders whose tree exceeds the cap are skipped.
std::optional<std::size_t> smallest_nonempty_order(const ColorStructureLaw& law, const MeasureVec& nu,
                                                   double radius, double eps,
                                                   std::span<const std::size_t> orders, std::uint64_t seed,
                                                   std::size_t population_cap = kDefaultPopulationCap);

/// Steering rule for running block averages: vertices of a cube centered at
/// `center` with edges along the first r-1 coordinates (the last coordinate
/// is fixed by normalization). Vertex index bit j set means +half_width on
/// coordinate j. Index 0 is the all-low vertex chosen at the center itself.
class ChoiceLaw {
 public:
  ChoiceLaw(MeasureVec center, double half_width);

  const MeasureVec& center() const { return center_; }
  double half_width() const { return half_width_; }
  std::size_t free_coordinates() const { return center_.size() - 1; }
  std::size_t vertex_count() const { return std::size_t{1} << free_coordinates(); }
  MeasureVec vertex(std::size_t index) const;

  /// Per coordinate: deviation >= 0 picks the low side, < 0 the high side.
  std::size_t select(const MeasureVec& running_average) const;

  /// TV balls of the given radius (at most half_width) around each vertex.
  std::vector<TVNeighborhood> vertex_neighborhoods(double radius) const;

  /// max_j |average_j - center_j| over the free coordinates.
  double deviation(const MeasureVec& running_average) const;

 private:
  MeasureVec center_;
  double half_width_;
};

std::size_t choice_law_select(const MeasureVec& running_average, const ChoiceLaw& law);

struct SteeringConfig {
  std::size_t order = 8;
  std::size_t blocks = 400;
  std::uint64_t seed = 0;
  /// Subtree generations allowed before giving up.
  std::size_t max_subtrees = 200000;
  std::size_t population_cap = kDefaultPopulationCap;
};

struct SteeredLine {
  SampledLine line;
  bool ok = false;
  std::string failure;
  /// Delta_n after each block n = 1..blocks.
  std::vector<MeasureVec> running_averages;
  std::vector<std::size_t> chosen_vertices;
  std::vector<double> deviations;
  std::size_t subtrees = 0;
  std::size_t backtracks = 0;
};

/// Grows one genetic line block by block. At each step the depth-N subtree
/// below the current endpoint is simulated and a descendant whose block
/// spectrum lies in the neighborhood of the vertex picked by the choice law
/// is taken; dead ends (no qualifying block, or an extinct continuation)
/// backtrack to the next candidate of the previous block.
SteeredLine steered_line_sampler(const ColorStructureLaw& law, const ChoiceLaw& choice,
                                 std::span<const TVNeighborhood> vertex_nbhds,
                                 const SteeringConfig& config);

}  // namespace cbranch
