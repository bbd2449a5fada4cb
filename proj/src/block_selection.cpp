#include "cbranch/block_selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cbranch/error.hpp"
#include "cbranch/galton_watson.hpp"
#include "cbranch/parallel.hpp"
#include "cbranch/rate_functions.hpp"
#include "cbranch/rng.hpp"

namespace cbranch {
namespace {

constexpr std::size_t kMaxSelectionDepth = 10'000;

using Range = std::pair<std::uint32_t, std::uint32_t>;

// Descendants of [lo, hi) one generation down. Children are stored in parent
// order, so they form a contiguous run of the next generation.
Range child_range(const ExplicitTree& tree, Range r, std::size_t depth) {
  const auto [begin, end] = tree.generation(depth + 1);
  const auto nodes = tree.nodes();
  auto first = begin, last = end;
  // partition points over parent ids
  std::uint32_t a = begin, b = end;
  while (a < b) {
    const std::uint32_t mid = a + (b - a) / 2;
    if (nodes[mid].parent < r.first) a = mid + 1; else b = mid;
  }
  first = a;
  b = end;
  while (a < b) {
    const std::uint32_t mid = a + (b - a) / 2;
    if (nodes[mid].parent < r.second) a = mid + 1; else b = mid;
  }
  last = a;
  return {first, last};
}

void check_inputs(std::size_t order, std::span<const TVNeighborhood> nbhds,
                  std::span<const std::size_t> thresholds) {
  if (order == 0) throw DomainError("block selection: order N must be positive");
  if (nbhds.empty()) throw DomainError("block selection: at least one neighborhood required");
  if (nbhds.size() > 64) throw DomainError("block selection: at most 64 neighborhoods supported");
  if (nbhds.size() != thresholds.size())
    throw DomainError("block selection: one threshold per neighborhood required");
  for (auto l : thresholds)
    if (l == 0) throw DomainError("block selection: thresholds must be at least 1");
}

std::uint64_t class_mask(std::span<const TVNeighborhood> nbhds, const ColorCounts& block) {
  std::uint64_t mask = 0;
  for (std::size_t i = 0; i < nbhds.size(); ++i)
    if (tv_contains_counts(nbhds[i], block)) mask |= std::uint64_t{1} << i;
  return mask;
}

ColorCounts block_counts(const ExplicitTree& tree, std::uint32_t node, std::size_t order) {
  ColorCounts counts(tree.colors(), 0);
  for (std::size_t s = 0; s < order; ++s) {
    ++counts[tree.node(node).color];
    node = tree.node(node).parent;
  }
  return counts;
}

}  // namespace

std::size_t BlockTree::member_count() const {
  std::size_t total = 0;
  for (const auto& l : levels_) total += l.size();
  return total;
}

bool BlockTree::contains(std::size_t k, std::uint32_t node) const {
  if (k >= levels_.size()) return false;
  const auto& l = levels_[k];
  return std::binary_search(l.begin(), l.end(), node,
                            [](const auto& x, const auto& y) {
                              if constexpr (std::is_same_v<std::decay_t<decltype(x)>, Member>)
                                return x.node < y;
                              else
                                return x < y.node;
                            });
}

BlockTree maximal_block_selection(const ExplicitTree& tree, std::size_t order,
                                  std::span<const TVNeighborhood> nbhds,
                                  std::span<const std::size_t> thresholds, std::uint32_t start) {
  check_inputs(order, nbhds, thresholds);
  if (start >= tree.size()) throw DomainError("block selection: start node out of range");
  for (const auto& nb : nbhds)
    if (nb.center().size() != tree.colors())
      throw DomainError("block selection: neighborhood dimension does not match the tree");
  const std::size_t depth0 = tree.node(start).depth;
  const std::size_t span = tree.depth() - depth0;
  if (span % order != 0)
    throw DomainError("block selection: depth " + std::to_string(span) +
                      " below the start node is not divisible by N = " + std::to_string(order));
  if (span > kMaxSelectionDepth)
    throw DomainError("block selection: depth exceeds the cap of " + std::to_string(kMaxSelectionDepth));
  const std::size_t n = span / order;

  // Level k is the contiguous range of descendants at depth depth0 + k*N.
  std::vector<Range> ranges(n + 1);
  ranges[0] = {start, start + 1};
  for (std::size_t k = 1; k <= n; ++k) {
    Range r = ranges[k - 1];
    for (std::size_t s = 0; s < order; ++s) r = child_range(tree, r, depth0 + (k - 1) * order + s);
    ranges[k] = r;
  }

  const std::size_t m = nbhds.size();
  std::vector<std::vector<std::uint64_t>> mask(n + 1);
  std::vector<std::vector<std::uint32_t>> parent(n + 1);
  std::vector<std::vector<ColorCounts>> blocks(n + 1);
  std::vector<std::vector<char>> alive(n + 1);
  alive[0] = {1};
  mask[0] = {0};
  parent[0] = {0};
  blocks[0] = {ColorCounts{}};
  for (std::size_t k = 1; k <= n; ++k) {
    const auto [lo, hi] = ranges[k];
    const std::size_t size = hi - lo;
    mask[k].resize(size);
    parent[k].resize(size);
    blocks[k].resize(size);
    alive[k].resize(size);
    for (std::uint32_t v = lo; v < hi; ++v) {
      const std::size_t j = v - lo;
      blocks[k][j] = block_counts(tree, v, order);
      mask[k][j] = class_mask(nbhds, blocks[k][j]);
      alive[k][j] = mask[k][j] != 0;
      std::uint32_t a = v;
      for (std::size_t s = 0; s < order; ++s) a = tree.node(a).parent;
      parent[k][j] = a - ranges[k - 1].first;
    }
  }

  // Backward: a level-k sequence keeps its place only if enough surviving
  // prolongations fall in every class.
  for (std::size_t k = n; k-- > 0;) {
    std::vector<std::size_t> counts(alive[k].size() * m, 0);
    for (std::size_t j = 0; j < alive[k + 1].size(); ++j) {
      if (!alive[k + 1][j]) continue;
      for (std::size_t i = 0; i < m; ++i)
        if (mask[k + 1][j] >> i & 1) ++counts[parent[k + 1][j] * m + i];
    }
    for (std::size_t j = 0; j < alive[k].size(); ++j) {
      for (std::size_t i = 0; i < m && alive[k][j]; ++i)
        if (counts[j * m + i] < thresholds[i]) alive[k][j] = 0;
    }
  }
  // Forward: drop sequences whose prefix was removed.
  for (std::size_t k = 1; k <= n; ++k)
    for (std::size_t j = 0; j < alive[k].size(); ++j)
      if (!alive[k - 1][parent[k][j]]) alive[k][j] = 0;

  BlockTree out(order, start);
  std::vector<std::uint32_t> renumber, previous;
  for (std::size_t k = 0; k <= n; ++k) {
    std::vector<BlockTree::Member> members;
    renumber.assign(alive[k].size(), 0);
    for (std::size_t j = 0; j < alive[k].size(); ++j) {
      if (!alive[k][j]) continue;
      renumber[j] = static_cast<std::uint32_t>(members.size());
      members.push_back({ranges[k].first + static_cast<std::uint32_t>(j),
                         k == 0 ? 0u : previous[parent[k][j]], std::move(blocks[k][j])});
    }
    out.push_level(std::move(members));
    previous.swap(renumber);
  }
  return out;
}

BlockTree maximal_block_selection(const ExplicitTree& tree, std::size_t order, const TVNeighborhood& nbhd,
                                  std::size_t threshold, std::uint32_t start) {
  const std::size_t l[1] = {threshold};
  return maximal_block_selection(tree, order, std::span<const TVNeighborhood>(&nbhd, 1), l, start);
}

bool is_valid_selection(const ExplicitTree& tree, const BlockTree& selection,
                        std::span<const TVNeighborhood> nbhds, std::span<const std::size_t> thresholds) {
  const std::size_t order = selection.order();
  const std::size_t m = nbhds.size();
  for (std::size_t k = 0; k < selection.levels(); ++k) {
    const auto& level = selection.level(k);
    if (k == 0 && level.size() > 1) return false;
    if (k == 0 && level.size() == 1 && level[0].node != selection.start()) return false;
    std::vector<std::size_t> counts(level.size() * m, 0);
    for (const auto& member : level) {
      if (k == 0) continue;
      const auto& prev = selection.level(k - 1);
      if (member.parent >= prev.size()) return false;
      std::uint32_t a = member.node;
      for (std::size_t s = 0; s < order; ++s) a = tree.node(a).parent;
      if (a != prev[member.parent].node) return false;
      if (block_counts(tree, member.node, order) != member.block) return false;
      if (class_mask(nbhds, member.block) == 0) return false;
    }
    if (k + 1 < selection.levels()) {
      for (const auto& child : selection.level(k + 1)) {
        if (child.parent >= level.size()) return false;
        const auto cm = class_mask(nbhds, child.block);
        for (std::size_t i = 0; i < m; ++i)
          if (cm >> i & 1) ++counts[child.parent * m + i];
      }
      for (std::size_t j = 0; j < level.size(); ++j)
        for (std::size_t i = 0; i < m; ++i)
          if (counts[j * m + i] < thresholds[i]) return false;
    }
  }
  return true;
}

std::vector<BlockTree> boosted_block_selection(const ExplicitTree& tree, std::size_t order,
                                               std::span<const TVNeighborhood> nbhds,
                                               std::span<const std::size_t> thresholds,
                                               std::size_t floor) {
  check_inputs(order, nbhds, thresholds);
  std::vector<BlockTree> out;
  for (std::size_t d = 0; d + order <= tree.depth(); ++d) {
    if ((tree.depth() - d) % order != 0) continue;
    const auto [begin, end] = tree.generation(d);
    if (end - begin < floor) continue;
    for (std::uint32_t v = begin; v < end; ++v)
      out.push_back(maximal_block_selection(tree, order, nbhds, thresholds, v));
    break;
  }
  return out;
}

SelectionRateReport selection_rate_check(const ExplicitTree& tree, std::size_t order, const MeasureVec& nu,
                                         const MeasureVec& mu, double radius, double eps) {
  if (!(eps > 0.0)) throw DomainError("selection_rate_check: eps must be positive");
  SelectionRateReport report;
  report.rho = kullback_action(nu, mu);
  report.hypothesis_holds = report.rho < 0.0;
  report.target_prolongations = std::exp(static_cast<double>(order) * (-report.rho - eps));
  const double ceil_l = std::ceil(report.target_prolongations);
  if (!(ceil_l < 1e18)) throw NumericGuard("selection_rate_check: prolongation threshold overflows");
  report.threshold = std::max<std::size_t>(1, static_cast<std::size_t>(ceil_l));
  const TVNeighborhood nbhd(nu, radius);
  const auto bt = maximal_block_selection(tree, order, nbhd, report.threshold);
  report.nonempty = !bt.empty();
  for (std::size_t k = 0; k < bt.levels(); ++k) report.level_sizes.push_back(bt.level(k).size());
  return report;
}

SelectionExperimentResult selection_experiment(const ColorStructureLaw& law, const MeasureVec& nu,
                                               const SelectionExperimentConfig& config) {
  if (config.trials == 0) throw DomainError("selection_experiment: trials must be positive");
  if (config.levels == 0) throw DomainError("selection_experiment: levels must be positive");
  const std::size_t depth = config.levels * config.order;
  if (depth > kMaxSelectionDepth) throw DomainError("selection_experiment: depth exceeds the cap");
  const MeasureVec mu = color_expectation(law).mu;
  SelectionExperimentResult result;
  result.trials = config.trials;
  result.rho = kullback_action(nu, mu);
  result.predicted_survival = 1.0 - extinction_probability(total_offspring_law(law)).probability;
  result.nonempty.assign(config.trials, 0);
  result.survived.assign(config.trials, 0);
  std::vector<char> refused(config.trials, 0);
  std::vector<std::size_t> thresholds(config.trials, 0);
  parallel_for(config.trials, config.threads, [&](std::size_t t) {
    Rng rng = make_stream(config.seed, t);
    try {
      const auto tree = simulate_explicit_tree(law, depth, rng, config.population_cap);
      const auto [begin, end] = tree.generation(depth);
      result.survived[t] = end > begin;
      const auto report = selection_rate_check(tree, config.order, nu, mu, config.radius, config.eps);
      result.nonempty[t] = report.nonempty;
      thresholds[t] = report.threshold;
    } catch (const NumericGuard&) {
      refused[t] = 1;
    }
  });
  std::size_t used = 0, nonempty = 0, survived = 0;
  for (std::size_t t = 0; t < config.trials; ++t) {
    if (refused[t]) {
      ++result.refused;
      continue;
    }
    ++used;
    nonempty += result.nonempty[t];
    survived += result.survived[t];
    result.threshold = thresholds[t];
  }
  if (used > 0) {
    result.nonempty_frequency = static_cast<double>(nonempty) / static_cast<double>(used);
    result.survival_frequency = static_cast<double>(survived) / static_cast<double>(used);
  }
  return result;
}

std::optional<std::size_t> smallest_nonempty_order(const ColorStructureLaw& law, const MeasureVec& nu,
                                                   double radius, double eps,
                                                   std::span<const std::size_t> orders, std::uint64_t seed,
                                                   std::size_t population_cap) {
  const MeasureVec mu = color_expectation(law).mu;
  std::vector<std::size_t> sorted(orders.begin(), orders.end());
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    Rng rng = make_stream(seed, i);
    try {
      const auto tree = simulate_explicit_tree(law, sorted[i], rng, population_cap);
      if (selection_rate_check(tree, sorted[i], nu, mu, radius, eps).nonempty) return sorted[i];
    } catch (const NumericGuard&) {
      // too large for explicit mode; try the next order
    }
  }
  return std::nullopt;
}

ChoiceLaw::ChoiceLaw(MeasureVec center, double half_width) : center_(std::move(center)), half_width_(half_width) {
  if (!center_.is_probability(kEmpiricalTolerance))
    throw DomainError("ChoiceLaw: center must be a probability measure");
  if (center_.size() < 2) throw DomainError("ChoiceLaw: at least two colors required");
  if (center_.size() > 7) throw DomainError("ChoiceLaw: at most 7 colors supported");
  if (!(half_width > 0.0) || !std::isfinite(half_width))
    throw DomainError("ChoiceLaw: half_width must be positive");
  for (std::size_t v = 0; v < vertex_count(); ++v) {
    const auto q = vertex(v);
    for (double w : q.weights())
      if (!(w > 0.0 && w < 1.0))
        throw DomainError("ChoiceLaw: cube vertex " + std::to_string(v) + " leaves the simplex interior");
  }
}

MeasureVec ChoiceLaw::vertex(std::size_t index) const {
  if (index >= vertex_count()) throw DomainError("ChoiceLaw: vertex index out of range");
  const auto c = center_.weights();
  std::vector<double> q(c.begin(), c.end());
  double last = 1.0;
  for (std::size_t j = 0; j + 1 < q.size(); ++j) {
    q[j] += (index >> j & 1) ? half_width_ : -half_width_;
    last -= q[j];
  }
  q.back() = last;
  return MeasureVec(std::move(q));
}

std::size_t ChoiceLaw::select(const MeasureVec& running_average) const {
  require_same_size(running_average.size(), center_.size(), "ChoiceLaw::select");
  std::size_t index = 0;
  for (std::size_t j = 0; j < free_coordinates(); ++j)
    if (running_average.weights()[j] - center_.weights()[j] < 0.0) index |= std::size_t{1} << j;
  return index;
}

std::vector<TVNeighborhood> ChoiceLaw::vertex_neighborhoods(double radius) const {
  std::vector<TVNeighborhood> out;
  for (std::size_t v = 0; v < vertex_count(); ++v) out.emplace_back(vertex(v), radius);
  return out;
}

double ChoiceLaw::deviation(const MeasureVec& running_average) const {
  require_same_size(running_average.size(), center_.size(), "ChoiceLaw::deviation");
  double worst = 0.0;
  for (std::size_t j = 0; j < free_coordinates(); ++j)
    worst = std::max(worst, std::abs(running_average.weights()[j] - center_.weights()[j]));
  return worst;
}

std::size_t choice_law_select(const MeasureVec& running_average, const ChoiceLaw& law) {
  return law.select(running_average);
}

namespace {

constexpr std::size_t kCandidatesPerBlock = 64;

struct Frame {
  std::size_t vertex;
  std::vector<std::vector<std::uint32_t>> candidates;  // block color words
  std::size_t next = 0;
};

// Simulates the depth-N subtree of a fresh individual and keeps (a random
// sample of) the blocks that land in the target neighborhood.
Frame expand(const ColorStructureLaw& law, std::size_t order, std::size_t vertex, const TVNeighborhood& target,
             Rng& rng, std::size_t cap) {
  Frame frame{vertex, {}, 0};
  const auto tree = simulate_explicit_tree(law, order, rng, cap);
  const auto [begin, end] = tree.generation(order);
  std::vector<std::uint32_t> hits;
  for (std::uint32_t v = begin; v < end; ++v)
    if (tv_contains_counts(target, block_counts(tree, v, order))) hits.push_back(v);
  std::shuffle(hits.begin(), hits.end(), rng);
  if (hits.size() > kCandidatesPerBlock) hits.resize(kCandidatesPerBlock);
  for (auto v : hits) frame.candidates.push_back(tree.path_colors(v));
  return frame;
}

}  // namespace

SteeredLine steered_line_sampler(const ColorStructureLaw& law, const ChoiceLaw& choice,
                                 std::span<const TVNeighborhood> vertex_nbhds, const SteeringConfig& config) {
  if (config.order == 0 || config.blocks == 0)
    throw DomainError("steered_line_sampler: order and block count must be positive");
  if (config.order * config.blocks > kMaxSelectionDepth)
    throw DomainError("steered_line_sampler: depth " + std::to_string(config.order * config.blocks) +
                      " exceeds the explicit-tree cap of " + std::to_string(kMaxSelectionDepth));
  if (vertex_nbhds.size() != choice.vertex_count())
    throw DomainError("steered_line_sampler: one neighborhood per cube vertex required");
  require_same_size(law.colors(), choice.center().size(), "steered_line_sampler");

  const std::size_t r = law.colors();
  const double order = static_cast<double>(config.order);
  Rng rng = make_stream(config.seed, 0);
  SteeredLine out;
  std::vector<Frame> stack;
  std::vector<double> sum(r, 0.0);  // color totals of chosen blocks

  auto running_average = [&](std::size_t blocks) {
    std::vector<double> avg(r);
    for (std::size_t i = 0; i < r; ++i) avg[i] = sum[i] / (order * static_cast<double>(blocks));
    return MeasureVec(std::move(avg));
  };
  auto push_frame = [&]() {
    const std::size_t vertex = stack.empty() ? choice.select(choice.center()) : choice.select(running_average(stack.size()));
    ++out.subtrees;
    stack.push_back(expand(law, config.order, vertex, vertex_nbhds[vertex], rng, config.population_cap));
  };
  auto apply = [&](const std::vector<std::uint32_t>& block, double sign) {
    for (auto c : block) sum[c] += sign;
  };

  push_frame();
  while (true) {
    Frame& top = stack.back();
    const std::size_t k = stack.size();  // block index being chosen (1-based)
    if (top.next > 0) apply(top.candidates[top.next - 1], -1.0);
    if (top.next >= top.candidates.size()) {
      stack.pop_back();
      if (stack.empty()) {
        out.failure = "selection empty: no admissible block below the root";
        return out;
      }
      ++out.backtracks;
      continue;
    }
    apply(top.candidates[top.next++], +1.0);
    if (k == config.blocks) break;
    if (out.subtrees >= config.max_subtrees) {
      out.failure = "subtree budget exhausted";
      return out;
    }
    push_frame();
  }

  out.ok = true;
  std::vector<double> partial(r, 0.0);
  out.line.colors.reserve(config.order * config.blocks);
  for (std::size_t k = 0; k < stack.size(); ++k) {
    const auto& block = stack[k].candidates[stack[k].next - 1];
    out.line.colors.insert(out.line.colors.end(), block.begin(), block.end());
    for (auto c : block) partial[c] += 1.0;
    std::vector<double> avg(r);
    for (std::size_t i = 0; i < r; ++i) avg[i] = partial[i] / (order * static_cast<double>(k + 1));
    MeasureVec delta(std::move(avg));
    out.chosen_vertices.push_back(stack[k].vertex);
    out.deviations.push_back(choice.deviation(delta));
    out.running_averages.push_back(std::move(delta));
  }
  out.line.provenance = "steered(seed=" + std::to_string(config.seed) + ",N=" + std::to_string(config.order) +
                        ",blocks=" + std::to_string(config.blocks) + ")";
  return out;
}

}  // namespace cbranch
