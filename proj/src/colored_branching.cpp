#include "cbranch/colored_branching.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "cbranch/error.hpp"

namespace cbranch {
namespace {

constexpr LineCount kLineCountLimit = LineCount{1} << 126;

LineCount checked_add(LineCount a, LineCount b) {
  if (a > kLineCountLimit - b) {
    throw NumericGuard("line count exceeds 2^126; reduce the depth");
  }
  return a + b;
}

LineCount checked_mul(LineCount a, std::uint32_t k) {
  if (k != 0 && a > kLineCountLimit / k) {
    throw NumericGuard("line count exceeds 2^126; reduce the depth");
  }
  return a * k;
}

}  // namespace

std::string to_string(LineCount value) {
  if (value == 0) return "0";
  std::string digits;
  while (value > 0) {
    digits.push_back(static_cast<char>('0' + static_cast<int>(value % 10)));
    value /= 10;
  }
  std::reverse(digits.begin(), digits.end());
  return digits;
}

ColorStructureLaw::ColorStructureLaw(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
  if (atoms_.empty()) throw DomainError("color structure law: no atoms");
  const std::size_t r = atoms_.front().structure.size();
  if (r == 0) throw DomainError("color structure law: empty color structure");
  double total = 0.0;
  for (const auto& a : atoms_) {
    require_same_size(a.structure.size(), r, "color structure law");
    if (!(a.probability >= 0.0)) throw DomainError("color structure law: negative probability");
    total += a.probability;
  }
  if (std::abs(total - 1.0) > kProbabilityTolerance) {
    throw DomainError("color structure law: probabilities sum to " + std::to_string(total));
  }
}

std::vector<double> ColorStructureLaw::probabilities() const {
  std::vector<double> p;
  p.reserve(atoms_.size());
  for (const auto& a : atoms_) p.push_back(a.probability);
  return p;
}

ColorExpectation color_expectation(const ColorStructureLaw& law) {
  std::vector<double> mu(law.colors(), 0.0);
  for (const auto& a : law.atoms()) {
    for (std::size_t i = 0; i < mu.size(); ++i) mu[i] += a.structure[i] * a.probability;
  }
  return {MeasureVec(std::move(mu))};
}

OffspringCountLaw total_offspring_law(const ColorStructureLaw& law) {
  std::map<std::uint32_t, double> merged;
  for (const auto& a : law.atoms()) {
    std::uint32_t total = 0;
    for (auto k : a.structure) total += k;
    merged[total] += a.probability;
  }
  std::vector<OffspringCountLaw::Atom> atoms;
  for (const auto& [k, p] : merged) atoms.push_back({k, p});
  return OffspringCountLaw(std::move(atoms));
}

GenerationHistogram GenerationHistogram::root(std::size_t colors) {
  GenerationHistogram h(colors, 0);
  h.entries_.emplace(ColorCounts(colors, 0), 1);
  return h;
}

LineCount GenerationHistogram::total() const {
  LineCount sum = 0;
  for (const auto& [key, count] : entries_) sum = checked_add(sum, count);
  return sum;
}

void GenerationHistogram::add(const ColorCounts& key, LineCount count) {
  require_same_size(key.size(), colors_, "GenerationHistogram::add");
  std::size_t n = 0;
  for (auto c : key) n += c;
  if (n != depth_) throw DomainError("GenerationHistogram::add: key length differs from depth");
  if (count == 0) return;
  auto [it, inserted] = entries_.try_emplace(key, 0);
  it->second = checked_add(it->second, count);
}

GenerationHistogram GenerationHistogram::filtered(const TVNeighborhood& nbhd) const {
  GenerationHistogram out(colors_, depth_);
  for (const auto& [key, count] : entries_) {
    if (tv_contains_counts(nbhd, key)) out.entries_.emplace(key, count);
  }
  return out;
}

GenerationHistogram step_generation(const GenerationHistogram& h, const ColorStructureLaw& law,
                                    Rng& rng) {
  require_same_size(h.colors(), law.colors(), "step_generation");
  const auto probs = law.probabilities();
  GenerationHistogram next(h.colors(), h.depth() + 1);
  for (const auto& [key, count] : h.entries()) {
    const auto split = sample_multinomial_wide(rng, count, probs);
    for (std::size_t j = 0; j < split.size(); ++j) {
      if (split[j] == 0) continue;
      const auto& structure = law.atoms()[j].structure;
      for (std::size_t i = 0; i < structure.size(); ++i) {
        if (structure[i] == 0) continue;
        ColorCounts child = key;
        ++child[i];
        next.add(child, checked_mul(split[j], structure[i]));
      }
    }
  }
  return next;
}

std::vector<GenerationHistogram> evolve_histograms(const ColorStructureLaw& law, std::size_t depth,
                                                   Rng& rng) {
  std::vector<GenerationHistogram> out;
  out.reserve(depth + 1);
  out.push_back(GenerationHistogram::root(law.colors()));
  for (std::size_t n = 0; n < depth; ++n) {
    out.push_back(step_generation(out.back(), law, rng));
  }
  return out;
}

MeasureVec spectrum_of_key(std::span<const std::uint32_t> counts, std::size_t depth) {
  if (depth == 0) throw DomainError("spectrum_of_key: depth must be positive");
  std::size_t n = 0;
  for (auto c : counts) n += c;
  if (n != depth) throw DomainError("spectrum_of_key: counts do not sum to the depth");
  std::vector<double> p(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    p[i] = static_cast<double>(counts[i]) / static_cast<double>(depth);
  }
  return MeasureVec(std::move(p));
}

LineCount count_lines_in_neighborhood(const GenerationHistogram& h, const TVNeighborhood& nbhd) {
  if (h.depth() == 0) return 0;
  LineCount sum = 0;
  for (const auto& [key, count] : h.entries()) {
    if (tv_contains_counts(nbhd, key)) sum = checked_add(sum, count);
  }
  return sum;
}

double expected_line_count(const ColorExpectation& expectation,
                           std::span<const std::uint32_t> word) {
  if (word.empty()) throw DomainError("expected_line_count: empty word");
  double product = 1.0;
  for (auto color : word) {
    if (color >= expectation.mu.size()) throw DomainError("expected_line_count: color out of range");
    product *= expectation.mu[color];
  }
  return product;
}

SampledLine sample_bernoulli_line(const MeasureVec& nu, std::size_t length, std::uint64_t seed) {
  if (!nu.is_probability(kEmpiricalTolerance)) {
    throw DomainError("sample_bernoulli_line: nu must be a probability measure");
  }
  std::vector<double> cdf(nu.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < nu.size(); ++i) cdf[i] = (acc += nu[i]);
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < nu.size(); ++i) {
    if (nu[i] > 0.0) last_positive = i;
  }

  Rng rng(seed);
  SampledLine line{{}, "bernoulli:seed=" + std::to_string(seed)};
  line.colors.reserve(length);
  for (std::size_t t = 0; t < length; ++t) {
    const double u = uniform01(rng) * acc;
    std::size_t color = std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
    line.colors.push_back(static_cast<std::uint32_t>(std::min(color, last_positive)));
  }
  return line;
}

std::size_t sample_atom(const ColorStructureLaw& law, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t j = 0; j < law.atoms().size(); ++j) {
    const double p = law.atoms()[j].probability;
    if (p <= 0.0) continue;
    last_positive = j;
    acc += p;
    if (u < acc) return j;
  }
  return last_positive;
}

void write_histogram_csv(std::ostream& out, const GenerationHistogram& h) {
  for (std::size_t i = 0; i < h.colors(); ++i) out << "c_" << (i + 1) << ',';
  out << "count\n";
  for (const auto& [key, count] : h.entries()) {
    for (auto c : key) out << c << ',';
    out << to_string(count) << '\n';
  }
}

ExplicitTree::ExplicitTree(std::size_t colors) : colors_(colors) {
  ColorAlphabet check(colors);
  nodes_.push_back(Node{0, kNoColor, 0, 1, 0});
  generation_start_ = {0, 1};
}

std::pair<std::uint32_t, std::uint32_t> ExplicitTree::generation(std::size_t d) const {
  if (d > depth()) throw DomainError("ExplicitTree::generation: depth beyond the tree");
  return {generation_start_[d], generation_start_[d + 1]};
}

void ExplicitTree::append_generation(const std::vector<std::vector<std::uint32_t>>& children) {
  const auto [begin, end] = generation(depth());
  if (children.size() != end - begin) {
    throw DomainError("ExplicitTree::append_generation: one child list per node required");
  }
  const auto next_depth = static_cast<std::uint32_t>(depth() + 1);
  for (std::uint32_t id = begin; id < end; ++id) {
    nodes_[id].first_child = static_cast<std::uint32_t>(nodes_.size());
    nodes_[id].child_count = static_cast<std::uint32_t>(children[id - begin].size());
    for (auto color : children[id - begin]) {
      if (color >= colors_) throw DomainError("ExplicitTree: child color out of range");
      nodes_.push_back(Node{id, color, next_depth, 0, 0});
    }
  }
  generation_start_.push_back(static_cast<std::uint32_t>(nodes_.size()));
}

std::vector<std::uint32_t> ExplicitTree::path_colors(std::uint32_t id, std::uint32_t ancestor) const {
  std::vector<std::uint32_t> colors;
  while (id != ancestor) {
    if (id == 0) throw DomainError("ExplicitTree::path_colors: not an ancestor");
    colors.push_back(nodes_[id].color);
    id = nodes_[id].parent;
  }
  std::reverse(colors.begin(), colors.end());
  return colors;
}

std::uint32_t ExplicitTree::ancestor_at_depth(std::uint32_t id, std::size_t depth) const {
  if (nodes_[id].depth < depth) throw DomainError("ExplicitTree::ancestor_at_depth: too deep");
  while (nodes_[id].depth > depth) id = nodes_[id].parent;
  return id;
}

GenerationHistogram ExplicitTree::histogram(std::size_t d) const {
  GenerationHistogram h(colors_, d);
  const auto [begin, end] = generation(d);
  for (std::uint32_t id = begin; id < end; ++id) {
    ColorCounts key(colors_, 0);
    for (auto c : path_colors(id)) ++key[c];
    h.add(key, 1);
  }
  return h;
}

ExplicitTree simulate_explicit_tree(const ColorStructureLaw& law, std::size_t depth, Rng& rng,
                                    std::size_t population_cap) {
  ExplicitTree tree(law.colors());
  for (std::size_t d = 0; d < depth; ++d) {
    const auto [begin, end] = tree.generation(d);
    std::vector<std::vector<std::uint32_t>> children(end - begin);
    std::size_t added = 0;
    for (std::uint32_t id = begin; id < end; ++id) {
      const auto& structure = law.atoms()[sample_atom(law, rng)].structure;
      auto& list = children[id - begin];
      for (std::uint32_t color = 0; color < structure.size(); ++color) {
        list.insert(list.end(), structure[color], color);
      }
      added += list.size();
    }
    if (tree.size() + added > population_cap) {
      throw NumericGuard("explicit tree exceeds the population cap of " +
                         std::to_string(population_cap) + " nodes at depth " +
                         std::to_string(d + 1));
    }
    tree.append_generation(children);
  }
  return tree;
}

}  // namespace cbranch
