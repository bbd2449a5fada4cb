#include <cmath>
#include <sstream>

#include "doctest.h"

#include "cbranch/colored_branching.hpp"
#include "cbranch/error.hpp"

using namespace cbranch;

namespace {

const ColorStructureLaw kFullBinary({{{1, 1}, 1.0}});
const ColorStructureLaw kTwoTwo({{{0, 0}, 0.25}, {{2, 2}, 0.75}});

// Independent oracle: lines at depth n with c1 children of color 1 under a
// deterministic structure (k1, k2), by the recursion on the last color.
std::vector<double> deterministic_counts(std::uint32_t k1, std::uint32_t k2, std::size_t n) {
  std::vector<double> dp{1.0};
  for (std::size_t d = 1; d <= n; ++d) {
    std::vector<double> next(d + 1, 0.0);
    for (std::size_t c1 = 0; c1 <= d; ++c1) {
      if (c1 >= 1) next[c1] += dp[c1 - 1] * k1;
      if (c1 < d) next[c1] += dp[c1] * k2;
    }
    dp = std::move(next);
  }
  return dp;
}

}  // namespace

TEST_CASE("color expectation") {
  const auto a = color_expectation(kFullBinary).mu;
  CHECK(a[0] == 1.0);
  CHECK(a[1] == 1.0);
  const auto b = color_expectation(ColorStructureLaw({{{2, 0}, 0.5}, {{0, 2}, 0.5}})).mu;
  CHECK(b[0] == 1.0);
  CHECK(b[1] == 1.0);
  const auto c = color_expectation(ColorStructureLaw({{{0, 0}, 0.25}, {{1, 2}, 0.75}})).mu;
  CHECK(c[0] == 0.75);
  CHECK(c[1] == 1.5);
  CHECK_THROWS_AS(ColorStructureLaw({{{1, 1}, 0.5}, {{1}, 0.5}}), DomainError);
  CHECK_THROWS_AS(ColorStructureLaw({{{1, 1}, 0.9}}), DomainError);
}

TEST_CASE("total offspring law merges structures by size") {
  const auto law = total_offspring_law(ColorStructureLaw({{{0, 0}, 0.25}, {{2, 0}, 0.25}, {{1, 1}, 0.5}}));
  REQUIRE(law.atoms().size() == 2);
  CHECK(law.atoms()[1].children == 2);
  CHECK(law.atoms()[1].probability == 0.75);
}

TEST_CASE("deterministic generations") {
  Rng rng(0);
  const auto h1 = step_generation(GenerationHistogram::root(2), kFullBinary, rng);
  CHECK(h1.depth() == 1);
  CHECK(h1.entries().at({1, 0}) == 1);
  CHECK(h1.entries().at({0, 1}) == 1);

  const ColorStructureLaw doubling({{{2, 0}, 1.0}});
  const auto hs = evolve_histograms(doubling, 20, rng);
  CHECK(hs[20].entries().size() == 1);
  CHECK(hs[20].entries().at({20, 0}) == (LineCount{1} << 20));
}

TEST_CASE("deterministic laws match the exact recursion") {
  Rng rng(0);
  for (auto [k1, k2] : {std::pair{1u, 1u}, {2u, 1u}, {3u, 2u}, {0u, 2u}}) {
    const ColorStructureLaw law({{{k1, k2}, 1.0}});
    const auto hs = evolve_histograms(law, 20, rng);
    for (std::size_t n = 1; n <= 20; ++n) {
      const auto oracle = deterministic_counts(k1, k2, n);
      for (std::uint32_t c1 = 0; c1 <= n; ++c1) {
        const ColorCounts key{c1, static_cast<std::uint32_t>(n - c1)};
        const auto it = hs[n].entries().find(key);
        const double got = it == hs[n].entries().end() ? 0.0 : to_double(it->second);
        CHECK(got == oracle[c1]);
      }
    }
  }
}

TEST_CASE("histogram mass is a Galton-Watson trajectory") {
  const std::size_t trials = 20000;
  const std::size_t depth = 8;
  std::vector<double> sum(depth + 1, 0.0), sum_sq(depth + 1, 0.0);
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng = make_stream(17, t);
    const auto hs = evolve_histograms(kTwoTwo, depth, rng);
    for (std::size_t n = 0; n <= depth; ++n) {
      const double z = to_double(hs[n].total());
      sum[n] += z;
      sum_sq[n] += z * z;
    }
  }
  for (std::size_t n = 1; n <= depth; ++n) {
    const double mean = sum[n] / trials;
    const double se = std::sqrt((sum_sq[n] / trials - mean * mean) / trials);
    CHECK(std::abs(mean - std::pow(3.0, n)) < 3 * se);
  }
}

TEST_CASE("expected line counts") {
  CHECK(expected_line_count({MeasureVec{1, 1}}, std::vector<std::uint32_t>{0, 1, 1, 0}) == 1.0);
  CHECK(expected_line_count({MeasureVec{1.5, 0.5}}, std::vector<std::uint32_t>{0, 1}) == 0.75);
  CHECK_THROWS_AS(expected_line_count({MeasureVec{1, 1}}, std::vector<std::uint32_t>{}), DomainError);
}

TEST_CASE("line counts by color word match mu^n(word)") {
  // Explicit trees give line identity, so the count of lines spelling a
  // given word can be read off directly.
  const ColorStructureLaw skewed({{{0, 0}, 0.2}, {{2, 1}, 0.5}, {{1, 0}, 0.3}});
  const auto mu = color_expectation(skewed);
  const std::size_t trials = 100000;
  for (const auto& law : {kTwoTwo, skewed}) {
    const auto expectation = color_expectation(law);
    const std::vector<std::vector<std::uint32_t>> words = {{0}, {1}, {0, 1}, {1, 1}, {0, 1, 0}, {1, 1, 0}};
    std::vector<double> sum(words.size(), 0.0), sum_sq(words.size(), 0.0);
    for (std::size_t t = 0; t < trials; ++t) {
      Rng rng = make_stream(23, t);
      const auto tree = simulate_explicit_tree(law, 3, rng);
      for (std::size_t w = 0; w < words.size(); ++w) {
        const auto [begin, end] = tree.generation(words[w].size());
        double count = 0.0;
        for (auto id = begin; id < end; ++id) count += tree.path_colors(id) == words[w];
        sum[w] += count;
        sum_sq[w] += count * count;
      }
    }
    for (std::size_t w = 0; w < words.size(); ++w) {
      const double mean = sum[w] / trials;
      const double se = std::sqrt((sum_sq[w] / trials - mean * mean) / trials);
      CHECK(std::abs(mean - expected_line_count(expectation, words[w])) < 3 * se + 1e-12);
    }
  }
  CHECK(mu.mu[0] == doctest::Approx(1.3));
}

TEST_CASE("depth-one total has mean m") {
  const std::size_t trials = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng = make_stream(5, t);
    const double z = to_double(step_generation(GenerationHistogram::root(2), kTwoTwo, rng).total());
    sum += z;
    sum_sq += z * z;
  }
  const double mean = sum / trials;
  const double se = std::sqrt((sum_sq / trials - mean * mean) / trials);
  CHECK(std::abs(mean - 3.0) < 3 * se);
}

TEST_CASE("spectra of keys") {
  const auto a = spectrum_of_key(std::vector<std::uint32_t>{5, 5}, 10);
  CHECK(a[0] == 0.5);
  const auto b = spectrum_of_key(std::vector<std::uint32_t>{10, 0}, 10);
  CHECK(b[0] == 1.0);
  const auto c = spectrum_of_key(std::vector<std::uint32_t>{3, 7}, 10);
  CHECK(c[0] == 0.3);
  CHECK(c[1] == 0.7);
  CHECK_THROWS_AS(spectrum_of_key(std::vector<std::uint32_t>{0, 0}, 0), DomainError);
}

TEST_CASE("counting lines in neighborhoods") {
  Rng rng(0);
  const auto hs = evolve_histograms(kFullBinary, 10, rng);
  CHECK(count_lines_in_neighborhood(hs[10], TVNeighborhood(MeasureVec{0.5, 0.5}, 0.15)) == 672);
  CHECK(count_lines_in_neighborhood(hs[10], TVNeighborhood(MeasureVec{0.3, 0.7}, 1.0)) == 1024);
  CHECK(count_lines_in_neighborhood(GenerationHistogram(2, 10), TVNeighborhood(MeasureVec{0.5, 0.5}, 0.5)) == 0);

  LineCount prev = 0;
  for (double radius : {0.01, 0.05, 0.1, 0.2, 0.3, 0.5, 1.1}) {
    const auto c = count_lines_in_neighborhood(hs[10], TVNeighborhood(MeasureVec{0.4, 0.6}, radius));
    CHECK(c >= prev);
    prev = c;
  }
}

TEST_CASE("Bernoulli lines") {
  const auto constant = sample_bernoulli_line(MeasureVec{1, 0}, 1000, 3);
  for (auto c : constant.colors) CHECK(c == 0);

  const MeasureVec nu{0.2, 0.5, 0.3};
  const auto line = sample_bernoulli_line(nu, 100000, 9);
  std::vector<std::uint32_t> counts(3, 0);
  for (auto c : line.colors) ++counts[c];
  CHECK(tv_distance(spectrum_of_key(counts, line.colors.size()), nu) < 0.01);
  CHECK(line.colors == sample_bernoulli_line(nu, 100000, 9).colors);

  const auto fair = sample_bernoulli_line(MeasureVec{0.5, 0.5}, 1000000, 1);
  double ones = 0;
  for (auto c : fair.colors) ones += (c == 0);
  CHECK(std::abs(ones / 1e6 - 0.5) < 0.002);
  CHECK_THROWS_AS(sample_bernoulli_line(MeasureVec{0.5, 0.6}, 10, 1), DomainError);
}

TEST_CASE("explicit trees agree with histograms") {
  Rng rng(4);
  const auto tree = simulate_explicit_tree(kFullBinary, 10, rng);
  CHECK(tree.size() == 2047);
  CHECK(tree.histogram(10).entries().at({5, 5}) == 252);
  const auto [begin, end] = tree.generation(10);
  CHECK(tree.path_colors(begin).size() == 10);
  CHECK(tree.ancestor_at_depth(begin, 0) == 0);

  Rng big(1);
  CHECK_THROWS_AS(simulate_explicit_tree(kFullBinary, 25, big, 1000), NumericGuard);
}

TEST_CASE("histogram CSV export") {
  GenerationHistogram h(2, 3);
  h.add({1, 2}, 5);
  h.add({3, 0}, LineCount{1} << 70);
  std::ostringstream out;
  write_histogram_csv(out, h);
  CHECK(out.str() == "c_1,c_2,count\n1,2,5\n3,0,1180591620717411303424\n");
  CHECK_THROWS_AS(h.add({1, 1}, 1), DomainError);
}
