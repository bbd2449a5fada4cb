#include "cbranch/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "cbranch/block_selection.hpp"
#include "cbranch/error.hpp"
#include "cbranch/fractal_dimension.hpp"
#include "cbranch/mcmillan.hpp"
#include "cbranch/parallel.hpp"
#include "cbranch/rate_functions.hpp"
#include "cbranch/rng.hpp"

namespace cbranch {

using nlohmann::json;

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kRate: return "rate";
    case ExperimentKind::kLdp: return "ldp";
    case ExperimentKind::kMcMillan: return "mcmillan";
    case ExperimentKind::kDimension: return "dimension";
    case ExperimentKind::kBlock: return "block";
    case ExperimentKind::kGw: return "gw";
  }
  return "unknown";
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

namespace {

json num(double x) {
  if (!std::isfinite(x)) return format_number(x);
  return std::stod(format_number(x));
}

const std::set<std::string> kKnownFields = {
    "kind",  "seed",   "description", "offspring", "law",        "nu",          "mu",
    "theta", "filter", "radius",      "radii",     "depth",      "trials",      "eps",
    "order", "levels", "half_width",  "vertex_radius", "blocks", "steer_trials", "order_search"};

class Parser {
 public:
  Parser(const json& doc, std::vector<std::string>& violations) : doc_(doc), errs_(violations) {}

  bool has(const char* key) const { return doc_.contains(key); }

  void fail(const std::string& field, const std::string& what) {
    errs_.push_back("field '" + field + "': " + what);
  }

  std::optional<std::vector<double>> vector(const json& node, const std::string& field) {
    if (!node.is_array() || node.empty()) {
      fail(field, "expected a nonempty array of numbers");
      return std::nullopt;
    }
    std::vector<double> v;
    for (const auto& x : node) {
      if (!x.is_number()) {
        fail(field, "expected a nonempty array of numbers");
        return std::nullopt;
      }
      v.push_back(x.get<double>());
      if (!std::isfinite(v.back())) {
        fail(field, "entries must be finite");
        return std::nullopt;
      }
    }
    return v;
  }

  std::optional<MeasureVec> probability(const json& node, const std::string& field) {
    auto v = vector(node, field);
    if (!v) return std::nullopt;
    double sum = 0.0;
    for (double x : *v) {
      if (x < 0.0) {
        fail(field, "entries must be nonnegative");
        return std::nullopt;
      }
      sum += x;
    }
    if (std::abs(sum - 1.0) > kEmpiricalTolerance) {
      fail(field, "not a probability vector (entries sum to " + format_number(sum) + ")");
      return std::nullopt;
    }
    return MeasureVec(std::move(*v));
  }

  std::optional<MeasureVec> measure(const json& node, const std::string& field) {
    auto v = vector(node, field);
    if (!v) return std::nullopt;
    for (double x : *v)
      if (x < 0.0) {
        fail(field, "entries must be nonnegative");
        return std::nullopt;
      }
    return MeasureVec(std::move(*v));
  }

  std::optional<MeasureVec> theta(const json& node, const std::string& field) {
    auto v = vector(node, field);
    if (!v) return std::nullopt;
    bool ok = true;
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!((*v)[i] > 0.0 && (*v)[i] < 1.0)) {
        fail(field, "θ(i) ∈ (0,1) required (i = " + std::to_string(i + 1) + ", value " +
                        format_number((*v)[i]) + ")");
        ok = false;
      }
    }
    if (!ok) return std::nullopt;
    return MeasureVec(std::move(*v));
  }

  std::size_t count(const char* key, std::size_t fallback, std::size_t minimum = 1) {
    if (!has(key)) return fallback;
    const auto& x = doc_[key];
    if (!x.is_number_integer() || (x.is_number_integer() && x.get<long long>() < static_cast<long long>(minimum))) {
      fail(key, "expected an integer >= " + std::to_string(minimum));
      return fallback;
    }
    return x.get<std::size_t>();
  }

  double positive(const char* key, double fallback) {
    if (!has(key)) return fallback;
    const auto& x = doc_[key];
    if (!x.is_number() || !(x.get<double>() > 0.0) || !std::isfinite(x.get<double>())) {
      fail(key, "expected a positive number");
      return fallback;
    }
    return x.get<double>();
  }

  std::optional<ColorStructureLaw> law(const json& node) {
    if (!node.is_array() || node.empty()) {
      fail("law", "expected a nonempty array of {\"colors\": [...], \"p\": number}");
      return std::nullopt;
    }
    std::vector<ColorStructureLaw::Atom> atoms;
    double sum = 0.0;
    for (const auto& a : node) {
      if (!a.is_object() || !a.contains("colors") || !a.contains("p") || !a["p"].is_number() ||
          !a["colors"].is_array()) {
        fail("law", "each atom needs \"colors\" (array of counts) and \"p\" (number)");
        return std::nullopt;
      }
      ColorCounts c;
      for (const auto& k : a["colors"]) {
        if (!k.is_number_unsigned()) {
          fail("law", "color counts must be nonnegative integers");
          return std::nullopt;
        }
        c.push_back(k.get<std::uint32_t>());
      }
      const double p = a["p"].get<double>();
      if (!(p >= 0.0)) {
        fail("law", "probabilities must be nonnegative");
        return std::nullopt;
      }
      if (!atoms.empty() && c.size() != atoms.front().structure.size()) {
        fail("law", "dimension mismatch: atoms list different numbers of colors");
        return std::nullopt;
      }
      sum += p;
      atoms.push_back({std::move(c), p});
    }
    if (std::abs(sum - 1.0) > kProbabilityTolerance) {
      fail("law", "probabilities sum to " + format_number(sum) + ", expected 1");
      return std::nullopt;
    }
    try {
      return ColorStructureLaw(std::move(atoms));
    } catch (const DomainError& e) {
      fail("law", e.what());
      return std::nullopt;
    }
  }

  std::optional<OffspringCountLaw> offspring(const json& node) {
    if (!node.is_array() || node.empty()) {
      fail("offspring", "expected a nonempty array of {\"children\": k, \"p\": number}");
      return std::nullopt;
    }
    std::vector<OffspringCountLaw::Atom> atoms;
    double sum = 0.0;
    for (const auto& a : node) {
      if (!a.is_object() || !a.contains("children") || !a.contains("p") || !a["children"].is_number_unsigned() ||
          !a["p"].is_number()) {
        fail("offspring", "each atom needs \"children\" (nonnegative integer) and \"p\" (number)");
        return std::nullopt;
      }
      const double p = a["p"].get<double>();
      if (!(p >= 0.0)) {
        fail("offspring", "probabilities must be nonnegative");
        return std::nullopt;
      }
      sum += p;
      atoms.push_back({a["children"].get<std::uint32_t>(), p});
    }
    if (std::abs(sum - 1.0) > kProbabilityTolerance) {
      fail("offspring", "probabilities sum to " + format_number(sum) + ", expected 1");
      return std::nullopt;
    }
    try {
      return OffspringCountLaw(std::move(atoms));
    } catch (const DomainError& e) {
      fail("offspring", e.what());
      return std::nullopt;
    }
  }

 private:
  const json& doc_;
  std::vector<std::string>& errs_;
};

std::pair<std::size_t, std::size_t> line_and_column(std::string_view raw, std::size_t byte) {
  std::size_t line = 1, column = 1;
  for (std::size_t i = 0; i + 1 < byte && i < raw.size(); ++i) {
    if (raw[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

}  // namespace

ValidationResult validate_config(std::string_view raw) {
  ValidationResult result;
  json doc;
  try {
    doc = json::parse(raw.begin(), raw.end());
  } catch (const json::parse_error& e) {
    const auto [line, column] = line_and_column(raw, e.byte);
    result.violations.push_back("parse error at line " + std::to_string(line) + ", column " +
                                std::to_string(column) + ": " + e.what());
    return result;
  }
  if (!doc.is_object()) {
    result.violations.push_back("parse error at line 1, column 1: top level must be an object");
    return result;
  }
  auto& errs = result.violations;
  Parser p(doc, errs);
  for (const auto& [key, value] : doc.items())
    if (!kKnownFields.count(key)) p.fail(key, "unknown field");

  ExperimentConfig c;
  c.echo = doc;
  if (!doc.contains("kind") || !doc["kind"].is_string()) {
    p.fail("kind", "required: one of rate, ldp, mcmillan, dimension, block, gw");
    return result;
  }
  const std::string kind = doc["kind"].get<std::string>();
  if (kind == "rate") c.kind = ExperimentKind::kRate;
  else if (kind == "ldp") c.kind = ExperimentKind::kLdp;
  else if (kind == "mcmillan") c.kind = ExperimentKind::kMcMillan;
  else if (kind == "dimension") c.kind = ExperimentKind::kDimension;
  else if (kind == "block") c.kind = ExperimentKind::kBlock;
  else if (kind == "gw") c.kind = ExperimentKind::kGw;
  else {
    p.fail("kind", "unknown experiment kind '" + kind + "'");
    return result;
  }

  if (doc.contains("seed")) {
    if (doc["seed"].is_number_unsigned()) c.seed = doc["seed"].get<std::uint64_t>();
    else p.fail("seed", "expected an unsigned 64-bit integer");
  }

  auto require = [&](const char* key) {
    if (!doc.contains(key)) p.fail(key, "required for kind '" + kind + "'");
    return doc.contains(key);
  };

  if (doc.contains("offspring")) c.offspring = p.offspring(doc["offspring"]);
  if (doc.contains("law")) c.law = p.law(doc["law"]);
  if (doc.contains("nu")) c.nu = p.probability(doc["nu"], "nu");
  if (doc.contains("mu")) c.mu = p.measure(doc["mu"], "mu");
  if (doc.contains("theta")) c.theta = p.theta(doc["theta"], "theta");
  if (doc.contains("filter")) {
    const auto& f = doc["filter"];
    if (!f.is_object() || !f.contains("nu")) {
      p.fail("filter", "expected {\"nu\": [...], \"radius\": number}");
    } else {
      c.filter_nu = p.probability(f["nu"], "filter.nu");
      if (f.contains("radius")) {
        if (f["radius"].is_number() && f["radius"].get<double>() > 0.0) c.filter_radius = f["radius"].get<double>();
        else p.fail("filter.radius", "expected a positive number");
      }
    }
  }
  if (doc.contains("radii")) {
    if (auto v = p.vector(doc["radii"], "radii")) {
      for (double r : *v)
        if (!(r > 0.0)) p.fail("radii", "radii must be positive");
      c.radii = *v;
    }
  }
  if (doc.contains("radius")) c.radii.insert(c.radii.begin(), p.positive("radius", 0.1));

  c.eps = p.positive("eps", c.kind == ExperimentKind::kBlock ? 0.5 : 0.1);
  c.depth = p.count("depth", c.kind == ExperimentKind::kGw ? 60 : c.kind == ExperimentKind::kLdp ? 200 : 40);
  c.trials = p.count("trials", 100);
  c.order = p.count("order", 8);
  c.levels = p.count("levels", 1);
  c.blocks = p.count("blocks", 400);
  c.steer_trials = p.count("steer_trials", 10, 0);
  c.half_width = p.positive("half_width", 0.125);
  c.vertex_radius = p.positive("vertex_radius", c.half_width);
  if (doc.contains("order_search")) {
    if (doc["order_search"].is_boolean()) c.order_search = doc["order_search"].get<bool>();
    else p.fail("order_search", "expected true or false");
  }

  switch (c.kind) {
    case ExperimentKind::kRate:
      require("nu");
      require("mu");
      break;
    case ExperimentKind::kLdp:
      require("nu");
      require("mu");
      if (c.radii.empty()) c.radii = kRadiusGrid;
      break;
    case ExperimentKind::kMcMillan:
      require("nu");
      if (c.radii.empty()) c.radii = {0.1};
      break;
    case ExperimentKind::kDimension:
      require("law");
      require("theta");
      break;
    case ExperimentKind::kBlock:
      require("law");
      require("nu");
      if (c.radii.empty()) c.radii = {0.2};
      break;
    case ExperimentKind::kGw:
      require("offspring");
      break;
  }

  // All vectors must agree on the number of colors.
  std::optional<std::size_t> r;
  std::string r_source;
  auto agree = [&](const char* name, std::size_t size) {
    if (!r) {
      r = size;
      r_source = name;
    } else if (*r != size) {
      errs.push_back("dimension mismatch: '" + std::string(name) + "' has " + std::to_string(size) +
                     " entries but '" + r_source + "' has " + std::to_string(*r));
    }
  };
  if (c.law) agree("law", c.law->colors());
  if (c.nu) agree("nu", c.nu->size());
  if (c.mu) agree("mu", c.mu->size());
  if (c.theta) agree("theta", c.theta->size());
  if (c.filter_nu) agree("filter.nu", c.filter_nu->size());

  if (c.kind == ExperimentKind::kBlock && c.nu && c.steer_trials > 0) {
    try {
      ChoiceLaw(*c.nu, c.half_width);
    } catch (const DomainError& e) {
      p.fail("half_width", e.what());
    }
  }

  if (errs.empty()) result.config = std::move(c);
  return result;
}

std::string config_hash(const json& echo) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : echo.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void apply_overrides(ExperimentConfig& config, std::optional<std::uint64_t> seed,
                     std::optional<std::size_t> trials) {
  if (seed) config.seed = *seed;
  if (trials) {
    if (*trials == 0) throw DomainError("trials must be at least 1");
    config.trials = *trials;
    config.echo["trials"] = *trials;
  }
  config.echo["seed"] = config.seed;
}

namespace {

struct Provenance {
  std::uint64_t seed;
  std::string hash;
  std::string note;
};

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const Provenance& prov, const std::string& header)
      : out_(path, std::ios::binary) {
    if (!out_) throw DomainError("cannot write " + path.string());
    out_ << "# seed=" << prov.seed << '\n'
         << "# version=" << kArtifactVersion << '\n'
         << "# config_hash=" << prov.hash << '\n'
         << "# note=" << prov.note << '\n'
         << header << '\n';
  }

  template <typename... Cells>
  void row(const Cells&... cells) {
    std::size_t i = 0;
    ((out_ << (i++ ? "," : "") << cell(cells)), ...);
    out_ << '\n';
  }

 private:
  static std::string cell(double x) { return format_number(x); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(bool b) { return b ? "1" : "0"; }
  template <typename T>
    requires std::is_integral_v<T>
  static std::string cell(T v) {
    return std::to_string(v);
  }

  std::ofstream out_;
};

const char* kSplitNote = "binomial splits exact up to 2^50 lines; normal approximation above";

json run_rate(const ExperimentConfig& c, const std::filesystem::path& out, Provenance& prov) {
  prov.note = "legendre sup by multistart damped Newton";
  const auto& nu = *c.nu;
  const auto& mu = *c.mu;
  const double rho = kullback_action(nu, mu);
  LegendreSearch search;
  search.seed = c.seed;
  double legendre = kPlusInfinity;
  if (!is_plus_infinity(rho)) legendre = legendre_sup_estimate(nu, mu, search);
  const double entropy = shannon_entropy(nu);
  double gap = std::nan("");
  if (!is_plus_infinity(rho)) gap = young_gap(nu, mu, log_likelihood_ratio(nu, mu));
  CsvWriter csv(out / "rate.csv", prov, "quantity,value");
  csv.row("kullback_action", rho);
  csv.row("legendre_sup", legendre);
  csv.row("shannon_entropy", entropy);
  csv.row("young_gap_at_log_ratio", gap);
  csv.row("total_mass_mu", mu.total_mass());
  return {{"kullback_action", num(rho)},
          {"legendre_sup", num(legendre)},
          {"duality_gap", num(is_plus_infinity(rho) ? 0.0 : legendre - rho)},
          {"shannon_entropy", num(entropy)},
          {"young_gap_at_log_ratio", num(gap)}};
}

json run_ldp(const ExperimentConfig& c, const std::filesystem::path& out, Provenance& prov) {
  prov.note = "exact multinomial enumeration";
  CsvWriter csv(out / "ldp.csv", prov, "radius,n,log_mass,log_rate,predicted,gap");
  json tables = json::array();
  for (double radius : c.radii) {
    const auto table = ldp_radius_table(*c.mu, *c.nu, radius, c.depth, c.eps);
    for (const auto& row : table.rows) csv.row(radius, row.n, row.log_value, row.log_rate, row.predicted, row.gap);
    json t = {{"radius", num(radius)},
              {"final_log_rate", num(table.rows.empty() ? std::nan("") : table.rows.back().log_rate)},
              {"certified_upper_eps", num(table.certified_upper_eps)},
              {"certified_lower_eps", num(table.certified_lower_eps)}};
    t["lower_threshold"] = table.lower_threshold ? json(*table.lower_threshold) : json(nullptr);
    tables.push_back(t);
  }
  return {{"rho", num(kullback_action(*c.nu, *c.mu))}, {"depth", c.depth}, {"radii", tables}};
}

json run_mcmillan(const ExperimentConfig& c, const std::filesystem::path& out, Provenance& prov,
                  std::size_t threads) {
  const double radius = c.radii.front();
  if (!c.law) {
    prov.note = "exact counts of words with spectrum in the ball";
    const TVNeighborhood nbhd(*c.nu, radius);
    const double predicted = shannon_entropy(*c.nu);
    CsvWriter csv(out / "counts.csv", prov, "n,count,log_rate,predicted,gap");
    RateEstimate last;
    for (std::size_t n = 1; n <= c.depth; ++n) {
      const BigCount count = mcmillan_count_exact(nbhd, n);
      last = make_rate_estimate(n, count == 0 ? -kPlusInfinity : log_of(count), predicted);
      csv.row(n, count.str(), last.log_rate, last.predicted, last.gap);
    }
    return {{"mode", "classical"}, {"radius", num(radius)}, {"depth", c.depth},
            {"final_log_rate", num(last.log_rate)}, {"predicted", num(predicted)}, {"final_gap", num(last.gap)}};
  }
  prov.note = kSplitNote;
  ColoredMcMillanConfig cfg;
  cfg.radius = radius;
  cfg.depth = c.depth;
  cfg.trials = c.trials;
  cfg.seed = c.seed;
  cfg.threads = threads;
  cfg.eps = c.eps;
  const auto res = colored_mcmillan_experiment(*c.law, *c.nu, cfg);
  CsvWriter csv(out / "trials.csv", prov, "trial,n,count,log_rate,predicted,gap,survived");
  for (const auto& row : res.rows)
    csv.row(row.trial, row.estimate.n, to_string(row.count), row.estimate.log_rate, row.estimate.predicted,
            row.estimate.gap, row.survived);
  json certified = json::array();
  for (const auto& [r, e] : res.certified_eps) certified.push_back({{"radius", num(r)}, {"eps", num(e)}});
  return {{"mode", "colored"},
          {"rho", num(res.rho)},
          {"predicted", num(res.predicted)},
          {"lower_bound_applicable", res.lower_bound_applicable},
          {"extinction_probability", num(res.extinction_probability)},
          {"survival_frequency", num(res.survival_frequency)},
          {"survivors", res.survivors},
          {"median_log_rate", num(res.median_log_rate)},
          {"median_gap", num(res.median_gap)},
          {"upper_violation_frequency", num(res.upper_violation_frequency)},
          {"certified_eps", certified}};
}

json run_dimension(const ExperimentConfig& c, const std::filesystem::path& out, Provenance& prov,
                   std::size_t threads) {
  prov.note = kSplitNote;
  const ThetaMetric theta(*c.theta);
  DimensionExperimentConfig cfg;
  cfg.depth = c.depth;
  cfg.trials = c.trials;
  cfg.seed = c.seed;
  cfg.threads = threads;
  if (c.filter_nu) cfg.filter = TVNeighborhood(*c.filter_nu, c.filter_radius);
  const auto res = dimension_experiment(*c.law, theta, cfg);
  CsvWriter csv(out / "series.csv", prov, "trial,n,estimate,empty");
  for (std::size_t t = 0; t < res.series.size(); ++t)
    for (const auto& rep : res.series[t]) csv.row(t, rep.depth, rep.estimate, rep.empty);
  const MeasureVec mu = color_expectation(*c.law).mu;
  const auto bowen = bowen_root(mu, theta);
  json gaps = json::array();
  for (double g : res.median_lag5_gaps) gaps.push_back(num(g));
  json s = {{"method", to_string(DimensionMethod::kCoveringRoot)},
            {"depth", c.depth},
            {"estimate", num(res.median_estimate)},
            {"predicted", num(res.predicted)},
            {"bowen_root", num(bowen.s)},
            {"x_infinity_empty", bowen.x_infinity_empty},
            {"survival_frequency", num(res.survival_frequency)},
            {"filtered", c.filter_nu.has_value()},
            {"median_lag5_gaps", gaps}};
  if (c.filter_nu) s["billingsley_kullback"] = num(billingsley_kullback_entropy(*c.filter_nu, mu, theta));
  return s;
}

json run_block(const ExperimentConfig& c, const std::filesystem::path& out, Provenance& prov,
               std::size_t threads) {
  prov.note = "explicit tree mode; population cap " + std::to_string(kDefaultPopulationCap) + " nodes";
  SelectionExperimentConfig cfg;
  cfg.order = c.order;
  cfg.levels = c.levels;
  cfg.radius = c.radii.front();
  cfg.eps = c.eps;
  cfg.trials = c.trials;
  cfg.seed = c.seed;
  cfg.threads = threads;
  const auto sel = selection_experiment(*c.law, *c.nu, cfg);
  {
    CsvWriter csv(out / "selection.csv", prov, "trial,survived,nonempty");
    for (std::size_t t = 0; t < c.trials; ++t) csv.row(t, sel.survived[t] != 0, sel.nonempty[t] != 0);
  }
  json summary = {{"rho", num(sel.rho)},
                  {"order", c.order},
                  {"threshold", sel.threshold},
                  {"nonempty_frequency", num(sel.nonempty_frequency)},
                  {"survival_frequency", num(sel.survival_frequency)},
                  {"predicted_survival", num(sel.predicted_survival)},
                  {"refused", sel.refused}};

  if (c.order_search) {
    const std::size_t orders[] = {4, 8, 16, 32};
    std::vector<std::optional<std::size_t>> found(c.trials);
    parallel_for(c.trials, threads, [&](std::size_t t) {
      found[t] = smallest_nonempty_order(*c.law, *c.nu, cfg.radius, c.eps, orders, stream_seed(c.seed, t));
    });
    CsvWriter csv(out / "orders.csv", prov, "trial,smallest_order");
    for (std::size_t t = 0; t < c.trials; ++t) csv.row(t, found[t] ? std::to_string(*found[t]) : std::string());
  }

  if (c.steer_trials > 0) {
    const ChoiceLaw choice(*c.nu, c.half_width);
    const auto nbhds = choice.vertex_neighborhoods(c.vertex_radius);
    std::vector<SteeredLine> lines(c.steer_trials);
    parallel_for(c.steer_trials, threads, [&](std::size_t t) {
      SteeringConfig sc;
      sc.order = c.order;
      sc.blocks = c.blocks;
      sc.seed = stream_seed(c.seed, t);
      lines[t] = steered_line_sampler(*c.law, choice, nbhds, sc);
    });
    std::string header = "trial,n,vertex";
    for (std::size_t i = 1; i <= c.nu->size(); ++i) header += ",delta_" + std::to_string(i);
    header += ",deviation";
    CsvWriter csv(out / "steering.csv", prov, header);
    std::size_t ok = 0;
    std::vector<double> final_tv;
    json failures = json::array();
    for (std::size_t t = 0; t < lines.size(); ++t) {
      const auto& line = lines[t];
      if (!line.ok) {
        failures.push_back({{"trial", t}, {"reason", line.failure}});
        continue;
      }
      ++ok;
      final_tv.push_back(tv_distance(line.running_averages.back(), choice.center()));
      for (std::size_t n = 0; n < line.running_averages.size(); ++n) {
        std::ostringstream cells;
        cells << t << ',' << n + 1 << ',' << line.chosen_vertices[n];
        for (double w : line.running_averages[n].weights()) cells << ',' << format_number(w);
        cells << ',' << format_number(line.deviations[n]);
        csv.row(cells.str());
      }
    }
    summary["steering"] = {{"trials", c.steer_trials},
                           {"completed", ok},
                           {"blocks", c.blocks},
                           {"half_width", num(c.half_width)},
                           {"median_final_tv", num(median(final_tv))},
                           {"max_final_tv", num(final_tv.empty() ? std::nan("")
                                                                 : *std::max_element(final_tv.begin(), final_tv.end()))},
                           {"flagged", failures}};
  }
  return summary;
}

json run_gw(const ExperimentConfig& c, const std::filesystem::path& out, Provenance& prov, std::size_t threads) {
  prov.note = kSplitNote;
  const auto& law = *c.offspring;
  const auto ext = extinction_probability(law);
  std::vector<GWTrajectory> runs(c.trials);
  parallel_for(c.trials, threads,
               [&](std::size_t t) { runs[t] = simulate_gw(law, c.depth, stream_seed(c.seed, t)); });
  CsvWriter csv(out / "trials.csv", prov, "trial,extinct,final_count");
  std::size_t extinct = 0;
  for (std::size_t t = 0; t < runs.size(); ++t) {
    extinct += runs[t].extinct();
    csv.row(t, runs[t].extinct(), runs[t].counts.back());
  }
  const double freq = static_cast<double>(extinct) / static_cast<double>(c.trials);
  return {{"mean_offspring", num(mean_offspring(law))},
          {"extinction", num(ext.probability)},
          {"degenerate", ext.degenerate},
          {"depth", c.depth},
          {"trials", c.trials},
          {"extinction_frequency", num(freq)}};
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::optional<std::string> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

json run_experiment(const ExperimentConfig& config, const std::filesystem::path& out, std::size_t threads) {
  std::filesystem::create_directories(out);
  json echo = config.echo;
  echo["seed"] = config.seed;
  Provenance prov{config.seed, config_hash(echo), ""};
  json summary;
  switch (config.kind) {
    case ExperimentKind::kRate: summary = run_rate(config, out, prov); break;
    case ExperimentKind::kLdp: summary = run_ldp(config, out, prov); break;
    case ExperimentKind::kMcMillan: summary = run_mcmillan(config, out, prov, threads); break;
    case ExperimentKind::kDimension: summary = run_dimension(config, out, prov, threads); break;
    case ExperimentKind::kBlock: summary = run_block(config, out, prov, threads); break;
    case ExperimentKind::kGw: summary = run_gw(config, out, prov, threads); break;
  }
  summary["kind"] = to_string(config.kind);
  summary["seed"] = config.seed;
  summary["config_hash"] = prov.hash;
  write_json(out / "summary.json", summary);
  write_json(out / "metadata.json", {{"seed", config.seed},
                                     {"version", kArtifactVersion},
                                     {"config_hash", prov.hash},
                                     {"kind", to_string(config.kind)},
                                     {"note", prov.note},
                                     {"seed_derivation", "trial t: mt19937_64 seeded with "
                                                         "splitmix64(splitmix64(seed) + t * 0x9e3779b97f4a7c15)"},
                                     {"config", echo}});
  return summary;
}

namespace {

std::optional<ExperimentConfig> load(const std::filesystem::path& path, std::ostream& err) {
  const auto raw = slurp(path);
  if (!raw) {
    err << "error: cannot read " << path.string() << '\n';
    return std::nullopt;
  }
  auto v = validate_config(*raw);
  for (const auto& msg : v.violations) err << path.string() << ": " << msg << '\n';
  return std::move(v.config);
}

}  // namespace

int command_run(const std::filesystem::path& config_path, std::optional<std::uint64_t> seed,
                const std::filesystem::path& out, std::optional<std::size_t> trials, std::size_t threads,
                std::ostream& log, std::ostream& err) {
  auto config = load(config_path, err);
  if (!config) return 1;
  try {
    apply_overrides(*config, seed, trials);
    const auto summary = run_experiment(*config, out, std::max<std::size_t>(threads, 1));
    log << summary.dump(2) << '\n';
    return 0;
  } catch (const NumericGuard& e) {
    err << "numeric guard: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    err << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

int command_validate(const std::filesystem::path& config_path, std::ostream& log, std::ostream& err) {
  const auto config = load(config_path, err);
  if (!config) return 1;
  log << "ok: " << to_string(config->kind) << " config, hash " << config_hash(config->echo) << '\n';
  return 0;
}

int command_report(const std::filesystem::path& dir, std::ostream& log, std::ostream& err) {
  const auto raw = slurp(dir / "summary.json");
  if (!raw) {
    err << "error: no summary.json in " << dir.string() << '\n';
    return 1;
  }
  try {
    log << json::parse(*raw).dump(2) << '\n';
  } catch (const json::parse_error& e) {
    err << "error: unreadable summary.json: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace cbranch
