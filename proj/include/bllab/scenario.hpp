#pragma once

// JSON scenario runner. A scenario names sets, optional datums and a list of
// checks; each check renders a verdict and declares whether it should hold.
// See README.md for the schema.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bllab/bldatum.hpp"
#include "bllab/datum_io.hpp"
#include "bllab/dimest.hpp"
#include "bllab/experiments.hpp"
#include "bllab/fracgen.hpp"
#include "bllab/nonlinear.hpp"
#include "bllab/setops.hpp"

namespace bllab {

using Json = nlohmann::json;

/// Read-only view of a JSON value that knows its path for diagnostics.
class Node {
 public:
  Node(const Json& j, std::string path) : j_(&j), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  const Json& json() const { return *j_; }
  [[noreturn]] void fail(const std::string& what) const { fail_input(path_ + ": " + what); }

  bool has(const std::string& key) const { return j_->is_object() && j_->contains(key); }
  Node at(const std::string& key) const {
    if (!j_->is_object()) fail("expected an object");
    auto it = j_->find(key);
    if (it == j_->end()) fail("missing key '" + key + "'");
    return Node(*it, path_ + "." + key);
  }
  Node at(std::size_t i) const { return Node((*j_)[i], path_ + "[" + std::to_string(i) + "]"); }
  std::size_t size() const {
    if (!j_->is_array()) fail("expected an array");
    return j_->size();
  }

  void allow(std::initializer_list<const char*> keys) const {
    if (!j_->is_object()) fail("expected an object");
    for (auto it = j_->begin(); it != j_->end(); ++it)
      if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; }))
        fail("unknown key '" + it.key() + "'");
  }

  std::string str() const {
    if (!j_->is_string()) fail("expected a string");
    return j_->get<std::string>();
  }
  long integer() const {
    if (!j_->is_number_integer()) fail("expected an integer");
    return j_->get<long>();
  }
  double number() const {
    if (!j_->is_number()) fail("expected a number");
    return j_->get<double>();
  }
  bool boolean() const {
    if (!j_->is_boolean()) fail("expected true or false");
    return j_->get<bool>();
  }
  /// Integers, or strings such as "1/2", "-3" and "0.25".
  Rational rational() const {
    if (j_->is_number_integer()) return Rational(j_->get<long>());
    if (!j_->is_string()) fail("expected an integer or a rational string");
    try {
      return parse_rational(j_->get<std::string>());
    } catch (const Error& e) {
      fail(e.what());
    }
  }
  std::vector<Rational> rationals() const {
    std::vector<Rational> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back(at(i).rational());
    return out;
  }
  std::vector<int> integers() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back(static_cast<int>(at(i).integer()));
    return out;
  }

  std::string str_or(const std::string& key, std::string def) const { return has(key) ? at(key).str() : def; }
  long int_or(const std::string& key, long def) const { return has(key) ? at(key).integer() : def; }
  double num_or(const std::string& key, double def) const { return has(key) ? at(key).number() : def; }

 private:
  const Json* j_;
  std::string path_;
};

/// Parse JSON text; syntax errors name the line and column.
inline Json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string what = e.what();
    auto pos = what.find("syntax error");
    fail_input(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " +
               (pos == std::string::npos ? what : what.substr(pos)));
  }
}

// Spec parsers shared by the runner and the CLI.

inline Generator parse_generator(const Node& n, const std::map<std::string, Generator>& named = {}) {
  if (n.json().is_string()) {
    auto it = named.find(n.str());
    if (it == named.end()) n.fail("unknown set '" + n.str() + "'");
    return it->second;
  }
  const std::string kind = n.at("kind").str();
  if (kind == "cantor") {
    n.allow({"kind", "base", "digits"});
    return Generator::cantor(static_cast<int>(n.at("base").integer()), n.at("digits").integers());
  }
  if (kind == "full") {
    n.allow({"kind", "base", "dim"});
    return Generator::full(static_cast<int>(n.at("base").integer()), static_cast<int>(n.at("dim").integer()));
  }
  if (kind == "points") {
    n.allow({"kind", "base", "points"});
    Node pts = n.at("points");
    std::vector<std::vector<Rational>> v;
    for (std::size_t i = 0; i < pts.size(); ++i) v.push_back(pts.at(i).rationals());
    return Generator::finite_points(static_cast<int>(n.at("base").integer()), v);
  }
  if (kind == "segment") {
    n.allow({"kind", "base", "from", "to"});
    return Generator::segment(static_cast<int>(n.at("base").integer()), n.at("from").rationals(),
                              n.at("to").rationals());
  }
  if (kind == "interleaved") {
    n.allow({"kind", "dim", "growth", "blocks", "component"});
    std::optional<int> component;
    if (n.has("component")) component = static_cast<int>(n.at("component").integer()) - 1;
    return Generator::interleaved(static_cast<int>(n.at("dim").integer()), static_cast<int>(n.int_or("growth", 4)),
                                  static_cast<int>(n.int_or("blocks", 4)), component);
  }
  if (kind == "product") {
    n.allow({"kind", "parts"});
    Node parts = n.at("parts");
    std::vector<Generator> gs;
    for (std::size_t i = 0; i < parts.size(); ++i) gs.push_back(parse_generator(parts.at(i), named));
    return Generator::product(std::move(gs));
  }
  n.at("kind").fail("unknown set kind '" + kind + "'");
}

inline QMatrix parse_json_matrix(const Node& n) {
  std::vector<std::vector<Rational>> rows;
  for (std::size_t i = 0; i < n.size(); ++i) rows.push_back(n.at(i).rationals());
  if (rows.empty()) n.fail("matrix has no rows");
  for (const auto& r : rows)
    if (r.size() != rows.front().size()) n.fail("matrix rows have different lengths");
  return QMatrix::from_rows(rows, rows.front().size());
}

inline MapSpec parse_map(const Node& n) {
  const std::string kind = n.at("kind").str();
  if (kind == "linear") {
    n.allow({"kind", "matrix"});
    return MapSpec::linear(parse_json_matrix(n.at("matrix")));
  }
  if (kind == "example1" || kind == "example2") {
    n.allow({"kind", "component"});
    const int c = static_cast<int>(n.at("component").integer());
    return kind == "example1" ? MapSpec::example1(c) : MapSpec::example2(c);
  }
  if (kind == "radial") {
    n.allow({"kind", "pin"});
    return MapSpec::radial(n.at("pin").rationals());
  }
  if (kind == "sum") {
    n.allow({"kind", "dim"});
    return MapSpec::sum_coordinates(static_cast<int>(n.at("dim").integer()));
  }
  n.at("kind").fail("unknown map kind '" + kind + "'");
}

struct ScenarioDatum {
  std::string label;
  std::vector<LinearSurjection> projections;
  std::optional<std::vector<Rational>> weights;
};

inline ScenarioDatum parse_scenario_datum(const Node& n, const std::filesystem::path& base_dir) {
  ScenarioDatum d;
  if (n.has("file")) {
    n.allow({"file"});
    auto path = base_dir / n.at("file").str();
    d.label = n.at("file").str();
    DatumFile f;
    try {
      f = load_datum(path.string());
    } catch (const Error& e) {
      n.at("file").fail(e.what());
    }
    d.projections = f.projections;
    d.weights = f.weights;
    return d;
  }
  if (n.has("coordinate_planes")) {
    n.allow({"coordinate_planes", "weights"});
    Node cp = n.at("coordinate_planes");
    cp.allow({"dim", "k"});
    const auto dim = static_cast<std::size_t>(cp.at("dim").integer()), k = static_cast<std::size_t>(cp.at("k").integer());
    d.label = "coordinate " + std::to_string(k) + "-planes of R^" + std::to_string(dim);
    d.projections = coordinate_plane_projections(dim, k);
    d.weights = n.has("weights") ? n.at("weights").rationals()
                                 : std::vector<Rational>(d.projections.size(), coordinate_plane_weight(dim, k));
    return d;
  }
  n.allow({"projections", "weights"});
  Node ps = n.at("projections");
  d.label = "inline";
  for (std::size_t i = 0; i < ps.size(); ++i) {
    try {
      d.projections.emplace_back(parse_json_matrix(ps.at(i)));
    } catch (const Error& e) {
      ps.at(i).fail(e.what());
    }
  }
  if (n.has("weights")) d.weights = n.at("weights").rationals();
  return d;
}

inline std::vector<int> parse_levels(const Node& n) {
  if (n.json().is_object()) {
    n.allow({"from", "to"});
    return level_range(static_cast<int>(n.at("from").integer()), static_cast<int>(n.at("to").integer()));
  }
  std::vector<int> v = n.integers();
  if (v.empty()) n.fail("no levels given");
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] <= v[i - 1]) n.fail("levels must be strictly increasing");
  return v;
}

struct RunOptions {
  std::filesystem::path out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::size_t budget = kDefaultCellBudget;
};

struct CheckOutcome {
  std::string kind;
  std::string title;
  std::string subject;
  bool expected_holds = true;
  bool holds = false;
  bool matches() const { return holds == expected_holds; }
  std::optional<Verdict> verdict;
  std::vector<std::string> details;
};

struct ScenarioReport {
  std::string name;
  std::filesystem::path out_dir;
  std::vector<CheckOutcome> checks;
  std::map<std::string, std::string> files;  // file name -> contents
  bool all_match() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckOutcome& c) { return c.matches(); });
  }
};

inline std::string check_title(const std::string& kind) {
  static const std::map<std::string, std::string> titles{
      {"projection_upper", "projection inequality for upper box dimension"},
      {"loomis_whitney", "Loomis-Whitney inequality for upper box dimension"},
      {"bl_weights", "optimal weights on the Brascamp-Lieb polytope"},
      {"packing_as_upper", "projection inequality for packing dimension (as upper box)"},
      {"assouad", "projection inequality for Assouad dimension"},
      {"all_lower", "lower box inequality with every term lower (unsupported)"},
      {"mixed_lower", "mixed lower box inequality"},
      {"nonlinear", "nonlinear submersion inequality for upper box dimension"},
      {"jacobian", "Jacobian rank of the nonlinear maps"},
      {"large_projection", "one large projection in a BL-feasible family"},
      {"sweep", "exceptional projection directions"},
      {"constrained_product", "constrained product bound"},
      {"self_product", "lower box bound for self-products"},
      {"sumset", "constrained sumset bound"},
      {"radial", "radial projection bound"}};
  auto it = titles.find(kind);
  return it == titles.end() ? kind : it->second;
}

namespace detail {

struct ScenarioContext {
  std::filesystem::path dir;
  std::map<std::string, Generator> sets;
  std::optional<ScenarioDatum> datum;
  std::vector<int> levels;
  std::optional<std::pair<int, int>> window;
  std::uint64_t seed = 1;
  std::size_t falsifiers = 0;
  int cross_check_max_level = 0;
  std::size_t budget = kDefaultCellBudget;
  ScenarioReport* report = nullptr;
  std::string datum_text;
  std::set<std::string> described;
};

inline std::string format_rationals(const std::vector<Rational>& v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + to_short_string(v[i]);
  return s + ")";
}

inline std::string format_subspace(const QSubspace& v) {
  if (v.is_zero()) return "{0}";
  std::string s = "span{";
  for (std::size_t r = 0; r < v.basis().rows(); ++r) s += (r ? ", " : "") + format_rationals(v.basis().row(r));
  return s + "}";
}

inline bool parse_expect(const Node& c, const char* good = "holds", const char* bad = "fails") {
  const std::string e = c.at("expect").str();
  if (e == good) return true;
  if (e == bad) return false;
  c.at("expect").fail(std::string("expected '") + good + "' or '" + bad + "'");
}

class CheckRunner {
 public:
  CheckRunner(ScenarioContext& ctx, const Node& c, std::size_t index)
      : ctx_(ctx), c_(c), tag_("c" + std::to_string(index + 1)) {}

  std::vector<int> levels() const { return c_.has("levels") ? parse_levels(c_.at("levels")) : ctx_.levels; }
  std::pair<int, int> window(const std::vector<int>& lv) const {
    if (c_.has("window")) {
      auto w = c_.at("window").integers();
      if (w.size() != 2 || w[0] > w[1]) c_.at("window").fail("window must be [from, to]");
      return {w[0], w[1]};
    }
    if (ctx_.window) return *ctx_.window;
    return {lv.front(), lv.back()};
  }
  SlopeStatistic statistic(SlopeStatistic def) const {
    if (!c_.has("statistic")) return def;
    const std::string s = c_.at("statistic").str();
    if (s == "per_level") return SlopeStatistic::per_level;
    if (s == "increment") return SlopeStatistic::increment;
    c_.at("statistic").fail("expected 'per_level' or 'increment'");
  }
  double tolerance(double def) const { return c_.num_or("tolerance", def); }

  Generator set(const char* key = "set") const { return parse_generator(c_.at(key), ctx_.sets); }
  std::string set_name(const char* key = "set") const {
    return c_.at(key).json().is_string() ? c_.at(key).str() : parse_generator(c_.at(key), ctx_.sets).describe();
  }

  ScenarioDatum datum(bool need_weights) const {
    ScenarioDatum d;
    if (c_.has("datum"))
      d = parse_scenario_datum(c_.at("datum"), ctx_.dir);
    else if (ctx_.datum)
      d = *ctx_.datum;
    else
      c_.fail("no datum given for this check and no scenario datum");
    if (need_weights) {
      if (!d.weights) c_.fail("datum '" + d.label + "' has no weights");
      BLDatum bd{d.projections, *d.weights};
      try {
        bd.validate();
      } catch (const Error& e) {
        c_.fail(e.what());
      }
      if (!check_scaling(bd)) c_.fail("datum '" + d.label + "' fails the scaling condition");
    }
    return d;
  }

  void describe_datum(const ScenarioDatum& d) {
    std::string& out = ctx_.datum_text;
    out += "[" + tag_ + "] datum " + d.label;
    const std::string key = d.label + (d.weights ? format_rationals(*d.weights) : "");
    if (!ctx_.described.insert(key).second) {
      out += ", as above\n";
      return;
    }
    out += "\n";
    for (std::size_t i = 0; i < d.projections.size(); ++i) {
      out += "  P" + std::to_string(i + 1) + " (" + std::to_string(d.projections[i].target_dim()) + "x" +
             std::to_string(d.projections[i].ambient_dim()) + "):\n";
      std::istringstream rows(format_matrix(d.projections[i].matrix()));
      for (std::string line; std::getline(rows, line);) out += "    " + line + "\n";
    }
    CriticalOptions o;
    o.random_samples = ctx_.falsifiers;
    o.seed = ctx_.seed;
    SubspaceFamily fam = critical_subspaces(d.projections, o);
    out += "  family: kernel lattice + coordinate subspaces + " + std::to_string(ctx_.falsifiers) +
           " random falsifiers (seed " + std::to_string(ctx_.seed) + "), " + std::to_string(fam.members.size()) +
           " subspaces" + (fam.truncated ? ", truncated" : "") + "\n";
    if (d.weights) {
      BLDatum bd{d.projections, *d.weights};
      out += "  weights " + format_rationals(*d.weights) + "\n";
      out += std::string("  scaling: ") + (check_scaling(bd) ? "ok" : "violated") + "\n";
      ConditionReport r = check_dimension_condition(bd, fam);
      out += std::string("  dimension condition: ") + (r.dimension_ok ? "ok on the family" : "violated") + "\n";
      if (r.violating_subspace) out += "  violating subspace: " + format_subspace(*r.violating_subspace) + "\n";
    }
    FeasibilityResult f = bl_feasibility(d.projections, fam);
    out += std::string("  BL-feasible on the family: ") + (f.feasible ? "yes, witness " + format_rationals(f.witness) : "no") +
           "\n";
  }

  CountTable counts(const Generator& g, const std::vector<int>& lv, const std::string& label) {
    CountTable t = box_counts(g, lv, ctx_.budget);
    for (const auto& row : t.rows) {
      if (row.level > ctx_.cross_check_max_level || !g.closed_form_count(row.level)) continue;
      Integer direct(static_cast<unsigned long>(g.at(row.level, ctx_.budget).size()));
      if (direct != row.count)
        fail_domain("closed-form count of " + g.describe() + " disagrees with enumeration at level " +
                    std::to_string(row.level));
    }
    emit(label, t);
    return t;
  }

  CountTable projected(const Generator& g, const LinearSurjection& p, const std::vector<int>& lv,
                       const std::string& label) {
    CountTable t = projected_counts(g, p, lv, ctx_.budget);
    for (const auto& row : t.rows) {
      if (row.level > ctx_.cross_check_max_level) continue;
      Integer direct(static_cast<unsigned long>(project_cubes(p, g.at(row.level, ctx_.budget), ctx_.budget).size()));
      if (direct != row.count)
        fail_domain("closed-form projected count disagrees with enumeration at level " + std::to_string(row.level));
    }
    emit(label, t);
    return t;
  }

  void emit(const std::string& label, const CountTable& t) {
    auto& files = ctx_.report->files;
    if (!files.count("counts.csv")) files["counts.csv"] = counts_csv(t);
    files["counts_" + tag_ + "_" + label + ".csv"] = counts_csv(t);
  }

  CheckOutcome run() {
    CheckOutcome o;
    o.kind = c_.at("kind").str();
    o.title = check_title(o.kind);
    const std::string& k = o.kind;
    if (k == "projection_upper" || k == "loomis_whitney" || k == "packing_as_upper" || k == "all_lower" ||
        k == "mixed_lower" || k == "large_projection")
      projection_family(o);
    else if (k == "bl_weights")
      bl_weights(o);
    else if (k == "assouad")
      assouad(o);
    else if (k == "constrained_product" || k == "self_product")
      constrained(o);
    else if (k == "sumset")
      sumset(o);
    else if (k == "nonlinear")
      nonlinear(o);
    else if (k == "jacobian")
      jacobian(o);
    else if (k == "sweep")
      sweep(o);
    else if (k == "radial")
      radial(o);
    else
      c_.at("kind").fail("unknown check kind '" + k + "'");
    return o;
  }

 private:
  void finish(CheckOutcome& o, const Verdict& v) {
    o.verdict = v;
    o.holds = v.holds;
  }

  void projection_family(CheckOutcome& o) {
    const std::string& k = o.kind;
    c_.allow({"kind", "name", "set", "datum", "expect", "tolerance", "levels", "window", "statistic", "j", "k"});
    o.expected_holds = parse_expect(c_);
    Generator x = set();
    o.subject = set_name();
    ScenarioDatum d;
    if (k == "loomis_whitney") {
      const auto dim = static_cast<std::size_t>(x.dim());
      const auto kk = static_cast<std::size_t>(c_.int_or("k", static_cast<long>(dim) - 1));
      d.label = "Loomis-Whitney coordinate " + std::to_string(kk) + "-planes";
      d.projections = coordinate_plane_projections(dim, kk);
      d.weights = std::vector<Rational>(d.projections.size(), coordinate_plane_weight(dim, kk));
      o.details.push_back("weights d/(C(d,k) k) = " + to_short_string(coordinate_plane_weight(dim, kk)));
    } else {
      d = datum(k != "large_projection");
    }
    describe_datum(d);
    const auto lv = levels();
    const auto w = window(lv);
    const SlopeStatistic st = statistic(SlopeStatistic::per_level);
    const DimMode lhs_mode = (k == "all_lower" || k == "mixed_lower") ? DimMode::lower_box : DimMode::upper_box;
    const double lhs = estimate_dim(counts(x, lv, "set"), lhs_mode, w, st).value;
    std::size_t j = 0;
    if (k == "mixed_lower") {
      const long jj = c_.at("j").integer();
      if (jj < 1 || static_cast<std::size_t>(jj) > d.projections.size()) c_.at("j").fail("index out of range");
      j = static_cast<std::size_t>(jj - 1);
    }
    std::vector<WeightedTerm> terms;
    std::vector<double> ests;
    for (std::size_t i = 0; i < d.projections.size(); ++i) {
      DimMode m = DimMode::upper_box;
      if (k == "all_lower" || (k == "mixed_lower" && i == j)) m = DimMode::lower_box;
      const double e = estimate_dim(projected(x, d.projections[i], lv, "image" + std::to_string(i + 1)), m, w, st).value;
      ests.push_back(e);
      o.details.push_back("P" + std::to_string(i + 1) + "(X): " + (m == DimMode::lower_box ? "lower " : "upper ") +
                          format_g12(e));
      if (d.weights) terms.push_back({to_double((*d.weights)[i]), e});
    }
    o.details.push_back(std::string("X: ") + (lhs_mode == DimMode::lower_box ? "lower " : "upper ") + format_g12(lhs));
    const double tol = tolerance(kExactTolerance);
    if (k == "large_projection") {
      CriticalOptions co;
      co.random_samples = ctx_.falsifiers;
      co.seed = ctx_.seed;
      if (!is_bl_feasible(d.projections, critical_subspaces(d.projections, co)))
        fail_domain(c_.path() + ": projection family is not BL-feasible");
      // the largest rescaled image (d / d_i) dim P_i(X) against dim X
      std::size_t best = 0;
      std::vector<double> rescaled;
      for (std::size_t i = 0; i < ests.size(); ++i)
        rescaled.push_back(static_cast<double>(x.dim()) / static_cast<double>(d.projections[i].target_dim()) * ests[i]);
      for (std::size_t i = 1; i < rescaled.size(); ++i)
        if (rescaled[i] > rescaled[best]) best = i;
      o.details.push_back("large projection: P" + std::to_string(best + 1));
      finish(o, verdict(VerdictMode::upper_box, lhs,
                        {{static_cast<double>(x.dim()) / static_cast<double>(d.projections[best].target_dim()), ests[best]}},
                        tol));
      return;
    }
    VerdictMode vm = VerdictMode::upper_box;
    if (k == "packing_as_upper") vm = VerdictMode::packing_as_upper;
    if (k == "all_lower") vm = VerdictMode::lower_box;
    if (k == "mixed_lower") vm = VerdictMode::mixed_lower;
    finish(o, verdict(vm, lhs, terms, tol));
  }

  void bl_weights(CheckOutcome& o) {
    c_.allow({"kind", "name", "datum", "s", "expect", "weights", "objective"});
    o.expected_holds = parse_expect(c_, "feasible", "infeasible");
    ScenarioDatum d = datum(false);
    o.subject = d.label;
    describe_datum(d);
    CriticalOptions co;
    co.random_samples = ctx_.falsifiers;
    co.seed = ctx_.seed;
    const std::vector<Rational> s = c_.at("s").rationals();
    WeightSolution w = optimize_weights(d.projections, s, critical_subspaces(d.projections, co));
    o.holds = w.feasible;
    std::string& out = ctx_.datum_text;
    out += "[" + tag_ + "] minimize sum c_i s_i with s = " + format_rationals(s) + "\n";
    if (w.feasible) {
      out += "  weights " + format_rationals(w.weights) + ", objective " + to_short_string(*w.objective) + "\n";
      o.details.push_back("weights " + format_rationals(w.weights) + ", objective " + to_short_string(*w.objective));
      if (c_.has("weights") && c_.at("weights").rationals() != w.weights) {
        o.details.push_back("expected weights " + format_rationals(c_.at("weights").rationals()));
        o.holds = !o.expected_holds;
      }
      if (c_.has("objective") && c_.at("objective").rational() != *w.objective) {
        o.details.push_back("expected objective " + to_short_string(c_.at("objective").rational()));
        o.holds = !o.expected_holds;
      }
    } else {
      std::string v = w.violating_subspace ? format_subspace(*w.violating_subspace) : "none singled out";
      out += "  polytope empty, objective +inf, violating subspace " + v + "\n";
      o.details.push_back("polytope empty, objective +inf, violating subspace " + v);
    }
  }

  void assouad(CheckOutcome& o) {
    c_.allow({"kind", "name", "set", "datum", "expect", "tolerance", "level", "coarse"});
    o.expected_holds = parse_expect(c_);
    Generator x = set();
    o.subject = set_name();
    ScenarioDatum d = datum(true);
    describe_datum(d);
    const int n = static_cast<int>(c_.at("level").integer());
    const int m = static_cast<int>(c_.int_or("coarse", n / 3));
    CubeSet xs = x.at(n, ctx_.budget);
    AssouadEstimate a = assouad_estimate(xs, m);
    o.details.push_back("X: " + format_g12(a.value) + " at levels " + std::to_string(m) + "/" + std::to_string(n));
    std::vector<WeightedTerm> terms;
    for (std::size_t i = 0; i < d.projections.size(); ++i) {
      AssouadEstimate ai = assouad_estimate(project_cubes(d.projections[i], xs, ctx_.budget), m);
      o.details.push_back("P" + std::to_string(i + 1) + "(X): " + format_g12(ai.value));
      terms.push_back({to_double((*d.weights)[i]), ai.value});
    }
    finish(o, verdict(VerdictMode::assouad, a.value, terms, tolerance(kEstimatorTolerance)));
  }

  void constrained(CheckOutcome& o) {
    const bool self = o.kind == "self_product";
    c_.allow({"kind", "name", "set", "sets", "datum", "expect", "tolerance", "levels", "window", "dimension"});
    o.expected_holds = parse_expect(c_);
    ScenarioDatum d = datum(true);
    describe_datum(d);
    std::vector<Generator> xs;
    if (self) {
      Generator x = set();
      o.subject = set_name();
      xs.assign(d.projections.size(), x);
    } else {
      Node names = c_.at("sets");
      if (names.size() != d.projections.size()) names.fail("one set per projection is required");
      for (std::size_t i = 0; i < names.size(); ++i) {
        xs.push_back(parse_generator(names.at(i), ctx_.sets));
        o.subject += (i ? ", " : "") + (names.at(i).json().is_string() ? names.at(i).str() : xs.back().describe());
      }
    }
    const std::string dim = c_.str_or("dimension", self ? "lower" : "upper");
    if (dim != "upper" && dim != "lower") c_.at("dimension").fail("expected 'upper' or 'lower'");
    const DimMode mode = dim == "lower" ? DimMode::lower_box : DimMode::upper_box;
    const auto lv = levels();
    const auto w = window(lv);
    CountTable prod;
    prod.base = xs.front().base();
    std::vector<CountTable> parts(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) parts[i].base = xs[i].base();
    for (int n : lv) {
      std::vector<Integer> cs;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        auto c = xs[i].closed_form_count(n);
        cs.push_back(c ? *c : Integer(static_cast<unsigned long>(xs[i].at(n, ctx_.budget).size())));
        parts[i].add(n, cs.back());
      }
      auto materialize = [&] {
        std::vector<CubeSet> sets;
        for (const auto& g : xs) sets.push_back(g.at(n, ctx_.budget));
        return sets;
      };
      Integer c = constrained_product_count(d.projections, cs, materialize, ctx_.budget);
      if (n <= ctx_.cross_check_max_level) {
        Integer direct(static_cast<unsigned long>(constrained_product(d.projections, materialize(), ctx_.budget).size()));
        if (direct != c)
          fail_domain("constrained product count disagrees with enumeration at level " + std::to_string(n));
      }
      if (c == 0) fail_domain(c_.path() + ": constrained product is empty at level " + std::to_string(n));
      prod.add(n, c);
    }
    emit("product", prod);
    const double lhs = estimate_dim(prod, mode, w).value;
    o.details.push_back("product: " + format_g12(lhs));
    std::vector<WeightedTerm> terms;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      emit("part" + std::to_string(i + 1), parts[i]);
      const double e = estimate_dim(parts[i], mode, w).value;
      o.details.push_back("X" + std::to_string(i + 1) + ": " + format_g12(e));
      terms.push_back({to_double((*d.weights)[i]), e});
    }
    finish(o, verdict(mode == DimMode::lower_box ? VerdictMode::lower_box : VerdictMode::upper_box, lhs, terms,
                      tolerance(kExactTolerance)));
  }

  void sumset(CheckOutcome& o) {
    c_.allow({"kind", "name", "set", "d", "expect", "tolerance", "levels", "window"});
    o.expected_holds = parse_expect(c_);
    Generator x = set();
    o.subject = set_name();
    const int d = static_cast<int>(c_.at("d").integer());
    const auto lv = levels();
    const auto w = window(lv);
    CountTable t;
    t.base = x.base();
    for (int n : lv) t.add(n, Integer(static_cast<unsigned long>(constrained_sumset(x.at(n, ctx_.budget), d, ctx_.budget).size())));
    emit("sumset", t);
    const double lhs = estimate_dim(t, DimMode::upper_box, w).value;
    const double dx = estimate_dim(counts(x, lv, "set"), DimMode::upper_box, w).value;
    const auto& last = t.rows.back();
    Integer side;
    mpz_ui_pow_ui(side.get_mpz_t(), static_cast<unsigned long>(x.base()), static_cast<unsigned long>(last.level));
    o.details.push_back("sumset cells at level " + std::to_string(last.level) + ": " + last.count.get_str() + " of " +
                        side.get_str());
    o.details.push_back("sumset: " + format_g12(lhs) + ", X: " + format_g12(dx));
    finish(o, verdict(VerdictMode::upper_box, lhs, {{static_cast<double>(d) / x.dim(), dx}}, tolerance(kExactTolerance)));
  }

  void nonlinear(CheckOutcome& o) {
    c_.allow({"kind", "name", "set", "maps", "weights", "expect", "tolerance", "levels", "window", "statistic",
              "pad_cells", "lipschitz_safety"});
    o.expected_holds = parse_expect(c_);
    Generator x = set();
    o.subject = set_name();
    Node maps = c_.at("maps");
    std::vector<MapSpec> ts;
    for (std::size_t i = 0; i < maps.size(); ++i) ts.push_back(parse_map(maps.at(i)));
    const std::vector<Rational> ws = c_.at("weights").rationals();
    if (ws.size() != ts.size()) c_.at("weights").fail("one weight per map is required");
    Rational scaling;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      if (ws[i] <= 0) c_.at("weights").fail("weights must be positive");
      scaling += ws[i] * static_cast<long>(ts[i].target_dim());
    }
    if (scaling != x.dim()) c_.at("weights").fail("weights fail the scaling condition");
    ImageOptions io;
    io.pad_cells = static_cast<int>(c_.int_or("pad_cells", 0));
    io.lipschitz_safety = c_.num_or("lipschitz_safety", 2.0);
    const auto lv = levels();
    const auto w = window(lv);
    const SlopeStatistic st = statistic(SlopeStatistic::increment);
    std::vector<CubeSet> sets;
    for (int n : lv) sets.push_back(x.at(n, ctx_.budget));
    const double lhs = estimate_dim(counts(x, lv, "set"), DimMode::upper_box, w, st).value;
    o.details.push_back("X: " + format_g12(lhs));
    std::vector<WeightedTerm> terms;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      CountTable t;
      t.base = x.base();
      int radius = 0;
      for (const auto& s : sets) {
        NonlinearImage img = nonlinear_image(ts[i], s, io, ctx_.budget);
        radius = img.radius;
        t.add(s.level(), Integer(static_cast<unsigned long>(img.cells.size())));
      }
      emit("image" + std::to_string(i + 1), t);
      const double e = estimate_dim(t, DimMode::upper_box, w, st).value;
      o.details.push_back(ts[i].describe() + "(X): " + format_g12(e) + ", padding radius " + std::to_string(radius));
      terms.push_back({to_double(ws[i]), e});
    }
    finish(o, verdict(VerdictMode::nonlinear_upper, lhs, terms, tolerance(kEstimatorTolerance)));
  }

  void jacobian(CheckOutcome& o) {
    c_.allow({"kind", "name", "maps", "points", "low", "high", "h", "tol", "expect"});
    o.expected_holds = parse_expect(c_);
    Node maps = c_.at("maps");
    const long points = c_.int_or("points", 100);
    const double lo = c_.num_or("low", 0.25), hi = c_.num_or("high", 1.0), h = c_.num_or("h", 1e-5),
                 tol = c_.num_or("tol", 1e-6);
    std::mt19937_64 rng(ctx_.seed);
    std::uniform_real_distribution<double> u(lo, hi);
    o.holds = true;
    for (std::size_t i = 0; i < maps.size(); ++i) {
      MapSpec t = parse_map(maps.at(i));
      o.subject += (i ? ", " : "") + t.describe();
      const int want = t.kind() == MapSpec::Kind::radial ? t.domain_dim() - 1 : t.target_dim();
      long bad = 0;
      for (long p = 0; p < points; ++p) {
        std::vector<double> x(static_cast<std::size_t>(t.domain_dim()));
        for (auto& v : x) v = u(rng);
        if (jacobian_rank(t, x, h, tol) != want) ++bad;
      }
      o.details.push_back(t.describe() + ": rank " + std::to_string(want) + " at " + std::to_string(points - bad) + "/" +
                          std::to_string(points) + " points");
      o.holds = o.holds && bad == 0;
    }
  }

  void sweep(CheckOutcome& o) {
    c_.allow({"kind", "name", "set", "level", "directions", "threshold", "margin", "min_level", "max_below", "expect"});
    o.expected_holds = parse_expect(c_);
    Generator x = set();
    o.subject = set_name();
    SweepOptions so;
    so.margin = c_.num_or("margin", 0.05);
    so.min_level = static_cast<int>(c_.int_or("min_level", 0));
    so.budget = ctx_.budget;
    SweepResult s = sweep_directions(x.at(static_cast<int>(c_.at("level").integer()), ctx_.budget),
                                     static_cast<int>(c_.at("directions").integer()), c_.at("threshold").number(), so);
    ctx_.report->files["sweep_" + tag_ + ".csv"] = sweep_csv(s);
    const long max_below = c_.int_or("max_below", 1);
    o.holds = s.below_threshold_count <= static_cast<std::size_t>(max_below);
    o.details.push_back("X: " + format_g12(s.set_estimate) + ", threshold " + format_g12(s.threshold) + " minus margin " +
                        format_g12(s.margin));
    o.details.push_back(std::to_string(s.below_threshold_count) + " of " + std::to_string(s.estimates.size()) +
                        " directions below, allowed " + std::to_string(max_below));
  }

  void radial(CheckOutcome& o) {
    c_.allow({"kind", "name", "set", "pins", "expect", "guard", "tolerance", "levels", "pad_cells", "lipschitz_safety"});
    o.expected_holds = parse_expect(c_);
    Generator x = set();
    o.subject = set_name();
    Node pn = c_.at("pins");
    std::vector<std::vector<Rational>> pins;
    for (std::size_t i = 0; i < pn.size(); ++i) pins.push_back(pn.at(i).rationals());
    RadialOptions ro;
    const std::string guard = c_.str_or("guard", "ok");
    if (guard != "ok" && guard != "tripped") c_.at("guard").fail("expected 'ok' or 'tripped'");
    ro.expect_guard_failure = guard == "tripped";
    ro.tolerance = tolerance(kEstimatorTolerance);
    ro.image.pad_cells = static_cast<int>(c_.int_or("pad_cells", 0));
    ro.image.lipschitz_safety = c_.num_or("lipschitz_safety", 2.0);
    ro.budget = ctx_.budget;
    RadialReport r = radial_experiment([&](int n) { return x.at(n, ctx_.budget); }, levels(), pins, ro);
    if (ro.expect_guard_failure && r.guard.ok) c_.fail("guard was expected to trip but passed");
    emit("set", r.set_counts);
    for (std::size_t i = 0; i < r.pins.size(); ++i) emit("pin" + std::to_string(i + 1), r.pins[i].counts);
    ctx_.report->files["radial_" + tag_ + ".txt"] = format_radial_report(r);
    std::istringstream lines(format_radial_report(r));
    for (std::string line; std::getline(lines, line);) o.details.push_back(line);
    finish(o, r.verdict);
  }

  ScenarioContext& ctx_;
  const Node& c_;
  std::string tag_;
};

}  // namespace detail

inline std::string format_summary(const ScenarioReport& r) {
  std::string out = "scenario " + r.name + "\n";
  std::size_t row = 0;
  for (std::size_t i = 0; i < r.checks.size(); ++i) {
    const auto& c = r.checks[i];
    out += "\n[" + std::string(c.matches() ? "PASS" : "FAIL") + "] c" + std::to_string(i + 1) + " " + c.title;
    if (!c.subject.empty()) out += " on " + c.subject;
    out += "\n  expected " + std::string(c.expected_holds ? "holds" : "fails") + ", observed " +
           (c.holds ? "holds" : "fails") + "\n";
    if (c.verdict) {
      const auto& v = *c.verdict;
      out += "  verdict.csv row " + std::to_string(++row) + ": " + to_string(v.mode) + " lhs " + format_g12(v.lhs) +
             " rhs " + format_g12(v.rhs) + " slack " + format_g12(v.slack) + " tolerance " + format_g12(v.tolerance) +
             "\n";
    }
    for (const auto& d : c.details) out += "  " + d + "\n";
  }
  out += "\n" + std::string(r.all_match() ? "all checks match their expectations" : "some checks do not match") + "\n";
  return out;
}

/// Parse and run a scenario given as JSON text. Files are collected in the
/// report; write_report puts them on disk.
inline ScenarioReport run_scenario_text(const std::string& text, const std::string& source,
                                        const std::filesystem::path& dir, const RunOptions& opts = {}) {
  Json j = parse_json_text(text, source);
  Node root(j, source);
  root.allow({"name", "description", "seed", "falsifiers", "levels", "window", "cross_check_max_level", "sets",
              "datum", "checks"});
  ScenarioReport report;
  report.name = root.at("name").str();
  for (char ch : report.name)
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-'))
      root.at("name").fail("scenario names use letters, digits, '_' and '-'");
  report.out_dir = opts.out_dir / report.name;

  detail::ScenarioContext ctx;
  ctx.dir = dir;
  ctx.report = &report;
  ctx.budget = opts.budget;
  ctx.seed = opts.seed ? *opts.seed : static_cast<std::uint64_t>(root.int_or("seed", 1));
  ctx.falsifiers = static_cast<std::size_t>(root.int_or("falsifiers", 0));
  ctx.cross_check_max_level = static_cast<int>(root.int_or("cross_check_max_level", 0));
  ctx.levels = root.has("levels") ? parse_levels(root.at("levels")) : level_range(1, 8);
  if (root.has("window")) {
    auto w = root.at("window").integers();
    if (w.size() != 2 || w[0] > w[1]) root.at("window").fail("window must be [from, to]");
    ctx.window = std::pair<int, int>{w[0], w[1]};
  }
  if (root.has("sets")) {
    Node sets = root.at("sets");
    if (!sets.json().is_object()) sets.fail("expected an object of named sets");
    // definition order, so later sets may refer to earlier ones
    std::vector<std::string> order;
    for (auto it = sets.json().begin(); it != sets.json().end(); ++it) order.push_back(it.key());
    std::size_t pending = order.size();
    while (pending > 0) {
      std::size_t before = pending;
      for (const auto& name : order) {
        if (ctx.sets.count(name)) continue;
        try {
          ctx.sets.emplace(name, parse_generator(sets.at(name), ctx.sets));
          --pending;
        } catch (const Error&) {
          // retried once its references resolve
        }
      }
      if (pending == before) {
        for (const auto& name : order)
          if (!ctx.sets.count(name)) ctx.sets.emplace(name, parse_generator(sets.at(name), ctx.sets));
      }
    }
  }
  if (root.has("datum")) ctx.datum = parse_scenario_datum(root.at("datum"), dir);

  Node checks = root.at("checks");
  if (checks.size() == 0) checks.fail("no checks given");
  // validate datums before any counting
  for (std::size_t i = 0; i < checks.size(); ++i) {
    Node c = checks.at(i);
    const std::string kind = c.at("kind").str();
    detail::CheckRunner pre(ctx, c, i);
    if (kind == "projection_upper" || kind == "packing_as_upper" || kind == "all_lower" || kind == "mixed_lower" ||
        kind == "assouad" || kind == "constrained_product" || kind == "self_product")
      pre.datum(true);
  }
  for (std::size_t i = 0; i < checks.size(); ++i) {
    Node c = checks.at(i);
    detail::CheckRunner runner(ctx, c, i);
    CheckOutcome o = runner.run();
    if (c.has("name")) o.title = c.at("name").str();
    report.checks.push_back(std::move(o));
  }

  std::string verdicts = verdict_csv_header();
  for (const auto& c : report.checks)
    if (c.verdict) verdicts += verdict_csv_row(*c.verdict);
  report.files["verdict.csv"] = verdicts;
  report.files["datum_report.txt"] = ctx.datum_text.empty() ? "no datums referenced\n" : ctx.datum_text;
  report.files["summary.txt"] = format_summary(report);
  return report;
}

inline ScenarioReport run_scenario(const std::filesystem::path& path, const RunOptions& opts = {}) {
  return run_scenario_text(read_text_file(path.string()), path.filename().string(), path.parent_path(), opts);
}

inline void write_report(const ScenarioReport& r) {
  std::error_code ec;
  std::filesystem::create_directories(r.out_dir, ec);
  if (ec) fail_input("cannot create output directory " + r.out_dir.string() + ": " + ec.message());
  for (const auto& [name, contents] : r.files) {
    std::ofstream f(r.out_dir / name, std::ios::binary);
    if (!f) fail_input("cannot write " + (r.out_dir / name).string());
    f << contents;
  }
}

}  // namespace bllab
