// bllab: command line front end for the dimension lab.
//
// Exit codes: 0 success, 1 verdict mismatch, 2 input or domain error,
// 3 cell budget exceeded.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "bllab/scenario.hpp"

using namespace bllab;

namespace {

struct Global {
  std::uint64_t seed = 1;
  bool seed_given = false;
  std::string out_dir = "out";
  std::size_t budget = kDefaultCellBudget;
};

// Inline JSON, or @path to read it from a file.
Json json_arg(const std::string& arg, const std::string& what) {
  if (!arg.empty() && arg[0] == '@') return parse_json_text(read_text_file(arg.substr(1)), arg.substr(1));
  return parse_json_text(arg, what);
}

Generator set_arg(const std::string& arg) {
  Json j = json_arg(arg, "--set");
  return parse_generator(Node(j, "--set"));
}

// "a:b" for a range, otherwise a comma separated list.
std::vector<int> levels_arg(const std::string& s) {
  Json j;
  auto colon = s.find(':');
  try {
    if (colon != std::string::npos) return level_range(std::stoi(s.substr(0, colon)), std::stoi(s.substr(colon + 1)));
    j = Json::array();
    std::stringstream ss(s);
    for (std::string tok; std::getline(ss, tok, ',');) j.push_back(std::stoi(tok));
  } catch (const std::logic_error&) {
    fail_input("--levels: expected 'from:to' or a comma separated list, got '" + s + "'");
  }
  return parse_levels(Node(j, "--levels"));
}

std::vector<Rational> rationals_arg(const std::string& s, const std::string& what) {
  std::vector<Rational> out;
  std::stringstream ss(s);
  for (std::string tok; std::getline(ss, tok, ',');) {
    try {
      out.push_back(parse_rational(tok));
    } catch (const Error& e) {
      fail_input(what + ": " + e.what());
    }
  }
  if (out.empty()) fail_input(what + ": no values given");
  return out;
}

// Rows separated by ';' or newlines, entries by spaces.
QMatrix matrix_arg(std::string s) {
  std::replace(s.begin(), s.end(), ';', '\n');
  return parse_matrix(s);
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream f(path, std::ios::binary);
  if (!f) fail_input("cannot write " + path.string());
  f << contents;
}

void emit(const std::string& output, const std::string& contents) {
  if (output.empty() || output == "-")
    std::cout << contents;
  else
    write_file(output, contents);
}

DimMode dim_mode_arg(const std::string& s) {
  if (s == "upper") return DimMode::upper_box;
  if (s == "lower") return DimMode::lower_box;
  fail_input("--mode: expected 'upper' or 'lower'");
}

SlopeStatistic statistic_arg(const std::string& s) {
  if (s == "per_level") return SlopeStatistic::per_level;
  if (s == "increment") return SlopeStatistic::increment;
  fail_input("--statistic: expected 'per_level' or 'increment'");
}

CriticalOptions family_options(const Global& g, std::size_t falsifiers) {
  CriticalOptions o;
  o.random_samples = falsifiers;
  o.seed = g.seed;
  return o;
}

int run_main(int argc, char** argv) {
  CLI::App app{"Brascamp-Lieb dimension lab"};
  app.require_subcommand(1);
  app.fallthrough();
  Global g;
  app.add_option("--seed", g.seed, "seed for random falsifier subspaces and sample points")
      ->each([&](const std::string&) { g.seed_given = true; });
  app.add_option("--out-dir", g.out_dir, "directory for report bundles")->capture_default_str();
  app.add_option("--budget-cells", g.budget, "largest number of cells any step may materialize")->capture_default_str();

  // gen
  auto* gen = app.add_subcommand("gen", "materialize a generated set at one level");
  std::string gen_set, gen_out;
  int gen_level = 0;
  gen->add_option("--set", gen_set, "set spec as JSON, or @file")->required();
  gen->add_option("--level", gen_level, "grid level n")->required();
  gen->add_option("-o,--output", gen_out, "output file (default stdout)");
  gen->callback([&] { emit(gen_out, format_cubeset(set_arg(gen_set).at(gen_level, g.budget))); });

  // project
  auto* proj = app.add_subcommand("project", "image of a cube set under a linear or nonlinear map");
  std::string proj_in, proj_matrix, proj_map, proj_out;
  proj->add_option("-i,--input", proj_in, "cube set file")->required();
  auto* mopt = proj->add_option("--matrix", proj_matrix, "rational matrix, rows separated by ';'");
  proj->add_option("--map", proj_map, "map spec as JSON, or @file")->excludes(mopt);
  proj->add_option("-o,--output", proj_out, "output file (default stdout)");
  proj->callback([&] {
    CubeSet x = parse_cubeset(read_text_file(proj_in));
    if (!proj_matrix.empty()) {
      emit(proj_out, format_cubeset(project_cubes(LinearSurjection(matrix_arg(proj_matrix)), x, g.budget)));
    } else if (!proj_map.empty()) {
      Json j = json_arg(proj_map, "--map");
      NonlinearImage img = nonlinear_image(parse_map(Node(j, "--map")), x, ImageOptions{}, g.budget);
      std::cerr << "padding radius " << img.radius << ", Lipschitz estimate " << format_g12(img.lipschitz_estimate)
                << "\n";
      emit(proj_out, format_cubeset(img.cells));
    } else {
      fail_input("project needs --matrix or --map");
    }
  });

  // blcheck
  auto* blc = app.add_subcommand("blcheck", "scaling and dimension conditions of a datum file");
  std::string blc_datum;
  std::size_t blc_falsifiers = 0;
  blc->add_option("--datum", blc_datum, "datum file")->required();
  blc->add_option("--falsifiers", blc_falsifiers, "random subspaces added to the family")->capture_default_str();
  int status = 0;
  blc->callback([&] {
    DatumFile f = load_datum(blc_datum);
    SubspaceFamily fam = critical_subspaces(f.projections, family_options(g, blc_falsifiers));
    std::cout << "family: " << fam.members.size() << " subspaces" << (fam.truncated ? " (truncated)" : "") << "\n";
    FeasibilityResult feas = bl_feasibility(f.projections, fam);
    std::cout << "BL-feasible: " << (feas.feasible ? "yes" : "no") << "\n";
    if (!f.weights) return;
    ConditionReport r = check_dimension_condition(f.datum(), fam);
    std::cout << "scaling: " << (r.scaling_ok ? "ok" : "violated") << "\n"
              << "dimension condition: " << (r.dimension_ok ? "ok" : "violated") << "\n";
    if (r.violating_subspace) std::cout << "violating subspace: " << detail::format_subspace(*r.violating_subspace) << "\n";
    if (!(r.scaling_ok && r.dimension_ok)) status = 1;
  });

  // blopt
  auto* blo = app.add_subcommand("blopt", "minimize sum c_i s_i over the weight polytope");
  std::string blo_datum, blo_s;
  std::size_t blo_falsifiers = 0;
  blo->add_option("--datum", blo_datum, "datum file (weights are ignored)")->required();
  blo->add_option("--s", blo_s, "comma separated values s_i")->required();
  blo->add_option("--falsifiers", blo_falsifiers, "random subspaces added to the family")->capture_default_str();
  blo->callback([&] {
    DatumFile f = load_datum(blo_datum);
    WeightSolution w = optimize_weights(f.projections, rationals_arg(blo_s, "--s"),
                                        critical_subspaces(f.projections, family_options(g, blo_falsifiers)));
    if (w.feasible) {
      std::cout << "weights";
      for (const auto& c : w.weights) std::cout << " " << to_short_string(c);
      std::cout << "\nobjective " << to_short_string(*w.objective) << "\n";
    } else {
      std::cout << "polytope empty\nobjective +inf\n";
      if (w.violating_subspace) std::cout << "violating subspace " << detail::format_subspace(*w.violating_subspace) << "\n";
    }
  });

  // dim
  auto* dim = app.add_subcommand("dim", "box counts and a dimension estimate");
  std::string dim_set, dim_levels = "1:8", dim_mode = "upper", dim_stat = "per_level";
  dim->add_option("--set", dim_set, "set spec as JSON, or @file")->required();
  dim->add_option("--levels", dim_levels, "'from:to' or a list")->capture_default_str();
  dim->add_option("--mode", dim_mode, "upper or lower")->capture_default_str();
  dim->add_option("--statistic", dim_stat, "per_level or increment")->capture_default_str();
  dim->callback([&] {
    CountTable t = box_counts(set_arg(dim_set), levels_arg(dim_levels), g.budget);
    std::cout << counts_csv(t);
    DimEstimate e = estimate_dim(t, dim_mode_arg(dim_mode), {t.rows.front().level, t.rows.back().level},
                                 statistic_arg(dim_stat));
    std::cout << "estimate " << format_g12(e.value) << "\n";
  });

  // verify
  auto* ver = app.add_subcommand("verify", "projection inequality verdict for a set and a datum");
  std::string ver_set, ver_datum, ver_levels = "1:8", ver_mode = "upper_box", ver_expect = "holds";
  int ver_j = 1;
  double ver_tol = -1;
  ver->add_option("--set", ver_set, "set spec as JSON, or @file")->required();
  ver->add_option("--datum", ver_datum, "datum file with weights")->required();
  ver->add_option("--levels", ver_levels, "'from:to' or a list")->capture_default_str();
  ver->add_option("--mode", ver_mode, "upper_box, packing_as_upper, lower_box or mixed_lower")->capture_default_str();
  ver->add_option("--j", ver_j, "the lower term for mixed_lower (1-based)")->capture_default_str();
  ver->add_option("--expect", ver_expect, "holds or fails")->capture_default_str();
  ver->add_option("--tolerance", ver_tol, "verdict tolerance (default exact)");
  ver->callback([&] {
    const std::map<std::string, std::string> kinds{{"upper_box", "projection_upper"},
                                                   {"packing_as_upper", "packing_as_upper"},
                                                   {"lower_box", "all_lower"},
                                                   {"mixed_lower", "mixed_lower"}};
    auto it = kinds.find(ver_mode);
    if (it == kinds.end()) fail_input("--mode: unknown verdict mode '" + ver_mode + "'");
    Json check = {{"kind", it->second}, {"set", json_arg(ver_set, "--set")}, {"expect", ver_expect},
                  {"datum", {{"file", std::filesystem::absolute(ver_datum).string()}}}};
    if (ver_mode == "mixed_lower") check["j"] = ver_j;
    if (ver_tol >= 0) check["tolerance"] = ver_tol;
    Json scen = {{"name", "verify"}, {"checks", Json::array({check})}};
    auto lv = levels_arg(ver_levels);
    scen["levels"] = lv;
    RunOptions o;
    o.out_dir = g.out_dir;
    o.budget = g.budget;
    ScenarioReport r = run_scenario_text(scen.dump(), "verify", ".", o);
    std::cout << r.files["verdict.csv"];
    if (!r.all_match()) status = 1;
  });

  // sweep
  auto* sw = app.add_subcommand("sweep", "upper box dimension of projections onto many directions");
  std::string sw_set;
  int sw_level = 7, sw_dirs = 180;
  double sw_threshold = 0.5, sw_margin = 0.05;
  sw->add_option("--set", sw_set, "set spec as JSON, or @file")->required();
  sw->add_option("--level", sw_level, "grid level n")->capture_default_str();
  sw->add_option("--directions", sw_dirs, "number of directions")->capture_default_str();
  sw->add_option("--threshold", sw_threshold, "fraction of the reference dimension")->capture_default_str();
  sw->add_option("--margin", sw_margin, "finite-scale margin")->capture_default_str();
  sw->callback([&] {
    SweepOptions so;
    so.margin = sw_margin;
    so.budget = g.budget;
    SweepResult s = sweep_directions(set_arg(sw_set).at(sw_level, g.budget), sw_dirs, sw_threshold, so);
    auto path = std::filesystem::path(g.out_dir) / "sweep.csv";
    write_file(path, sweep_csv(s));
    std::cout << "set estimate " << format_g12(s.set_estimate) << ", threshold " << format_g12(s.threshold)
              << ", margin " << format_g12(s.margin) << "\n"
              << s.below_threshold_count << " of " << s.estimates.size() << " directions below\n"
              << "wrote " << path.string() << "\n";
  });

  // radial
  auto* rad = app.add_subcommand("radial", "radial projections from d pins");
  std::string rad_set, rad_levels = "3:8";
  std::vector<std::string> rad_pins;
  bool rad_expect_fail = false;
  rad->add_option("--set", rad_set, "set spec as JSON, or @file")->required();
  rad->add_option("--levels", rad_levels, "'from:to' or a list")->capture_default_str();
  rad->add_option("--pin", rad_pins, "pin as comma separated rationals; repeat d times")->required();
  rad->add_flag("--expect-guard-failure", rad_expect_fail, "report the counterexample instead of failing");
  rad->callback([&] {
    Generator x = set_arg(rad_set);
    std::vector<std::vector<Rational>> pins;
    for (const auto& p : rad_pins) pins.push_back(rationals_arg(p, "--pin"));
    RadialOptions ro;
    ro.expect_guard_failure = rad_expect_fail;
    ro.budget = g.budget;
    RadialReport r = radial_experiment([&](int n) { return x.at(n, g.budget); }, levels_arg(rad_levels), pins, ro);
    std::cout << format_radial_report(r);
    if (rad_expect_fail && r.guard.ok) status = 1;
  });

  // run
  auto* run = app.add_subcommand("run", "run scenario files and write their report bundles");
  std::vector<std::string> scenarios;
  run->add_option("scenario", scenarios, "scenario JSON files")->required()->check(CLI::ExistingFile);
  run->callback([&] {
    RunOptions o;
    o.out_dir = g.out_dir;
    o.budget = g.budget;
    if (g.seed_given) o.seed = g.seed;
    for (const auto& path : scenarios) {
      ScenarioReport r = run_scenario(path, o);
      write_report(r);
      std::cout << r.files["summary.txt"] << "wrote " << r.out_dir.string() << "\n";
      if (!r.all_match()) status = 1;
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_main(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::budget ? 3 : 2;
  }
}
