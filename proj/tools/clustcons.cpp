// clustcons: run experiments, check schedules, run property suites, replot.
//
// Exit codes: 0 every verdict passed, 1 some verdict failed, 2 usage error.

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "clustcons/conditions.hpp"
#include "clustcons/experiments.hpp"
#include "clustcons/io.hpp"
#include "clustcons/properties.hpp"

namespace {

using namespace clustcons;

constexpr int exit_pass = 0;
constexpr int exit_fail = 1;
constexpr int exit_usage = 2;

Clustering parse_clustering(const std::string& arg, std::size_t n, const json& schedule_doc) {
  if (arg == "embedded") {
    if (!schedule_doc.contains("clusters")) throw std::invalid_argument("schedule file has no 'clusters' entry");
    return clustering_from_json(n, schedule_doc.at("clusters"));
  }
  if (std::filesystem::exists(arg)) {
    const json j = json::parse(read_file(arg));
    if (j.is_array()) return clustering_from_json(n, j);
    if (j.contains("clusters")) return clustering_from_json(n, j.at("clusters"));
    if (j.contains("assignment")) return Clustering::from_assignment(j.at("assignment").get<std::vector<ClusterId>>());
    throw std::invalid_argument("clustering file needs 'clusters' or 'assignment'");
  }
  // inline assignment, e.g. 0,0,1,1
  std::vector<ClusterId> assignment;
  std::istringstream in(arg);
  std::string cell;
  while (std::getline(in, cell, ',')) assignment.push_back(static_cast<ClusterId>(std::stoul(cell)));
  Clustering c = Clustering::from_assignment(std::move(assignment));
  if (c.n() != n) throw std::invalid_argument("clustering has " + std::to_string(c.n()) + " vertices, schedule has " + std::to_string(n));
  return c;
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed, std::optional<std::string> out_dir,
            std::optional<double> step, std::optional<double> horizon) {
  ExperimentConfig cfg;
  try {
    json j = json::parse(read_file(config_path));
    if (seed) j["seed"] = *seed;
    if (out_dir) j["out_dir"] = *out_dir;
    if (step) j["step"] = *step;
    if (horizon) j["horizon"] = *horizon;
    cfg = ExperimentConfig::from_json(j);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_usage;
  } catch (const json::exception& e) {
    std::cerr << "error: malformed config: " << e.what() << '\n';
    return exit_usage;
  }
  const RunResult res = simulate(cfg);
  const json report = write_outputs(res, cfg.out_dir);
  for (const auto& r : res.reports)
    std::cout << (r.passed() ? "PASS " : (r.verdict == Verdict::indeterminate ? "SKIP " : "FAIL ")) << r.assumption
              << ": " << r.message << '\n';
  std::cout << "wrote " << report["manifest"].size() << " files + report.json to " << cfg.out_dir << '\n';
  return res.all_passed() ? exit_pass : exit_fail;
}

int cmd_check(const std::string& schedule_path, const std::string& clustering_arg, double h, double delta, double M1) {
  CouplingSchedule schedule;
  Clustering c;
  json doc;
  try {
    doc = json::parse(read_file(schedule_path));
    schedule = schedule_from_json(doc);
    c = parse_clustering(clustering_arg, schedule.n(), doc);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_usage;
  }
  std::vector<ConditionReport> reports;
  reports.push_back(check_A1(schedule, schedule.start(), schedule.horizon(), h));
  const CommonInfluence ci = extract_common_influence(schedule, c, h);
  reports.push_back(ci.report);
  A4Options a4;
  a4.delta = delta;
  a4.M1 = M1;
  a4.h = h;
  reports.push_back(check_A4(schedule, c, a4));
  if (ci.ok()) reports.push_back(projection_radius_estimate(schedule, c, schedule.start(), schedule.horizon(), h).report);

  json out;
  out["conditions"] = json::array();
  bool ok = true;
  for (const auto& r : reports) {
    out["conditions"].push_back(r.to_json());
    ok = ok && r.passed();
  }
  std::cout << out.dump(2) << '\n';
  return ok ? exit_pass : exit_fail;
}

int cmd_props(std::size_t cases, std::uint64_t seed) {
  const std::size_t heavy = std::max<std::size_t>(1, cases / 50);
  const std::size_t runs = std::max<std::size_t>(1, cases / 200);
  const PropertyResult results[] = {
      hajnal_inequality_suite(cases, seed),
      phi_stochastic_suite(heavy, seed + 1, 6, 2.0),
      delta_edge_bound_suite(heavy, seed + 2),
      invariance_suite(runs, seed + 3),
      quotient_equivalence_suite(runs, seed + 4),
  };
  bool ok = true;
  for (const auto& r : results) {
    std::cout << r.line() << '\n';
    ok = ok && r.passed();
  }
  return ok ? exit_pass : exit_fail;
}

int cmd_plot(const std::string& csv, std::optional<std::string> out_dir) {
  const std::filesystem::path dir = out_dir ? std::filesystem::path(*out_dir) : std::filesystem::path(csv).parent_path();
  try {
    for (const auto& f : plot_from_csv(csv, dir.empty() ? "." : dir)) std::cout << "wrote " << (dir / f).string() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_usage;
  }
  return exit_pass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cluster consensus simulator for switching multi-agent networks"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<double> step, horizon;
  auto* run = app.add_subcommand("run", "Run a full experiment from a JSON config");
  run->add_option("config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--seed", seed, "Override the config seed");
  run->add_option("--out-dir", out_dir, "Override the output directory");
  run->add_option("--step", step, "Override the integration step");
  run->add_option("--horizon", horizon, "Override the horizon T");

  std::string schedule_path, clustering_arg = "embedded";
  double check_h = default_step, check_delta = 1.0, check_M1 = 10.0;
  auto* check = app.add_subcommand("check", "Check A1, A2, A4 and the projection radius for a schedule file");
  check->add_option("schedule", schedule_path, "Schedule JSON")->required();
  check->add_option("clustering", clustering_arg,
                    "Clustering: 'embedded', a JSON file, or an inline assignment like 0,0,1,1");
  check->add_option("--step", check_h, "Sampling / integration step");
  check->add_option("--delta", check_delta, "delta for the spanning-tree windows");
  check->add_option("--M1", check_M1, "Bound on integrated weights per sub-window");

  std::size_t cases = 1000;
  std::uint64_t props_seed = 1;
  auto* props = app.add_subcommand("props", "Run the property suites");
  props->add_option("--cases", cases, "Number of Hajnal cases (other suites scale from it)");
  props->add_option("--seed", props_seed, "Random seed");

  std::string csv_path;
  std::optional<std::string> plot_dir;
  auto* plot = app.add_subcommand("plot", "Regenerate SVG plots from a CSV");
  plot->add_option("csv", csv_path, "measures.csv or trajectory.csv")->required();
  plot->add_option("--out-dir", plot_dir, "Where to write the SVGs (default: next to the CSV)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_usage;
  }

  try {
    if (*run) return cmd_run(config_path, seed, out_dir, step, horizon);
    if (*check) return cmd_check(schedule_path, clustering_arg, check_h, check_delta, check_M1);
    if (*props) return cmd_props(cases, props_seed);
    if (*plot) return cmd_plot(csv_path, plot_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_fail;
  }
  return exit_usage;
}
