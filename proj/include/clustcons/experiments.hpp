#pragma once

// Config-driven reproduction of the switching-topology experiments: ring
// lattice and bipartite random graph models under random half-sine switching,
// sinusoidal cluster inputs, every condition checker, and CSV/JSON/SVG output.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "clustcons/conditions.hpp"
#include "clustcons/dynamics.hpp"
#include "clustcons/graph.hpp"
#include "clustcons/io.hpp"
#include "clustcons/measures.hpp"

namespace clustcons {

//! Malformed configuration; field() names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error("config field '" + field + "': " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct ExperimentConfig {
  enum class Model { ring_lattice, bipartite_random };

  Model model = Model::ring_lattice;
  std::size_t N = 16;
  std::size_t r = 2;
  std::size_t m = 4;
  std::size_t s = 2;
  std::size_t K = 2;
  double horizon = 50.0;
  double step = default_step;
  std::uint64_t seed = 1;
  double delta = 1.0;
  double M1 = 10.0;
  double delta_prime = 0.05;
  double alpha_max = 10.0;
  std::string input = "sin";
  std::string out_dir = "out";

  static ExperimentConfig defaults(Model model) {
    ExperimentConfig c;
    c.model = model;
    return c;
  }

  void validate() const {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("horizon", "must be positive");
    if (!(step > 0.0) || !(step < horizon)) throw ConfigError("step", "must be positive and below the horizon");
    if (!(delta >= 0.0)) throw ConfigError("delta", "must be nonnegative");
    if (!(M1 > 0.0)) throw ConfigError("M1", "must be positive");
    if (!(delta_prime > 0.0)) throw ConfigError("delta_prime", "must be positive");
    if (!(alpha_max >= 0.0)) throw ConfigError("alpha_max", "must be nonnegative");
    if (K < 2) throw ConfigError("K", "experiments need at least two clusters");
    static const std::vector<std::string> inputs{"sin", "cos", "zero", "constant", "exp_decay"};
    if (std::find(inputs.begin(), inputs.end(), input) == inputs.end())
      throw ConfigError("input", "unknown input kind '" + input + "'");
    if (model == Model::ring_lattice) {
      if (N == 0 || N % K != 0) throw ConfigError("K", "must divide N");
      if (r == 0 || 2 * r >= N) throw ConfigError("r", "need 0 < r and 2r < N");
    } else {
      if (N == 0 || N % 2 != 0) throw ConfigError("N", "must be even");
      if (K != 2) throw ConfigError("K", "bipartite model has exactly two clusters");
      if (s == 0 || s >= m) throw ConfigError("s", "need 0 < s < m");
      if (s > N / 2 - 1) throw ConfigError("s", "need s <= N/2 - 1");
      if (m - s > N / 2) throw ConfigError("m", "need m - s <= N/2");
    }
  }

  json to_json() const {
    return {{"model", model == Model::ring_lattice ? "ring_lattice" : "bipartite_random"},
            {"N", N},
            {"r", r},
            {"m", m},
            {"s", s},
            {"K", K},
            {"horizon", horizon},
            {"step", step},
            {"seed", seed},
            {"delta", delta},
            {"M1", M1},
            {"delta_prime", delta_prime},
            {"alpha_max", alpha_max},
            {"input", input},
            {"out_dir", out_dir}};
  }

  //! Missing fields keep their defaults; unknown fields are rejected.
  static ExperimentConfig from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("<root>", "config must be a JSON object");
    ExperimentConfig c;
    if (j.contains("model")) {
      const auto& v = j["model"];
      if (!v.is_string()) throw ConfigError("model", "must be a string");
      const auto name = v.get<std::string>();
      if (name == "ring_lattice")
        c.model = Model::ring_lattice;
      else if (name == "bipartite_random")
        c.model = Model::bipartite_random;
      else
        throw ConfigError("model", "unknown model '" + name + "'");
    }
    for (const auto& [key, value] : j.items()) {
      auto nonnegative_integer = [&] {
        if (!value.is_number_integer() || (!value.is_number_unsigned() && value.get<std::int64_t>() < 0))
          throw ConfigError(key, "must be a nonnegative integer");
      };
      auto as_count = [&](std::size_t& dst) {
        nonnegative_integer();
        dst = value.get<std::size_t>();
      };
      auto as_real = [&](double& dst) {
        if (!value.is_number()) throw ConfigError(key, "must be a number");
        dst = value.get<double>();
      };
      if (key == "model") continue;
      if (key == "N") as_count(c.N);
      else if (key == "r") as_count(c.r);
      else if (key == "m") as_count(c.m);
      else if (key == "s") as_count(c.s);
      else if (key == "K") as_count(c.K);
      else if (key == "horizon") as_real(c.horizon);
      else if (key == "step") as_real(c.step);
      else if (key == "delta") as_real(c.delta);
      else if (key == "M1") as_real(c.M1);
      else if (key == "delta_prime") as_real(c.delta_prime);
      else if (key == "alpha_max") as_real(c.alpha_max);
      else if (key == "seed") {
        nonnegative_integer();
        c.seed = value.get<std::uint64_t>();
      } else if (key == "input" || key == "out_dir") {
        if (!value.is_string()) throw ConfigError(key, "must be a string");
        (key == "input" ? c.input : c.out_dir) = value.get<std::string>();
      } else {
        throw ConfigError(key, "unknown field");
      }
    }
    c.validate();
    return c;
  }
};

inline std::function<double(double)> input_function(const std::string& kind) {
  if (kind == "sin") return [](double t) { return std::sin(t); };
  if (kind == "cos") return [](double t) { return std::cos(t); };
  if (kind == "zero") return [](double) { return 0.0; };
  if (kind == "constant") return [](double) { return 1.0; };
  if (kind == "exp_decay") return [](double t) { return std::exp(-t); };
  throw std::invalid_argument("unknown input kind '" + kind + "'");
}

//! Interval lengths ~ U(0,1) until T is covered; each interval picks one of the
//! realizations uniformly and carries the half-sine weight profile. The last
//! interval is cut at T but keeps its drawn duration.
template <std::uniform_random_bit_generator Rng>
CouplingSchedule build_switching_schedule(const std::vector<Adjacency>& realizations, Rng& rng, double t0, double T) {
  if (realizations.empty()) throw std::invalid_argument("switching schedule: no realizations");
  const std::size_t n = realizations.front().size();
  for (const auto& a : realizations)
    if (a.size() != n) throw std::invalid_argument("switching schedule: realizations differ in size");
  if (!(T > t0)) throw std::invalid_argument("switching schedule: need T > t0");

  std::vector<std::vector<Edge>> edge_sets;
  for (const auto& a : realizations) edge_sets.push_back(edges_from_adjacency(a));

  std::uniform_real_distribution<double> interval(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, realizations.size() - 1);
  std::vector<double> breaks{t0};
  std::vector<Segment> segments;
  double t = t0;
  while (t < T) {
    double dt = 0.0;
    while (!(dt > 0.0)) dt = interval(rng);
    const std::size_t which = pick(rng);
    const double end = t + dt >= T ? T : t + dt;
    if (!(end > t)) break;
    // rounding in t + dt may stretch the stored interval past dt by an ulp
    segments.push_back({edge_sets[which], WeightProfile::half_sine(std::max(dt, end - t))});
    breaks.push_back(end);
    t = end;
  }
  return CouplingSchedule(n, std::move(breaks), std::move(segments));
}

struct MeasureSeries {
  std::vector<double> times;
  std::vector<double> delta_c;
  std::vector<double> eta_c;
  std::vector<double> eta_c_plus_v;

  void write_csv(std::ostream& os) const {
    os << "t,delta_c,eta_c,eta_c_plus_v\n";
    std::string line;
    for (std::size_t i = 0; i < times.size(); ++i) {
      line.clear();
      detail::append_double(line, times[i]);
      for (double v : {delta_c[i], eta_c[i], eta_c_plus_v[i]}) {
        line += ',';
        detail::append_double(line, v);
      }
      os << line << '\n';
    }
  }
};

//! Sign changes (ignoring exact zeros) of each pairwise cluster-mean difference.
inline std::vector<std::size_t> count_zero_crossings(const std::vector<Vector>& cluster_values) {
  if (cluster_values.empty()) return {};
  const auto K = cluster_values.front().size();
  std::vector<std::size_t> counts;
  for (Eigen::Index p = 0; p < K; ++p)
    for (Eigen::Index q = p + 1; q < K; ++q) {
      std::size_t c = 0;
      int last = 0;
      for (const Vector& z : cluster_values) {
        const double d = z[p] - z[q];
        const int sign = d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
        if (sign == 0) continue;
        if (last != 0 && sign != last) ++c;
        last = sign;
      }
      counts.push_back(c);
    }
  return counts;
}

struct RunResult {
  ExperimentConfig config;
  Clustering clustering;
  std::vector<Adjacency> realizations;
  CouplingSchedule schedule;
  Vector alpha;
  Vector x0;
  Trajectory trajectory;
  MeasureSeries measures;
  std::vector<std::size_t> zero_crossings;
  std::vector<ConditionReport> reports;
  double final_delta_c = 0.0;
  double eta_c_tail_max = 0.0;
  double rho_hat = std::numeric_limits<double>::quiet_NaN();
  double lower_left = std::numeric_limits<double>::quiet_NaN();
  double invariance_max = std::numeric_limits<double>::quiet_NaN();
  bool common_influence = false;

  bool all_passed() const {
    return std::all_of(reports.begin(), reports.end(), [](const ConditionReport& r) { return r.passed(); });
  }
  const ConditionReport* find(const std::string& id) const {
    for (const auto& r : reports)
      if (r.assumption == id) return &r;
    return nullptr;
  }
};

//! Intra-cluster synchronization threshold on Delta_C(x(T)) and tail window
//! (fraction of the horizon) used for the eta statistics.
inline constexpr double sync_threshold = 1e-3;
inline constexpr double tail_fraction = 0.5;

//! Runs one seeded experiment in memory (no files written).
inline RunResult simulate(const ExperimentConfig& cfg) {
  cfg.validate();
  RunResult res;
  res.config = cfg;
  std::mt19937_64 rng(cfg.seed);

  if (cfg.model == ExperimentConfig::Model::ring_lattice) {
    GraphModel g = make_ring_lattice(cfg.N, cfg.r, cfg.K);
    res.clustering = g.clustering;
    res.realizations = {g.adjacency, g.adjacency};
  } else {
    GraphModel a = make_bipartite_random(cfg.N, cfg.m, cfg.s, rng);
    GraphModel b = make_bipartite_random(cfg.N, cfg.m, cfg.s, rng);
    res.clustering = a.clustering;
    res.realizations = {a.adjacency, b.adjacency};
  }
  const double t0 = 0.0, T = cfg.horizon, h = cfg.step;
  res.schedule = build_switching_schedule(res.realizations, rng, t0, T);

  // alpha_max scales one unit draw so paired seeds share every other random choice
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  res.alpha.resize(static_cast<Eigen::Index>(res.clustering.K()));
  for (Eigen::Index p = 0; p < res.alpha.size(); ++p) res.alpha[p] = cfg.alpha_max * unit(rng);
  std::uniform_real_distribution<double> initial(-1.0, 1.0);
  res.x0.resize(static_cast<Eigen::Index>(cfg.N));
  for (Eigen::Index i = 0; i < res.x0.size(); ++i) res.x0[i] = initial(rng);

  const InputSignal input = InputSignal::factored(res.clustering, res.alpha, input_function(cfg.input));
  const Clustering& c = res.clustering;

  res.reports.push_back(check_A1(res.schedule, t0, T, h));
  CommonInfluence ci = extract_common_influence(res.schedule, c, h);
  res.common_influence = ci.ok();
  res.reports.push_back(ci.report);
  res.reports.push_back(check_A3(input, t0, T, h));
  A4Options a4;
  a4.delta = cfg.delta;
  a4.M1 = cfg.M1;
  a4.h = h;
  res.reports.push_back(check_A4(res.schedule, c, a4));

  res.trajectory = integrate_state(res.schedule, input, res.x0, t0, T, h);
  std::vector<Vector> means;
  means.reserve(res.trajectory.size());
  auto& ms = res.measures;
  for (std::size_t i = 0; i < res.trajectory.size(); ++i) {
    const double t = res.trajectory.times[i];
    const Vector& x = res.trajectory.states[i];
    const Vector v = state_derivative(res.schedule, input, t, x);
    ms.times.push_back(t);
    ms.delta_c.push_back(cluster_hajnal_diameter(x, c));
    const double ex = eta_c_state(x, c);
    ms.eta_c.push_back(ex);
    ms.eta_c_plus_v.push_back(ex + eta_c_state(v, c));
    means.push_back(cluster_means(x, c));
  }
  res.zero_crossings = count_zero_crossings(means);
  res.final_delta_c = ms.delta_c.back();
  for (std::size_t i = detail::tail_begin(ms.times, tail_fraction); i < ms.times.size(); ++i)
    res.eta_c_tail_max = std::max(res.eta_c_tail_max, ms.eta_c[i]);

  ConditionReport sync;
  sync.assumption = "intra_cluster_sync";
  sync.grid = {t0, T, h};
  sync.value = res.final_delta_c;
  sync.parameters = {{"threshold", sync_threshold}};
  sync.verdict = res.final_delta_c < sync_threshold ? Verdict::pass : Verdict::fail;
  sync.message = "Delta_C(x(T)) = " + std::to_string(res.final_delta_c);
  res.reports.push_back(sync);

  ConditionReport sep;
  sep.assumption = "inter_cluster_separation";
  sep.grid = {t0, T, h};
  sep.value = res.eta_c_tail_max;
  sep.parameters = {{"delta_prime", cfg.delta_prime}, {"tail_fraction", tail_fraction}, {"representative", "cluster mean"}};
  sep.evidence = {{"zero_crossings", res.zero_crossings}};
  sep.verdict = res.eta_c_tail_max >= cfg.delta_prime ? Verdict::pass : Verdict::fail;
  sep.message = "tail max of eta_c(x) = " + std::to_string(res.eta_c_tail_max);
  res.reports.push_back(sep);

  if (ci.ok()) {
    const CouplingSchedule& B = *ci.B;
    res.reports.push_back(separation_condition(quotient_forced_series(B, input, t0, T, h), tail_fraction, cfg.delta_prime));
    res.reports.push_back(
        rank_condition(forced_response_series(B, input_function(cfg.input), t0, T, h), c.K(), 1e-9, tail_fraction));

    Vector y0(static_cast<Eigen::Index>(cfg.N));
    const Vector zbar = cluster_means(res.x0, c);
    for (VertexId i = 0; i < cfg.N; ++i)
      y0[static_cast<Eigen::Index>(i)] = zbar[static_cast<Eigen::Index>(c.cluster_of(i))];
    res.invariance_max = check_invariance(res.schedule, input, y0, t0, T, h);
    ConditionReport inv;
    inv.assumption = "invariance";
    inv.grid = {t0, T, h};
    inv.value = res.invariance_max;
    inv.parameters = {{"tol", integrator_tolerance}};
    inv.verdict = res.invariance_max <= integrator_tolerance ? Verdict::pass : Verdict::fail;
    inv.message = "max Delta_C along a run started in S_C = " + std::to_string(res.invariance_max);
    res.reports.push_back(inv);

    ProjectionRadius pr = projection_radius_estimate(res.schedule, c, t0, T, h);
    res.rho_hat = pr.rho;
    res.lower_left = pr.lower_left;
    res.reports.push_back(pr.report);
  } else {
    for (const char* id : {"separation", "rank_condition", "invariance", "projection_radius"}) {
      ConditionReport skipped;
      skipped.assumption = id;
      skipped.verdict = Verdict::indeterminate;
      skipped.message = "skipped: inter-cluster common influence does not hold";
      res.reports.push_back(skipped);
    }
  }
  return res;
}

struct ManifestEntry {
  std::string file;
  std::size_t bytes = 0;
  std::string sha256;
};

//! Writes trajectory.csv, measures.csv, schedule.json, the SVG plots and finally
//! report.json (which lists every other file with its hash).
inline json write_outputs(const RunResult& res, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<ManifestEntry> manifest;
  auto emit = [&](const std::string& name, const std::string& content) {
    write_file(dir / name, content);
    manifest.push_back({name, content.size(), sha256_hex(content)});
  };

  std::ostringstream traj;
  res.trajectory.write_csv(traj);
  emit("trajectory.csv", traj.str());
  std::ostringstream meas;
  res.measures.write_csv(meas);
  emit("measures.csv", meas.str());
  emit("schedule.json", schedule_to_json(res.schedule, &res.clustering).dump(1) + "\n");

  const auto& m = res.measures;
  emit("delta_c.svg", render_svg("Delta_C(x(t))", m.times, {{"Delta_C", m.delta_c, "#d62728"}}, true));
  emit("eta_c.svg", render_svg("eta_c(x(t)) [cluster means]", m.times, {{"eta_c", m.eta_c, "#1f77b4"}}));
  emit("eta_c_plus_v.svg",
       render_svg("eta_c(x(t)) + eta_c(v(t))", m.times, {{"eta_c + eta_c(v)", m.eta_c_plus_v, "#2ca02c"}}));
  {
    std::vector<PlotSeries> states;
    const auto n = res.x0.size();
    for (Eigen::Index i = 0; i < n; ++i) {
      PlotSeries s;
      s.label = "";
      s.color = res.clustering.cluster_of(static_cast<VertexId>(i)) % 2 == 0 ? "#d62728" : "#1f77b4";
      for (const Vector& x : res.trajectory.states) s.values.push_back(x[i]);
      states.push_back(std::move(s));
    }
    emit("states.svg", render_svg("x_i(t)", res.trajectory.times, states));
  }

  json report;
  report["config"] = res.config.to_json();
  report["alpha"] = std::vector<double>(res.alpha.data(), res.alpha.data() + res.alpha.size());
  report["x0"] = std::vector<double>(res.x0.data(), res.x0.data() + res.x0.size());
  report["switching_intervals"] = res.schedule.segment_count();
  report["final_delta_c"] = res.final_delta_c;
  report["eta_c_tail_max"] = res.eta_c_tail_max;
  report["eta_c_representative"] = "cluster mean";
  report["zero_crossings"] = res.zero_crossings;
  if (std::isfinite(res.rho_hat)) report["rho_hat"] = res.rho_hat;
  if (std::isfinite(res.lower_left)) report["lower_left_block"] = res.lower_left;
  json conditions = json::array();
  for (const auto& r : res.reports) conditions.push_back(r.to_json());
  report["conditions"] = std::move(conditions);
  report["all_passed"] = res.all_passed();
  json files = json::array();
  for (const auto& e : manifest) files.push_back({{"file", e.file}, {"bytes", e.bytes}, {"sha256", e.sha256}});
  report["manifest"] = std::move(files);
  write_file(dir / "report.json", report.dump(2) + "\n");
  return report;
}

inline json run_experiment(const ExperimentConfig& cfg) { return write_outputs(simulate(cfg), cfg.out_dir); }

//! Regenerates the measure plots from a measures.csv (or states.svg from a trajectory.csv).
inline std::vector<std::string> plot_from_csv(const std::filesystem::path& csv, const std::filesystem::path& out_dir) {
  const CsvTable t = read_csv(read_file(csv));
  std::filesystem::create_directories(out_dir);
  std::vector<std::string> written;
  const auto& times = t.column("t");
  if (t.has("delta_c")) {
    write_file(out_dir / "delta_c.svg", render_svg("Delta_C(x(t))", times, {{"Delta_C", t.column("delta_c"), "#d62728"}}, true));
    write_file(out_dir / "eta_c.svg", render_svg("eta_c(x(t)) [cluster means]", times, {{"eta_c", t.column("eta_c"), "#1f77b4"}}));
    write_file(out_dir / "eta_c_plus_v.svg", render_svg("eta_c(x(t)) + eta_c(v(t))", times,
                                                        {{"eta_c + eta_c(v)", t.column("eta_c_plus_v"), "#2ca02c"}}));
    written = {"delta_c.svg", "eta_c.svg", "eta_c_plus_v.svg"};
  } else if (t.has("x_0")) {
    std::vector<PlotSeries> states;
    for (const auto& name : t.header)
      if (name != "t") states.push_back({name, t.column(name), "#444444"});
    for (auto& s : states) s.label = "";
    write_file(out_dir / "states.svg", render_svg("x_i(t)", times, states));
    written = {"states.svg"};
  } else {
    throw std::invalid_argument("csv has neither measure nor state columns");
  }
  return written;
}

}  // namespace clustcons
