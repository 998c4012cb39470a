// Command-line driver: closed-loop simulation, cost-difference sweeps,
// stability certification, and deterministic figure-data bundles.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "mismpc/closedloop.hpp"
#include "mismpc/compfn.hpp"
#include "mismpc/errors.hpp"
#include "mismpc/io.hpp"
#include "mismpc/ocp.hpp"
#include "mismpc/scenario.hpp"
#include "mismpc/terminal.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace mismpc;

namespace {

constexpr int kExitInvalid = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitUnstable = 4;
constexpr double kPi = 3.14159265358979323846;

const char* kSeriesColors[] = {"#1f6fb2", "#d1495b", "#2e8b57", "#e0a100",
                               "#7b5ea7", "#5ca4c4", "#8c564b", "#444444"};

struct Options {
  std::string config_path;
  std::string scenario;
  std::vector<std::string> theta_flags;
  std::vector<std::string> x0_flags;
  double rho = std::numeric_limits<double>::quiet_NaN();
  double delta = std::numeric_limits<double>::quiet_NaN();
  std::string out;
  std::uint64_t seed = 1;
  bool seed_set = false;
  int kmax = 0;  // 0: scenario default
  std::string levels_flag;
  bool serial = false;
  int x_points = 0;      // 0: scenario default
  int theta_points = 0;  // 0: scenario default
};

Vec parse_num_list(const std::string& s) {
  Vec v;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      size_t used = 0;
      const double d = std::stod(tok, &used);
      while (used < tok.size() && std::isspace(static_cast<unsigned char>(tok[used]))) ++used;
      if (used != tok.size()) throw std::invalid_argument(tok);
      v.push_back(d);
    } catch (const std::exception&) {
      throw invalid_input("cannot parse number list '" + s + "'");
    }
  }
  if (v.empty()) throw invalid_input("empty number list");
  return v;
}

std::vector<double> linspace(double lo, double hi, int points) {
  if (points < 2) throw invalid_input("grid needs at least 2 points");
  std::vector<double> g(static_cast<size_t>(points));
  for (int i = 0; i < points; ++i)
    g[static_cast<size_t>(i)] = lo + (hi - lo) * i / (points - 1);
  return g;
}

// Scalar parameter values embed into the gain-offset coordinate for the
// three-parameter pendulum and pass through unchanged otherwise.
Vec embed_theta(const Scenario& sc, double t) {
  Vec th(static_cast<size_t>(sc.plant.n_theta), 0.0);
  th[sc.plant.n_theta == 3 ? 1 : 0] = t;
  return th;
}

Vec as_theta(const Scenario& sc, const Vec& raw) {
  if (static_cast<int>(raw.size()) == sc.plant.n_theta) return raw;
  if (raw.size() == 1) return embed_theta(sc, raw[0]);
  throw invalid_input("theta needs 1 or " + std::to_string(sc.plant.n_theta) +
                      " entries for scenario '" + sc.name + "'");
}

Vec as_state(const Scenario& sc, const Vec& raw) {
  if (static_cast<int>(raw.size()) == sc.plant.n) return raw;
  throw invalid_input("x0 needs " + std::to_string(sc.plant.n) +
                      " entries for scenario '" + sc.name + "'");
}

std::string vec_to_label(const Vec& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v[i]);
    s += buf;
  }
  return v.size() == 1 ? s : "(" + s + ")";
}

ordered_json json_num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return nullptr;
  return v > 0 ? "inf" : "-inf";
}

// Resolved configuration: config file as base, flags override, scenario
// defaults fill the gaps.
struct Resolved {
  Scenario sc;
  std::vector<Vec> theta_list;
  std::vector<Vec> x0_list;
  double rho = 0.0;
  double delta = 0.0;
  std::string out = "out";
  std::uint64_t seed = 1;
  int kmax = 0;
  std::vector<double> levels{-1.0, -0.1, 0.0, 0.1, 1.0};
  bool parallel = true;
  int x_points = 0;
  int theta_points = 0;
};

Vec default_x0(const Scenario& sc) {
  if (sc.name == "integrator") return {3.0};
  if (sc.name == "pendulum") return {kPi, 0.0};
  return {2.0};
}

int default_kmax(const Scenario& sc) {
  if (sc.name == "pendulum") return 150;
  if (sc.name == "sin") return 200;
  return 60;
}

std::vector<Vec> json_vec_list(const ordered_json& node, int dim, const char* what) {
  std::vector<Vec> out;
  if (!node.is_array()) throw invalid_input(std::string(what) + " must be an array");
  const bool nested = !node.empty() && node.front().is_array();
  if (nested) {
    for (const auto& item : node) {
      Vec v;
      for (const auto& x : item) v.push_back(x.get<double>());
      out.push_back(v);
    }
  } else if (dim == 1 || static_cast<int>(node.size()) != dim) {
    for (const auto& x : node) out.push_back({x.get<double>()});
  } else {
    Vec v;
    for (const auto& x : node) v.push_back(x.get<double>());
    out.push_back(v);
  }
  return out;
}

Resolved resolve(const Options& opts) {
  ordered_json cfg = ordered_json::object();
  if (!opts.config_path.empty()) {
    std::ifstream in(opts.config_path);
    if (!in) throw invalid_input("cannot open config file " + opts.config_path);
    try {
      in >> cfg;
    } catch (const std::exception& e) {
      throw invalid_input("config parse error: " + std::string(e.what()));
    }
    if (!cfg.is_object()) throw invalid_input("config root must be a JSON object");
  }

  std::string name = opts.scenario;
  if (name.empty() && cfg.contains("scenario")) name = cfg["scenario"].get<std::string>();
  if (name.empty()) throw invalid_input("no scenario given (use --scenario or a config file)");

  Resolved r{make_scenario(name), {}, {}};

  if (cfg.contains("theta"))
    for (const auto& v : json_vec_list(cfg["theta"], r.sc.plant.n_theta, "theta"))
      r.theta_list.push_back(as_theta(r.sc, v));
  if (cfg.contains("x0"))
    for (const auto& v : json_vec_list(cfg["x0"], r.sc.plant.n, "x0"))
      r.x0_list.push_back(as_state(r.sc, v));
  if (!opts.theta_flags.empty()) {
    r.theta_list.clear();
    for (const auto& s : opts.theta_flags) r.theta_list.push_back(as_theta(r.sc, parse_num_list(s)));
  }
  if (!opts.x0_flags.empty()) {
    r.x0_list.clear();
    for (const auto& s : opts.x0_flags) r.x0_list.push_back(as_state(r.sc, parse_num_list(s)));
  }
  if (r.theta_list.empty())
    r.theta_list.push_back(Vec(static_cast<size_t>(r.sc.plant.n_theta), 0.0));
  if (r.x0_list.empty()) r.x0_list.push_back(default_x0(r.sc));

  r.rho = !std::isnan(opts.rho)          ? opts.rho
          : cfg.contains("rho")          ? cfg["rho"].get<double>()
                                         : r.sc.default_rho;
  r.delta = !std::isnan(opts.delta)      ? opts.delta
            : cfg.contains("delta")      ? cfg["delta"].get<double>()
                                         : r.sc.default_delta;
  r.out = !opts.out.empty() ? opts.out
          : cfg.contains("out") ? cfg["out"].get<std::string>()
                                : std::string("out");
  r.seed = opts.seed_set ? opts.seed
           : cfg.contains("seed") ? cfg["seed"].get<std::uint64_t>()
                                  : 1;
  r.kmax = opts.kmax > 0 ? opts.kmax
           : cfg.contains("kmax") ? cfg["kmax"].get<int>()
                                  : default_kmax(r.sc);
  if (r.kmax < 1) throw invalid_input("kmax must be positive");
  if (!(r.rho > 0.0) || !(r.delta >= 0.0) || !std::isfinite(r.rho) || !std::isfinite(r.delta))
    throw invalid_input("rho must be positive and delta nonnegative");

  if (!opts.levels_flag.empty()) {
    r.levels = parse_num_list(opts.levels_flag);
  } else if (cfg.contains("levels")) {
    r.levels.clear();
    for (const auto& x : cfg["levels"]) r.levels.push_back(x.get<double>());
    if (r.levels.empty()) throw invalid_input("levels must be nonempty");
  }
  if (opts.serial) r.parallel = false;
  else if (cfg.contains("parallel")) r.parallel = cfg["parallel"].get<bool>();
  r.x_points = opts.x_points > 0 ? opts.x_points
               : cfg.contains("x_points") ? cfg["x_points"].get<int>()
                                          : r.sc.x_grid.points;
  r.theta_points = opts.theta_points > 0 ? opts.theta_points
                   : cfg.contains("theta_points") ? cfg["theta_points"].get<int>()
                                                  : r.sc.theta_grid.points;
  return r;
}

// ---- simulate ---------------------------------------------------------------

struct RunRecord {
  Vec x0;
  Vec theta;
  ClosedLoopRun run;
};

std::vector<std::vector<double>> run_rows(const Scenario& sc, const ClosedLoopRun& run) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::vector<double>> rows;
  for (size_t k = 0; k < run.states.size(); ++k) {
    std::vector<double> row{static_cast<double>(k)};
    for (double xi : run.states[k]) row.push_back(xi);
    for (int j = 0; j < sc.plant.m; ++j)
      row.push_back(k < run.inputs.size() ? run.inputs[k][static_cast<size_t>(j)] : nan);
    row.push_back(run.values[k]);
    row.push_back(k + 1 < run.values.size() ? run.delta_v[k] : nan);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<std::string> run_header(const Scenario& sc) {
  std::vector<std::string> header{"k"};
  for (int i = 0; i < sc.plant.n; ++i) header.push_back("x" + std::to_string(i + 1));
  for (int j = 0; j < sc.plant.m; ++j) header.push_back("u" + std::to_string(j + 1));
  header.push_back("V");
  header.push_back("dV");
  return header;
}

std::vector<RunRecord> simulate_runs(const Resolved& r) {
  std::unique_ptr<Policy> policy = r.sc.make_policy();
  std::vector<RunRecord> records;
  for (const Vec& x0 : r.x0_list) {
    for (const Vec& th : r.theta_list) {
      policy->reset();
      records.push_back(
          {x0, th,
           run_closed_loop(*policy, r.sc.plant, x0, constant_theta(th, r.kmax), r.kmax,
                           r.sc.sim_box)});
    }
  }
  return records;
}

void write_state_charts(const Resolved& r, const std::vector<RunRecord>& records,
                        const std::string& stem) {
  for (int coord = 0; coord < r.sc.plant.n; ++coord) {
    SvgChart chart;
    chart.title = r.sc.name + " closed loop";
    chart.x_label = "k";
    chart.y_label = "x" + std::to_string(coord + 1);
    size_t ci = 0;
    for (const auto& rec : records) {
      SvgSeries s;
      for (size_t k = 0; k < rec.run.states.size(); ++k) {
        s.line.xs.push_back(static_cast<double>(k));
        s.line.ys.push_back(rec.run.states[k][static_cast<size_t>(coord)]);
      }
      s.color = kSeriesColors[ci % 8];
      s.label = "x0=" + vec_to_label(rec.x0) + " theta=" + vec_to_label(rec.theta);
      ++ci;
      chart.series.push_back(std::move(s));
    }
    write_svg(stem + "_x" + std::to_string(coord + 1) + ".svg", chart);
  }
}

int cmd_simulate(const Resolved& r) {
  fs::create_directories(r.out);
  const std::vector<RunRecord> records = simulate_runs(r);
  const std::vector<std::string> header = run_header(r.sc);
  int idx = 0;
  for (const auto& rec : records) {
    ++idx;
    write_csv(r.out + "/run_" + std::to_string(idx) + ".csv", header, run_rows(r.sc, rec.run));
  }
  write_state_charts(r, records, r.out + "/state");
  int escaped = 0;
  for (const auto& rec : records)
    if (rec.run.escaped) ++escaped;
  std::cout << "simulate " << r.sc.name << ": " << records.size() << " runs, " << escaped
            << " escaped, outputs in " << r.out << "\n";
  return 0;
}

// ---- sweep ------------------------------------------------------------------

struct SweepData {
  std::vector<double> x_axis;
  std::vector<double> t_axis;
  CostDifferenceField field;
};

SweepData sweep_field(const Resolved& r) {
  SweepData sd;
  sd.x_axis = linspace(r.sc.x_grid.lo, r.sc.x_grid.hi, r.x_points);
  sd.t_axis = linspace(r.sc.theta_grid.lo, r.sc.theta_grid.hi, r.theta_points);
  std::vector<Vec> xg, tg;
  for (double x : sd.x_axis) {
    Vec xv(static_cast<size_t>(r.sc.plant.n), 0.0);
    xv[0] = x;
    xg.push_back(xv);
  }
  for (double t : sd.t_axis) tg.push_back(embed_theta(r.sc, t));
  std::unique_ptr<Policy> policy = r.sc.make_policy();
  sd.field = cost_difference_field(*policy, r.sc.plant, xg, tg, r.parallel);
  return sd;
}

void write_field_csv(const std::string& path, const Scenario& sc, const SweepData& sd) {
  std::vector<std::string> header;
  for (int i = 0; i < sc.plant.n; ++i) header.push_back("x" + std::to_string(i + 1));
  for (int i = 0; i < sc.plant.n_theta; ++i) header.push_back("theta" + std::to_string(i + 1));
  header.push_back("dv");
  header.push_back("feasible");
  header.push_back("value");
  std::vector<std::vector<double>> rows;
  const size_t nt = sd.field.theta_grid.size();
  for (size_t i = 0; i < sd.field.x_grid.size(); ++i) {
    for (size_t j = 0; j < nt; ++j) {
      std::vector<double> row;
      for (double v : sd.field.x_grid[i]) row.push_back(v);
      for (double v : sd.field.theta_grid[j]) row.push_back(v);
      row.push_back(sd.field.dv[i * nt + j]);
      row.push_back(static_cast<double>(sd.field.feasible[i * nt + j]));
      row.push_back(sd.field.value_at_x[i]);
      rows.push_back(std::move(row));
    }
  }
  write_csv(path, header, rows);
}

void write_contour_svg(const std::string& path, const Resolved& r, const SweepData& sd) {
  SvgChart chart;
  chart.title = r.sc.name + " cost difference";
  chart.x_label = "x";
  chart.y_label = "theta";
  chart.has_range = true;
  chart.x_min = sd.x_axis.front();
  chart.x_max = sd.x_axis.back();
  chart.y_min = sd.t_axis.front();
  chart.y_max = sd.t_axis.back();
  size_t ci = 0;
  for (double level : r.levels) {
    const auto lines = marching_squares(sd.x_axis, sd.t_axis, sd.field.dv, level);
    const std::string color = kSeriesColors[ci % 8];
    char lbl[48];
    std::snprintf(lbl, sizeof lbl, "dV = %g", level);
    bool labeled = false;
    for (const auto& pl : lines) {
      SvgSeries s;
      s.line = pl;
      s.color = color;
      if (!labeled) {
        s.label = lbl;
        labeled = true;
      }
      chart.series.push_back(std::move(s));
    }
    if (!labeled) {
      // Keep the legend entry even when the level set is empty.
      SvgSeries s;
      s.color = color;
      s.label = lbl;
      chart.series.push_back(std::move(s));
    }
    ++ci;
  }
  write_svg(path, chart);
}

int cmd_sweep(const Resolved& r) {
  fs::create_directories(r.out);
  const SweepData sd = sweep_field(r);
  write_field_csv(r.out + "/field.csv", r.sc, sd);
  write_contour_svg(r.out + "/contour.svg", r, sd);
  size_t infeasible = 0;
  for (auto f : sd.field.feasible)
    if (!f) ++infeasible;
  std::cout << "sweep " << r.sc.name << ": " << sd.x_axis.size() << "x" << sd.t_axis.size()
            << " grid, " << infeasible << " infeasible cells, outputs in " << r.out << "\n";
  return 0;
}

// ---- certify ----------------------------------------------------------------

// Policies whose value is a declared Lyapunov candidate instead of the
// optimal cost; the control law is unchanged.
class CandidateValuePolicy final : public Policy {
 public:
  CandidateValuePolicy(std::unique_ptr<Policy> inner, std::function<double(const Vec&)> v)
      : inner_(std::move(inner)), v_(std::move(v)) {}
  Decision decide(const Vec& x) override { return patch(inner_->decide(x), x); }
  Decision evaluate(const Vec& x) const override { return patch(inner_->evaluate(x), x); }
  double value(const Vec& x) const override { return v_(x); }
  void reset() override { inner_->reset(); }
  std::unique_ptr<Policy> clone() const override {
    return std::make_unique<CandidateValuePolicy>(inner_->clone(), v_);
  }

 private:
  Decision patch(Decision d, const Vec& x) const {
    d.value = v_(x);
    d.feasible = d.feasible && std::isfinite(d.value);
    return d;
  }
  std::unique_ptr<Policy> inner_;
  std::function<double(const Vec&)> v_;
};

std::unique_ptr<Policy> certification_policy(const Scenario& sc) {
  std::unique_ptr<Policy> p = sc.make_policy();
  if (sc.candidate) return std::make_unique<CandidateValuePolicy>(std::move(p), sc.candidate->V);
  return p;
}

std::vector<Vec> certification_states(const Scenario& sc, int scalar_points) {
  std::vector<Vec> xs;
  if (sc.plant.n == 1) {
    for (double x : linspace(sc.x_grid.lo, sc.x_grid.hi, scalar_points)) xs.push_back({x});
    return xs;
  }
  const int per_dim = std::max(3, static_cast<int>(std::lround(std::sqrt(scalar_points))));
  const auto axis = linspace(sc.x_grid.lo, sc.x_grid.hi, per_dim);
  for (double a : axis)
    for (double b : axis) xs.push_back({a, b});
  return xs;
}

std::vector<Vec> axis_theta_probes(const Scenario& sc, double delta, bool halves) {
  std::vector<Vec> ts;
  ts.push_back(Vec(static_cast<size_t>(sc.plant.n_theta), 0.0));
  for (int i = 0; i < sc.plant.n_theta; ++i) {
    for (double mag : halves ? std::vector<double>{delta, 0.5 * delta}
                             : std::vector<double>{delta}) {
      if (mag == 0.0) continue;
      for (double sign : {1.0, -1.0}) {
        Vec t(static_cast<size_t>(sc.plant.n_theta), 0.0);
        t[static_cast<size_t>(i)] = sign * mag;
        ts.push_back(t);
      }
    }
  }
  return ts;
}

ScalarComparisonFn scenario_alpha3(const Scenario& sc) {
  const double c = sc.alpha3_coeff;
  char lbl[48];
  std::snprintf(lbl, sizeof lbl, "%g s^2", c);
  return {[c](double s) { return c * s * s; }, lbl};
}

CertificationReport certify_at(const Scenario& sc, const Policy& policy, double rho,
                               double delta, int scalar_points, bool halves,
                               const GammaFit* fit) {
  return descent_certification(policy, sc.plant, rho, delta,
                               certification_states(sc, scalar_points),
                               axis_theta_probes(sc, delta, halves), scenario_alpha3(sc),
                               fit);
}

// Empirical mismatch radius: largest delta whose sampled certification still
// shows a positive quadratic descent rate inside the invariant sublevel set.
double empirical_delta(const Scenario& sc, const Policy& policy, double rho,
                       double delta_hint) {
  // Solver-backed scenarios pay one cold solve per sample, so the bisection
  // runs on a deliberately coarse grid with a capped probe range; sample
  // counts land in the report and the result reads "certified up to".
  const int pts = sc.plant.n == 1 ? 27 : 9;
  const int max_doublings = sc.plant.n == 1 ? 8 : 2;
  auto certifies = [&](double d) {
    const CertificationReport rep = certify_at(sc, policy, rho, d, pts, false, nullptr);
    return rep.rpi_ok && std::isfinite(rep.eps_quadratic) && rep.eps_quadratic > 0.0 &&
           rep.descent_margin >= -1e-12;
  };
  double lo = 0.0;
  double hi = std::max(delta_hint, 1e-3);
  int doublings = 0;
  while (certifies(hi) && doublings < max_doublings) {
    lo = hi;
    hi *= 2.0;
    ++doublings;
  }
  if (doublings == max_doublings) return lo;  // certified everywhere probed
  for (int it = 0; it < 20; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (certifies(mid)) lo = mid;
    else hi = mid;
  }
  return lo;
}

ordered_json scaling_json(const ScalingReport& rep) {
  ordered_json j;
  j["tau"] = json_num(rep.tau);
  j["limit_estimate"] = json_num(rep.limit_estimate);
  j["verdict"] = to_string(rep.verdict);
  return j;
}

int cmd_certify(const Resolved& r) {
  fs::create_directories(r.out);
  const Scenario& sc = r.sc;
  std::unique_ptr<Policy> raw = sc.make_policy();
  std::unique_ptr<Policy> cert = certification_policy(sc);

  const int fit_points = sc.plant.n == 1 ? 41 : 25;
  const GammaFit fit =
      fit_gamma_v(sc.prob, sc.plant, *raw, certification_states(sc, fit_points),
                  axis_theta_probes(sc, r.delta, true), sc.gamma_track,
                  sc.candidate ? sc.candidate->V : std::function<double(const Vec&)>{});

  // The invariance check costs (1 + sphere probes) cold solves per sample;
  // three-parameter solver scenarios get ~65 probes each, so fewer samples.
  const int rpi_samples = sc.plant.n == 1 ? 400 : 40;
  const RpiReport rpi =
      rpi_check(*cert, sc.plant, r.rho, r.delta, rpi_samples, r.seed, sc.sim_box);
  const int cert_points = sc.plant.n == 1 ? sc.x_grid.points : 25;
  const CertificationReport rep =
      certify_at(sc, *cert, r.rho, r.delta, cert_points, true, &fit);
  const double delta_emp = empirical_delta(sc, *cert, r.rho, r.delta);

  const ScalarComparisonFn alpha3 = scenario_alpha3(sc);
  ordered_json scan = ordered_json::array();
  for (double tau : {1e-3, 1e-2, 1e-1, 0.5, 1.0})
    scan.push_back(scaling_json(scaling_limit_estimate(fit.gamma, alpha3, tau)));

  const char* track = sc.gamma_track == GammaTrack::warm_start_quadratic ? "warm-start-quadratic"
                      : sc.gamma_track == GammaTrack::warm_start_general ? "warm-start-general"
                                                                         : "candidate-quadratic";
  ordered_json j;
  j["scenario"] = sc.name;
  j["rho"] = json_num(r.rho);
  j["delta_tested"] = json_num(r.delta);
  {
    ordered_json jr;
    jr["outcome"] = rpi.outcome == CheckOutcome::ok         ? "ok"
                    : rpi.outcome == CheckOutcome::violated ? "violated"
                                                            : "inconclusive";
    jr["worst_value"] = json_num(rpi.worst_value);
    jr["samples_used"] = rpi.samples_used;
    j["rpi"] = jr;
  }
  {
    ordered_json jd;
    jd["samples_used"] = rep.samples_used;
    jd["infeasible_samples"] = rep.infeasible_samples;
    jd["margin"] = json_num(rep.descent_margin);
    jd["eps_quadratic"] = json_num(rep.eps_quadratic);
    jd["alpha3"] = alpha3.label;
    j["descent"] = jd;
  }
  {
    ordered_json jg;
    jg["track"] = track;
    jg["label"] = fit.gamma.label;
    jg["shell_t"] = fit.shell_t;
    if (!fit.shell_sigma.empty()) jg["shell_sigma"] = fit.shell_sigma;
    j["gamma"] = jg;
  }
  j["scaling"] = scaling_json(rep.scaling);
  j["scaling_scan"] = scan;
  j["delta_empirical"] = json_num(delta_emp);
  j["verdict"] = to_string(rep.verdict);

  const std::string path = r.out + "/certification.json";
  std::ofstream outf(path, std::ios::binary);
  if (!outf) throw invalid_input("cannot open " + path);
  outf << j.dump(2) << "\n";

  std::cout << "certify " << sc.name << ": verdict " << to_string(rep.verdict)
            << ", delta_empirical " << delta_emp << ", report " << path << "\n";
  return rep.verdict == StabilityVerdict::unstable ? kExitUnstable : 0;
}

// ---- reproduce --------------------------------------------------------------

struct ManifestEntry {
  std::string file;
  std::string role;
  std::string description;
};

void write_manifest(const std::string& dir, const Scenario& sc, std::uint64_t seed,
                    std::vector<ManifestEntry> entries) {
  entries.push_back({"manifest.json", "diagnostic", "artifact inventory"});
  ordered_json j;
  j["scenario"] = sc.name;
  j["seed"] = seed;
  ordered_json files = ordered_json::array();
  for (const auto& e : entries) {
    ordered_json f;
    f["file"] = e.file;
    f["role"] = e.role;
    f["description"] = e.description;
    files.push_back(f);
  }
  j["files"] = files;
  std::ofstream out(dir + "/manifest.json", std::ios::binary);
  if (!out) throw invalid_input("cannot open " + dir + "/manifest.json");
  out << j.dump(2) << "\n";
}

std::vector<std::vector<double>> long_run_rows(const Scenario& sc,
                                               const std::vector<RunRecord>& records) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::vector<double>> rows;
  int idx = 0;
  for (const auto& rec : records) {
    ++idx;
    for (size_t k = 0; k < rec.run.states.size(); ++k) {
      std::vector<double> row{static_cast<double>(idx)};
      for (double t : rec.theta) row.push_back(t);
      row.push_back(static_cast<double>(k));
      for (double xi : rec.run.states[k]) row.push_back(xi);
      for (int jm = 0; jm < sc.plant.m; ++jm)
        row.push_back(k < rec.run.inputs.size() ? rec.run.inputs[k][static_cast<size_t>(jm)]
                                                : nan);
      row.push_back(rec.run.values[k]);
      row.push_back(k + 1 < rec.run.values.size() ? rec.run.delta_v[k] : nan);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::vector<std::string> long_run_header(const Scenario& sc) {
  std::vector<std::string> h{"run"};
  for (int i = 0; i < sc.plant.n_theta; ++i) h.push_back("theta" + std::to_string(i + 1));
  h.push_back("k");
  for (int i = 0; i < sc.plant.n; ++i) h.push_back("x" + std::to_string(i + 1));
  for (int j = 0; j < sc.plant.m; ++j) h.push_back("u" + std::to_string(j + 1));
  h.push_back("V");
  h.push_back("dV");
  return h;
}

std::vector<RunRecord> fixed_runs(const Scenario& sc, const Vec& x0,
                                  const std::vector<Vec>& thetas, int kmax) {
  std::unique_ptr<Policy> policy = sc.make_policy();
  std::vector<RunRecord> records;
  for (const Vec& th : thetas) {
    policy->reset();
    records.push_back(
        {x0, th, run_closed_loop(*policy, sc.plant, x0, constant_theta(th, kmax), kmax,
                                 sc.sim_box)});
  }
  return records;
}

void write_trajectory_chart(const std::string& path,
                            const std::vector<RunRecord>& records, int coord,
                            const std::string& title) {
  SvgChart chart;
  chart.title = title;
  chart.x_label = "k";
  chart.y_label = "x" + std::to_string(coord + 1);
  size_t ci = 0;
  for (const auto& rec : records) {
    SvgSeries s;
    for (size_t k = 0; k < rec.run.states.size(); ++k) {
      s.line.xs.push_back(static_cast<double>(k));
      s.line.ys.push_back(rec.run.states[k][static_cast<size_t>(coord)]);
    }
    s.color = kSeriesColors[ci % 8];
    s.label = "theta=" + vec_to_label(rec.theta);
    ++ci;
    chart.series.push_back(std::move(s));
  }
  write_svg(path, chart);
}

int reproduce_integrator(const Resolved& r) {
  const Scenario& sc = r.sc;
  Resolved rs = r;
  rs.x_points = sc.x_grid.points;
  rs.theta_points = sc.theta_grid.points;
  const SweepData sd = sweep_field(rs);
  write_field_csv(r.out + "/fig1_contour.csv", sc, sd);
  write_contour_svg(r.out + "/fig1_contour.svg", rs, sd);

  const std::vector<Vec> thetas{{0.0}, {1.0}, {2.0}, {7.0 / 3.0}, {3.0}, {-0.5}, {-1.5}};
  const auto records = fixed_runs(sc, {3.0}, thetas, 60);
  write_csv(r.out + "/fig2_trajectories.csv", long_run_header(sc), long_run_rows(sc, records));
  write_trajectory_chart(r.out + "/fig2_trajectories.svg", records, 0,
                         "integrator closed loop, x0=3");

  write_manifest(r.out, sc, r.seed,
                 {{"fig1_contour.csv", "figure-1", "cost-difference field over (x, theta)"},
                  {"fig1_contour.svg", "figure-1", "cost-difference contour levels"},
                  {"fig2_trajectories.csv", "figure-2", "closed-loop runs from x0=3"},
                  {"fig2_trajectories.svg", "figure-2", "state trajectories per theta"}});
  return 0;
}

int reproduce_signed_sqrt(const Resolved& r) {
  const Scenario& sc = r.sc;
  Resolved rs = r;
  rs.x_points = sc.x_grid.points;
  rs.theta_points = sc.theta_grid.points;
  const SweepData sd = sweep_field(rs);
  write_field_csv(r.out + "/fig3_contour.csv", sc, sd);
  write_contour_svg(r.out + "/fig3_contour.svg", rs, sd);

  const std::vector<Vec> thetas{{0.0}, {0.25}, {1.0}, {3.0}, {-0.25}, {-1.0}, {-3.0}};
  const auto records = fixed_runs(sc, {2.0}, thetas, 60);
  write_csv(r.out + "/fig4_trajectories.csv", long_run_header(sc), long_run_rows(sc, records));
  write_trajectory_chart(r.out + "/fig4_trajectories.svg", records, 0,
                         "signed-sqrt closed loop, x0=2");

  write_manifest(r.out, sc, r.seed,
                 {{"fig3_contour.csv", "figure-3", "cost-difference field over (x, theta)"},
                  {"fig3_contour.svg", "figure-3", "cost-difference contour levels"},
                  {"fig4_trajectories.csv", "figure-4", "closed-loop runs from x0=2"},
                  {"fig4_trajectories.svg", "figure-4", "state trajectories per theta"}});
  return 0;
}

int reproduce_sin(const Resolved& r) {
  const Scenario& sc = r.sc;
  std::unique_ptr<Policy> policy = sc.make_policy();
  std::vector<Vec> xs;
  for (double x : linspace(-2.0, 2.0, 81)) xs.push_back({x});
  std::vector<Vec> ts;
  for (double t : {-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0}) ts.push_back({t});
  const GammaFit fit = fit_gamma_v(sc.prob, sc.plant, *policy, xs, ts,
                                   GammaTrack::candidate_quadratic, sc.candidate->V);
  std::vector<std::vector<double>> rows;
  for (size_t i = 0; i < fit.shell_t.size(); ++i)
    rows.push_back({fit.shell_t[i], fit.shell_sigma[i]});
  write_csv(r.out + "/lyap_envelope.csv", {"t", "sigma"}, rows);

  const std::vector<Vec> thetas{{0.0}, {0.5}, {1.0}, {-0.5}, {-1.0}};
  const auto records = fixed_runs(sc, {2.0}, thetas, 200);
  write_csv(r.out + "/sin_runs.csv", long_run_header(sc), long_run_rows(sc, records));
  write_trajectory_chart(r.out + "/sin_runs.svg", records, 0,
                         "sinusoid closed loop, x0=2");

  write_manifest(r.out, sc, r.seed,
                 {{"lyap_envelope.csv", "diagnostic",
                   "candidate Lyapunov increase envelope sigma_V per |theta| shell"},
                  {"sin_runs.csv", "figure-4", "closed-loop runs from x0=2"},
                  {"sin_runs.svg", "figure-4", "state trajectories per theta"}});
  return 0;
}

int reproduce_pendulum(const Resolved& r) {
  const Scenario& sc = r.sc;
  const PendulumTerminalConstants tc = pendulum_terminal_constants();
  ordered_json j;
  j["P_f"] = {{tc.P_f(0, 0), tc.P_f(0, 1)}, {tc.P_f(1, 0), tc.P_f(1, 1)}};
  j["a"] = tc.a;
  j["b"] = tc.b;
  j["x_star"] = tc.x_star;
  j["x_lower"] = tc.x_lower;
  j["c_f"] = tc.c_f;
  j["K"] = {2.0, 2.0};
  std::ofstream out(r.out + "/terminal_constants.json", std::ios::binary);
  if (!out) throw invalid_input("cannot open " + r.out + "/terminal_constants.json");
  out << j.dump(2) << "\n";

  const std::vector<Vec> thetas{{0.0, 0.0, 1.0}, {0.7, 0.0, 1.0}, {0.0, 3.0, 1.0},
                                {0.0, -4.0, 1.0}};
  const auto records = fixed_runs(sc, {kPi, 0.0}, thetas, 150);
  write_csv(r.out + "/fig5_trajectories.csv", long_run_header(sc), long_run_rows(sc, records));
  write_trajectory_chart(r.out + "/fig5_trajectories.svg", records, 0,
                         "pendulum closed loop, x0=(pi,0)");

  write_manifest(
      r.out, sc, r.seed,
      {{"terminal_constants.json", "diagnostic", "terminal ingredient constants"},
       {"fig5_trajectories.csv", "figure-5",
        "closed-loop runs from the resting position under mismatch cases"},
       {"fig5_trajectories.svg", "figure-5", "angle trajectories per theta"}});
  return 0;
}

int cmd_reproduce(const Resolved& r) {
  fs::create_directories(r.out);
  int rc = 0;
  if (r.sc.name == "integrator") rc = reproduce_integrator(r);
  else if (r.sc.name == "signed-sqrt") rc = reproduce_signed_sqrt(r);
  else if (r.sc.name == "sin") rc = reproduce_sin(r);
  else rc = reproduce_pendulum(r);
  std::cout << "reproduce " << r.sc.name << ": artifacts in " << r.out << "\n";
  return rc;
}

void add_common(CLI::App* cmd, Options& opts) {
  cmd->add_option("--config", opts.config_path, "JSON config file");
  cmd->add_option("--scenario", opts.scenario,
                  "scenario name: integrator, signed-sqrt, sin, pendulum");
  cmd->add_option("--theta", opts.theta_flags,
                  "parameter vector as comma list (repeatable)");
  cmd->add_option("--x0", opts.x0_flags, "initial state as comma list (repeatable)");
  cmd->add_option("--rho", opts.rho, "sublevel radius for certification");
  cmd->add_option("--delta", opts.delta, "parameter radius for certification");
  cmd->add_option("--out", opts.out, "output directory (default: out)");
  cmd->add_option("--seed", opts.seed, "sampling seed")->each([&opts](const std::string&) {
    opts.seed_set = true;
  });
  cmd->add_option("--kmax", opts.kmax, "closed-loop steps");
  cmd->add_option("--levels", opts.levels_flag, "contour levels as comma list");
  cmd->add_flag("--serial", opts.serial, "disable the parallel sweep path");
  cmd->add_option("--xpoints", opts.x_points, "state grid points for sweeps");
  cmd->add_option("--tpoints", opts.theta_points, "parameter grid points for sweeps");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mismatch MPC benchmark driver"};
  app.require_subcommand(1);
  Options opts;

  CLI::App* sim = app.add_subcommand("simulate", "closed-loop runs to CSV/SVG");
  CLI::App* sweep = app.add_subcommand("sweep", "cost-difference field to CSV/SVG");
  CLI::App* certify = app.add_subcommand("certify", "stability certification to JSON");
  CLI::App* reproduce = app.add_subcommand("reproduce", "figure-data bundle for a scenario");
  std::string positional_name;
  for (CLI::App* cmd : {sim, sweep, certify, reproduce}) add_common(cmd, opts);
  reproduce->add_option("name", positional_name, "scenario name");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  if (!positional_name.empty()) opts.scenario = positional_name;

  try {
    const Resolved r = resolve(opts);
    if (sim->parsed()) return cmd_simulate(r);
    if (sweep->parsed()) return cmd_sweep(r);
    if (certify->parsed()) return cmd_certify(r);
    return cmd_reproduce(r);
  } catch (const infeasible_start& e) {
    std::cerr << "error: infeasible initial state: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const invalid_input& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
