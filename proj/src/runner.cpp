#include "marital/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "marital/perturbation.hpp"

namespace marital {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Collects CSV rows and writes them in one go, recording the file in the
// run's inventory.
class CsvFile {
 public:
  explicit CsvFile(std::string header) : body_(std::move(header) + "\n") {}

  template <class... Cells>
  void row(const Cells&... cells) {
    std::string line;
    ((line += cell(cells) + ","), ...);
    line.back() = '\n';
    body_ += line;
  }

  void write(const fs::path& p) const {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + p.string() + " for writing");
    out << body_;
    if (!out) throw IoError("failed writing " + p.string());
  }

 private:
  static std::string cell(double v) { return num(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }
  static std::string cell(bool v) { return v ? "true" : "false"; }
  static std::string cell(const std::string& v) { return v; }
  static std::string cell(const char* v) { return v; }

  std::string body_;
};

class OutputDir {
 public:
  OutputDir(fs::path root, RunManifest& m) : root_(std::move(root)), manifest_(m) {
    ensure(root_);
  }

  static void ensure(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  }

  void csv(const std::string& rel, const CsvFile& f) {
    const fs::path p = root_ / rel;
    ensure(p.parent_path());
    f.write(p);
    manifest_.outputs.push_back(rel);
  }

  void trajectory(const std::string& rel, const Trajectory& t) {
    const fs::path p = root_ / rel;
    ensure(p.parent_path());
    write_trajectory_csv(p, t);
    manifest_.outputs.push_back(rel);
  }

  void influence(const std::string& prefix, const Trajectory& t) {
    for (Spouse sp : {Spouse::First, Spouse::Second}) {
      const std::string rel =
          prefix + (sp == Spouse::First ? "influence_spouse1.csv" : "influence_spouse2.csv");
      const fs::path p = root_ / rel;
      ensure(p.parent_path());
      write_influence_csv(p, influence_samples(t, sp));
      manifest_.outputs.push_back(rel);
    }
  }

  const fs::path& root() const { return root_; }

 private:
  fs::path root_;
  RunManifest& manifest_;
};

ordered_json complex_json(std::complex<double> z) {
  return ordered_json{{"re", z.real()}, {"im", z.imag()}};
}

struct SolveOutcome {
  std::optional<SolveResult> result;
  std::optional<std::string> error;
};

SolveOutcome try_solve(const ModelParams& p, const SolverConfig& cfg) {
  try {
    return {fbs_solve(p, cfg), std::nullopt};
  } catch (const DivergenceError& e) {
    return {std::nullopt, std::string(e.what())};
  }
}

double max_abs_dev(const std::vector<double>& u, double u0) {
  double m = 0.0;
  for (double v : u) m = std::max(m, std::abs(v - u0));
  return m;
}

void note_failure(RunManifest& m, const std::string& what) {
  m.converged = false;
  if (!m.error) m.error = what;
}

// --- per-kind runners -----------------------------------------------------

void run_solve(const Scenario& s, OutputDir& out, RunManifest& m) {
  const ModelParams& p = s.params;
  m.singularity = singularity_report(p);
  try {
    m.equilibrium = classify_adjoint_equilibrium(p, p.u1max, p.u2max);
  } catch (const Error&) {
  }
  SolveOutcome o = try_solve(p, s.solver);
  if (!o.result) {
    note_failure(m, *o.error);
    return;
  }
  const SolveResult& r = *o.result;
  m.converged = r.converged;
  m.iterations = r.iterations;
  m.objective_value = r.objective_value;
  m.styles = style_classify(r.trajectory, p, s.styles);
  const PositivityVerdict pos = adjoint_positivity_check(r.trajectory, 1e-8);
  m.details["adjoint_positive"] = pos.positive;
  m.details["history"] = r.history;
  out.trajectory("trajectory.csv", r.trajectory);
  out.influence("", r.trajectory);
}

void run_sweep(const Scenario& s, OutputDir& out, RunManifest& m) {
  const bool eps_sweep = s.kind == ExperimentKind::SweepEpsilon;
  CsvFile agg(
      "value,converged,iterations,objective,max_abs_u1_minus_u0,max_abs_u2_minus_u0,style1,"
      "style2");
  ordered_json points = ordered_json::array();
  for (std::size_t i = 0; i < s.experiment.values.size(); ++i) {
    const double v = s.experiment.values[i];
    ModelParams p = s.params;
    if (eps_sweep) {
      p.epsilon = CostScale::finite(v);
    } else {
      p.alpha = v;
    }
    char dir[32];
    std::snprintf(dir, sizeof dir, "point_%03zu/", i);

    ordered_json pt{{"value", v}, {"directory", std::string(dir, std::strlen(dir) - 1)}};
    SolveOutcome o = try_solve(p, s.solver);
    if (!o.result) {
      note_failure(m, *o.error);
      pt["converged"] = false;
      pt["error"] = *o.error;
      agg.row(v, false, 0, std::nan(""), std::nan(""), std::nan(""), "Mixed", "Mixed");
      points.push_back(pt);
      continue;
    }
    const SolveResult& r = *o.result;
    const StyleVerdict st = style_classify(r.trajectory, p, s.styles);
    if (!r.converged) note_failure(m, "grid point " + std::to_string(i) + " did not converge");
    m.iterations = std::max(m.iterations, r.iterations);
    const double d1 = max_abs_dev(r.trajectory.u1, p.u0);
    const double d2 = max_abs_dev(r.trajectory.u2, p.u0);
    agg.row(v, r.converged, r.iterations, r.objective_value, d1, d2, to_string(st.spouse1.style),
            to_string(st.spouse2.style));
    out.trajectory(std::string(dir) + "trajectory.csv", r.trajectory);
    out.influence(dir, r.trajectory);
    pt["converged"] = r.converged;
    pt["iterations"] = r.iterations;
    pt["objective"] = r.objective_value;
    pt["styles"] = to_json(st);
    points.push_back(pt);
  }
  out.csv("aggregate.csv", agg);
  m.details["parameter"] = eps_sweep ? "epsilon" : "alpha";
  m.details["points"] = points;
}

void run_perturb(const Scenario& s, OutputDir& out, RunManifest& m) {
  const ModelParams& p = s.params;
  const Grid g(s.solver.n_steps, p.T);
  const int order = s.experiment.order;
  const PerturbationTrajectory pt = perturbation_trajectory(p, g, order);
  const ZerothOrderSolution z = zeroth_solve(p);

  out.trajectory("perturbation.csv", pt.assembled);
  CsvFile orders(order == 1 ? "t,x1_0,x2_0,lambda1_0,lambda2_0,x1_1,x2_1,lambda1_1,lambda2_1"
                            : "t,x1_0,x2_0,lambda1_0,lambda2_0");
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (order == 1) {
      orders.row(g.node(k), pt.x0.x1[k], pt.x0.x2[k], pt.lam0.lam1[k], pt.lam0.lam2[k],
                 pt.x1.x1[k], pt.x1.x2[k], pt.lam1.lam1[k], pt.lam1.lam2[k]);
    } else {
      orders.row(g.node(k), pt.x0.x1[k], pt.x0.x2[k], pt.lam0.lam1[k], pt.lam0.lam2[k]);
    }
  }
  out.csv("perturbation_orders.csv", orders);

  m.details["order"] = order;
  m.details["zeroth_order"] = ordered_json{
      {"eta", {z.eta1, z.eta2}},
      {"rho", {z.rho1, z.rho2}},
      {"a", {z.a1, z.a2}},
      {"b", {z.b1, z.b2}},
      {"state_particular", {z.state_particular[0], z.state_particular[1]}},
      {"adjoint_particular", {z.adjoint_particular[0], z.adjoint_particular[1]}}};

  SolveOutcome o = try_solve(p, s.solver);
  if (!o.result) {
    note_failure(m, *o.error);
    return;
  }
  const SolveResult& r = *o.result;
  m.converged = r.converged;
  m.iterations = r.iterations;
  m.objective_value = r.objective_value;
  m.styles = style_classify(r.trajectory, p, s.styles);
  out.trajectory("trajectory.csv", r.trajectory);

  const Trajectory& a = r.trajectory;
  const Trajectory& b = pt.assembled;
  const auto dev = [](const std::vector<double>& x, const std::vector<double>& y) {
    double d = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) d = std::max(d, std::abs(x[k] - y[k]));
    return d;
  };
  m.details["max_deviation_from_fbs"] = ordered_json{
      {"x1", dev(a.x1, b.x1)},         {"x2", dev(a.x2, b.x2)}, {"lambda1", dev(a.lam1, b.lam1)},
      {"lambda2", dev(a.lam2, b.lam2)}, {"u1", dev(a.u1, b.u1)}, {"u2", dev(a.u2, b.u2)}};
}

void run_classify(const Scenario& s, OutputDir& out, RunManifest& m) {
  const ModelParams& p = s.params;
  const ExperimentSpec& e = s.experiment;
  m.equilibrium = classify_adjoint_equilibrium(p, e.u1, e.u2);
  m.details["u1"] = e.u1;
  m.details["u2"] = e.u2;

  CsvFile field("lambda1,lambda2,dlambda1,dlambda2");
  const std::size_t n = e.field_points;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double l1 = e.lambda_min + (e.lambda_max - e.lambda_min) * i / (n - 1);
      const double l2 = e.lambda_min + (e.lambda_max - e.lambda_min) * j / (n - 1);
      const AdjointVec d = adjoint_rhs(p, {l1, l2}, {e.u1, e.u2});
      field.row(l1, l2, d.lam1, d.lam2);
    }
  }
  out.csv("adjoint_field.csv", field);

  // The orbit that reaches the origin at t = T under the frozen controls.
  const Grid g(s.solver.n_steps, p.T);
  const ControlArrays u{std::vector<double>(g.size(), e.u1),
                        std::vector<double>(g.size(), e.u2)};
  try {
    const AdjointArrays lam = backward_sweep(p, g, u);
    CsvFile orbit("t,lambda1,lambda2");
    for (std::size_t k = 0; k < g.size(); ++k) orbit.row(g.node(k), lam.lam1[k], lam.lam2[k]);
    out.csv("adjoint_orbit.csv", orbit);
  } catch (const DivergenceError& err) {
    note_failure(m, err.what());
  }
}

void run_robustness(const Scenario& s, OutputDir& out, RunManifest& m) {
  const ExperimentSpec& e = s.experiment;
  UniformStream rng(*e.seed);
  std::vector<std::pair<double, double>> ics(e.samples);
  for (auto& ic : ics) {
    ic.first = rng.next(e.ic_min, e.ic_max);
    ic.second = rng.next(e.ic_min, e.ic_max);
  }

  CsvFile profile("T,spouse,window_start,window_end,mean_slope,std_slope,mean_control");
  CsvFile initial("T,index,x1_0,x2_0,converged,iterations");
  ordered_json per_t = ordered_json::array();
  for (double T : e.terminal_times) {
    std::vector<Trajectory> trajs;
    std::size_t converged = 0;
    for (std::size_t i = 0; i < ics.size(); ++i) {
      ModelParams p = s.params;
      p.T = T;
      p.x1_0 = ics[i].first;
      p.x2_0 = ics[i].second;
      SolveOutcome o = try_solve(p, s.solver);
      if (!o.result) {
        note_failure(m, *o.error);
        initial.row(T, i, p.x1_0, p.x2_0, false, 0);
        continue;
      }
      initial.row(T, i, p.x1_0, p.x2_0, o.result->converged, o.result->iterations);
      if (o.result->converged) {
        ++converged;
      } else {
        note_failure(m, "a robustness sample did not converge");
      }
      m.iterations = std::max(m.iterations, o.result->iterations);
      trajs.push_back(std::move(o.result->trajectory));
    }
    if (trajs.empty()) continue;
    const SlopeProfile prof = slope_profile(trajs, e.window);
    for (int sp = 1; sp <= 2; ++sp) {
      for (const auto& w : sp == 1 ? prof.spouse1 : prof.spouse2) {
        profile.row(T, sp, w.start, w.end, w.mean_slope, w.std_slope, w.mean_control);
      }
    }
    per_t.push_back({{"T", T}, {"samples", ics.size()}, {"converged", converged}});
  }
  out.csv("slope_profile.csv", profile);
  out.csv("initial_conditions.csv", initial);
  m.details["seed"] = *e.seed;
  m.details["terminal_times"] = per_t;
}

void run_oracle(const Scenario& s, OutputDir& out, RunManifest& m) {
  const ModelParams& p = s.params;
  const ExperimentSpec& e = s.experiment;
  OracleConfig oc;
  oc.segments = e.segments;
  oc.levels = e.levels;
  oc.n_steps = e.oracle_steps;
  oc.mode = e.mode;
  const OracleResult best = oracle_search(p, oc);

  const Grid g(e.oracle_steps, p.T);
  CsvFile segs("segment,t_start,t_end,u1,u2");
  for (std::size_t i = 0; i < e.segments; ++i) {
    segs.row(i, p.T * i / e.segments, p.T * (i + 1) / e.segments, best.u1[i], best.u2[i]);
  }
  out.csv("oracle_controls.csv", segs);
  const ControlArrays u = piecewise_controls(g, best.u1, best.u2);
  out.trajectory("oracle_trajectory.csv",
                 Trajectory(g, forward_sweep(p, g, u), backward_sweep(p, g, u), u));

  m.details["oracle_objective"] = best.objective_value;
  m.details["candidates_evaluated"] = best.candidates_evaluated;
  m.details["mode"] = to_string(best.mode_used);

  SolverConfig cfg = s.solver;
  cfg.n_steps = e.oracle_steps;
  SolveOutcome o = try_solve(p, cfg);
  if (!o.result) {
    note_failure(m, *o.error);
    return;
  }
  m.converged = o.result->converged;
  m.iterations = o.result->iterations;
  m.objective_value = o.result->objective_value;
  m.details["fbs_objective"] = o.result->objective_value;
  m.details["oracle_minus_fbs"] = best.objective_value - o.result->objective_value;
  out.trajectory("trajectory.csv", o.result->trajectory);
}

}  // namespace

std::string read_text_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_trajectory_csv(const fs::path& p, const Trajectory& traj) {
  traj.check_shape();
  CsvFile f("t,x1,x2,lambda1,lambda2,u1,u2");
  for (std::size_t k = 0; k < traj.grid.size(); ++k) {
    f.row(traj.grid.node(k), traj.x1[k], traj.x2[k], traj.lam1[k], traj.lam2[k], traj.u1[k],
          traj.u2[k]);
  }
  f.write(p);
}

void write_influence_csv(const fs::path& p, const std::vector<InfluenceSample>& samples) {
  CsvFile f("t,partner_x,influence,control");
  for (const auto& s : samples) f.row(s.t, s.partner_x, s.influence, s.control);
  f.write(p);
}

ordered_json to_json(const EquilibriumReport& r) {
  ordered_json j;
  if (r.point) {
    j["point"] = {r.point->lam1, r.point->lam2};
  } else {
    j["point"] = nullptr;
  }
  j["mu_plus"] = complex_json(r.mu_plus);
  j["mu_minus"] = complex_json(r.mu_minus);
  j["v"] = {complex_json(r.v[0]), complex_json(r.v[1])};
  j["w"] = {complex_json(r.w[0]), complex_json(r.w[1])};
  j["classification"] = to_string(r.classification);
  return j;
}

ordered_json to_json(const SingularityReport& r) {
  return ordered_json{{"u1_singular_capable", r.u1_singular_capable},
                      {"u1_initial_gap", r.u1_initial_gap},
                      {"u1_balance_gap", r.u1_balance_gap},
                      {"u2_singular_capable", r.u2_singular_capable},
                      {"u2_initial_gap", r.u2_initial_gap},
                      {"u2_balance_gap", r.u2_balance_gap},
                      {"u2_singular_capable_literal", r.u2_singular_capable_literal},
                      {"u2_initial_gap_literal", r.u2_initial_gap_literal},
                      {"lambda_interval_zero_possible", r.lambda_interval_zero_possible},
                      {"lambda_interval_zero_reason", r.lambda_interval_zero_reason}};
}

ordered_json to_json(const StyleVerdict& v) {
  const auto one = [](const SpouseStyle& s) {
    ordered_json j{{"style", to_string(s.style)},
                   {"mean_u_partner_negative", s.mean_u_partner_negative},
                   {"mean_u_partner_positive", s.mean_u_partner_positive},
                   {"max_deviation_from_u0", s.max_deviation_from_u0}};
    if (!s.reason.empty()) j["reason"] = s.reason;
    return j;
  };
  return ordered_json{{"spouse1", one(v.spouse1)}, {"spouse2", one(v.spouse2)}};
}

ordered_json RunManifest::to_json() const {
  ordered_json j;
  j["kind"] = kind;
  j["tool_version"] = tool_version;
  j["scenario"] = scenario;
  j["converged"] = converged;
  j["iterations"] = iterations;
  j["objective_value"] = objective_value ? ordered_json(*objective_value) : ordered_json(nullptr);
  j["styles"] = styles ? marital::to_json(*styles) : ordered_json(nullptr);
  j["equilibrium"] = equilibrium ? marital::to_json(*equilibrium) : ordered_json(nullptr);
  j["singularity"] = singularity ? marital::to_json(*singularity) : ordered_json(nullptr);
  j["details"] = details;
  j["outputs"] = outputs;
  j["wall_seconds"] = wall_seconds;
  j["error"] = error ? ordered_json(*error) : ordered_json(nullptr);
  return j;
}

RunManifest run_scenario(const Scenario& s, const fs::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  RunManifest m;
  m.kind = to_string(s.kind);
  m.scenario = ordered_json::parse(serialize_scenario(s));
  OutputDir out(out_dir, m);

  switch (s.kind) {
    case ExperimentKind::Solve: run_solve(s, out, m); break;
    case ExperimentKind::SweepEpsilon:
    case ExperimentKind::SweepAlpha: run_sweep(s, out, m); break;
    case ExperimentKind::Perturb: run_perturb(s, out, m); break;
    case ExperimentKind::Classify: run_classify(s, out, m); break;
    case ExperimentKind::Robustness: run_robustness(s, out, m); break;
    case ExperimentKind::Oracle: run_oracle(s, out, m); break;
  }

  m.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const fs::path mp = out_dir / "manifest.json";
  std::ofstream f(mp, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + mp.string() + " for writing");
  f << m.to_json().dump(2) << "\n";
  if (!f) throw IoError("failed writing " + mp.string());
  return m;
}

std::vector<RunManifest> run_scenario_directory(const fs::path& dir, const fs::path& out_dir,
                                                std::optional<std::uint64_t> seed_override,
                                                bool allow_nonconverged) {
  std::vector<fs::path> files;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  if (ec) throw IoError("cannot list " + dir.string() + ": " + ec.message());
  std::sort(files.begin(), files.end());

  // Parse everything up front so a bad file fails before any output is written.
  std::vector<Scenario> scenarios;
  for (const auto& f : files) {
    Scenario s = parse_scenario(read_text_file(f), seed_override);
    if (allow_nonconverged) s.allow_nonconverged = true;
    scenarios.push_back(std::move(s));
  }
  std::vector<RunManifest> manifests;
  for (std::size_t i = 0; i < files.size(); ++i) {
    manifests.push_back(run_scenario(scenarios[i], out_dir / files[i].stem()));
  }
  return manifests;
}

}  // namespace marital
