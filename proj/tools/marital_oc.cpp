// marital-oc: command-line front end for the scenario runner.
//
// Exit codes: 0 success, 2 invalid input, 3 non-convergence (strict mode),
// 4 I/O failure.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "marital/runner.hpp"

namespace fs = std::filesystem;
using namespace marital;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 2;
constexpr int kNonConverged = 3;
constexpr int kIo = 4;

struct Options {
  std::string scenario;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool allow_nonconverged = false;
};

struct DirectClassify {
  double r1 = 0.6, r2 = 0.6, xbar1 = 0.2, xbar2 = -0.4, alpha = 1.0, u1 = 0.5, u2 = 0.5;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

Scenario load(const Options& o) {
  if (o.scenario.empty()) throw UsageError("--scenario is required");
  return parse_scenario(read_text_file(o.scenario), o.seed);
}

void require_kind(const Scenario& s, std::initializer_list<ExperimentKind> kinds,
                  const std::string& cmd) {
  for (ExperimentKind k : kinds) {
    if (s.kind == k) return;
  }
  throw ScenarioError("kind", "'" + to_string(s.kind) + "' cannot be run by '" + cmd + "'");
}

int finish(const RunManifest& m, bool allow) {
  if (m.error) std::cerr << "marital-oc: " << *m.error << "\n";
  if (!m.converged && !allow) {
    std::cerr << "marital-oc: run did not converge (pass --allow-nonconverged to accept)\n";
    return kNonConverged;
  }
  return kOk;
}

int run_kind(const Options& o, std::initializer_list<ExperimentKind> kinds,
             const std::string& cmd) {
  if (o.out.empty()) throw UsageError("--out is required");
  Scenario s = load(o);
  require_kind(s, kinds, cmd);
  if (o.allow_nonconverged) s.allow_nonconverged = true;
  const RunManifest m = run_scenario(s, o.out);
  std::cout << "wrote " << m.outputs.size() + 1 << " files to " << o.out << "\n";
  return finish(m, s.allow_nonconverged);
}

int run_sweep(const Options& o) {
  if (!o.scenario.empty() && fs::is_directory(o.scenario)) {
    if (o.out.empty()) throw UsageError("--out is required");
    const auto ms = run_scenario_directory(o.scenario, o.out, o.seed, o.allow_nonconverged);
    int code = kOk;
    for (const auto& m : ms) {
      std::cout << m.kind << ": " << (m.converged ? "converged" : "not converged") << ", "
                << m.outputs.size() + 1 << " files\n";
      if (m.error) std::cerr << "marital-oc: " << *m.error << "\n";
      const bool allow = o.allow_nonconverged || m.scenario.value("allow_nonconverged", false);
      if (!m.converged && !allow) code = kNonConverged;
    }
    std::cout << "wrote " << ms.size() << " scenarios to " << o.out << "\n";
    return code;
  }
  return run_kind(o, {ExperimentKind::SweepEpsilon, ExperimentKind::SweepAlpha}, "sweep");
}

void print_equilibrium(const EquilibriumReport& r) {
  const auto c = [](std::complex<double> z) {
    char buf[96];
    if (z.imag() == 0.0) {
      std::snprintf(buf, sizeof buf, "%.17g", z.real());
    } else {
      std::snprintf(buf, sizeof buf, "%.17g%+.17gi", z.real(), z.imag());
    }
    return std::string(buf);
  };
  std::cout << to_string(r.classification) << "\n";
  std::cout << "mu_plus " << c(r.mu_plus) << "\n";
  std::cout << "mu_minus " << c(r.mu_minus) << "\n";
  if (r.point) {
    std::printf("equilibrium %.17g %.17g\n", r.point->lam1, r.point->lam2);
  } else {
    std::cout << "equilibrium none\n";
  }
}

int run_classify(const Options& o, const DirectClassify& d, bool direct) {
  if (!o.scenario.empty()) {
    Scenario s = load(o);
    require_kind(s, {ExperimentKind::Classify}, "classify-equilibrium");
    print_equilibrium(classify_adjoint_equilibrium(s.params, s.experiment.u1, s.experiment.u2));
    if (!o.out.empty()) return finish(run_scenario(s, o.out), true);
    return kOk;
  }
  if (!direct) throw UsageError("--scenario or the direct parameter flags are required");
  ModelParams p;
  p.r1 = d.r1;
  p.r2 = d.r2;
  p.xbar1 = d.xbar1;
  p.xbar2 = d.xbar2;
  p.alpha = d.alpha;
  p.validate();
  print_equilibrium(classify_adjoint_equilibrium(p, d.u1, d.u2));
  return kOk;
}

int run_singularity(const Options& o) {
  const Scenario s = load(o);
  const auto j = to_json(singularity_report(s.params));
  std::cout << j.dump(2) << "\n";
  if (!o.out.empty()) {
    std::error_code ec;
    fs::create_directories(o.out, ec);
    if (ec) throw IoError("cannot create directory " + o.out + ": " + ec.message());
    std::FILE* f = std::fopen((fs::path(o.out) / "singularity.json").string().c_str(), "wb");
    if (!f) throw IoError("cannot write singularity.json in " + o.out);
    const std::string text = j.dump(2) + "\n";
    const bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size();
    if (std::fclose(f) != 0 || !ok) throw IoError("failed writing singularity.json");
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal control of a two-spouse positivity model.\n"};
  app.footer("\n" + scenario_format_help());
  app.require_subcommand(1);

  Options opt;
  app.add_option("--scenario", opt.scenario, "Scenario file (a directory for batch 'sweep')");
  app.add_option("--out", opt.out, "Output directory");
  app.add_option("--seed", opt.seed, "Override the scenario seed");
  app.add_flag("--allow-nonconverged", opt.allow_nonconverged,
               "Exit 0 even when a solve does not converge");

  auto* solve = app.add_subcommand("solve", "Forward-backward sweep on one parameter set");
  auto* sweep = app.add_subcommand("sweep", "Epsilon or alpha sweep, or a directory of scenarios");
  auto* perturb = app.add_subcommand("perturb", "Small-epsilon expansion compared with FBS");
  auto* classify = app.add_subcommand("classify-equilibrium", "Adjoint-plane equilibrium type");
  auto* singular = app.add_subcommand("singularity", "Singular-arc conditions for the parameters");
  auto* oracle = app.add_subcommand("oracle", "Brute-force piecewise-constant control search");
  auto* robust = app.add_subcommand("robustness", "Influence slope study over random starts");

  DirectClassify direct;
  classify->add_option("--r1", direct.r1);
  classify->add_option("--r2", direct.r2);
  classify->add_option("--xbar1", direct.xbar1);
  classify->add_option("--xbar2", direct.xbar2);
  classify->add_option("--alpha", direct.alpha);
  classify->add_option("--u1", direct.u1);
  classify->add_option("--u2", direct.u2);

  for (auto* sub : {solve, sweep, perturb, classify, singular, oracle, robust}) {
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInvalid;
  }

  try {
    if (*solve) return run_kind(opt, {ExperimentKind::Solve}, "solve");
    if (*sweep) return run_sweep(opt);
    if (*perturb) return run_kind(opt, {ExperimentKind::Perturb}, "perturb");
    if (*oracle) return run_kind(opt, {ExperimentKind::Oracle}, "oracle");
    if (*robust) return run_kind(opt, {ExperimentKind::Robustness}, "robustness");
    if (*singular) return run_singularity(opt);
    if (*classify) {
      bool any_direct = false;
      for (const auto* o : classify->get_options()) {
        if (o->get_name() != "--help" && o->count() > 0) any_direct = true;
      }
      return run_classify(opt, direct, any_direct);
    }
  } catch (const UsageError& e) {
    std::cerr << "marital-oc: " << e.what() << "\n\n" << app.help();
    return kInvalid;
  } catch (const IoError& e) {
    std::cerr << "marital-oc: " << e.what() << "\n";
    return kIo;
  } catch (const Error& e) {
    std::cerr << "marital-oc: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "marital-oc: " << e.what() << "\n";
    return kIo;
  }
  return kInvalid;
}
