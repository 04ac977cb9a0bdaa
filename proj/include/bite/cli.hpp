#pragma once

// Command-line parsing for the `bite` tool. Flags may also come from a
// key=value config file given with --config; flags on the command line win.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "bite/experiment.hpp"

namespace bite {

struct CliOptions {
  std::string model = "tfim";
  std::size_t n = 0;
  double j = 0.5;
  double g = 1.5;
  double dtau = 0.01;
  int order = 2;
  std::size_t chi_max = 32;
  double svd_tol = 1e-10;
  std::string method;
  double threshold = 1.0;
  double tol = 1e-3;
  std::string tol_mode = "total";
  std::size_t max_steps = 100000;
  std::uint64_t seed = 1;
  std::size_t ns_initial = 1;
  std::string out = "bite_out";
  std::string reference = "auto";
  std::size_t repeats = 1;
  std::string save_state;
  std::string load_state;
};

inline void add_cli_options(CLI::App& app, CliOptions& o) {
  app.set_config("--config", "", "Read options from a key=value file (command-line flags override it)");
  app.add_option("--model", o.model, "Hamiltonian")->check(CLI::IsMember({"tfim"}))->capture_default_str();
  app.add_option("--n", o.n, "Number of sites")->required()->check(CLI::Range(std::size_t{2}, std::size_t{100000}));
  app.add_option("--j", o.j, "Ising coupling J")->capture_default_str();
  app.add_option("--g", o.g, "Transverse field g")->capture_default_str();
  app.add_option("--dtau", o.dtau, "Imaginary time step")->capture_default_str();
  app.add_option("--order", o.order, "Trotter order (1 or 2)")->check(CLI::IsMember({1, 2}))->capture_default_str();
  app.add_option("--chi-max", o.chi_max, "Maximum bond dimension")->capture_default_str();
  app.add_option("--svd-tol", o.svd_tol, "Relative squared singular value cutoff")->capture_default_str();
  app.add_option("--method", o.method, "ite, bite or compare (both)")
      ->required()
      ->check(CLI::IsMember({"ite", "bite", "compare"}));
  app.add_option("--threshold", o.threshold, "Boost once |dE/dtau| <= threshold (<= 0 disables)")
      ->capture_default_str();
  app.add_option("--tol", o.tol, "Convergence tolerance on |E - E_ref|")->capture_default_str();
  app.add_option("--tol-mode", o.tol_mode, "total or per_site")
      ->check(CLI::IsMember({"total", "per_site"}))
      ->capture_default_str();
  app.add_option("--max-steps", o.max_steps, "TEBD step budget")->capture_default_str();
  app.add_option("--seed", o.seed, "Seed for the random initial product state")->capture_default_str();
  app.add_option("--ns-initial", o.ns_initial, "TEBD steps before the first boost plane")->capture_default_str();
  app.add_option("--reference", o.reference, "Reference energy, or 'auto' for the exact solver")
      ->capture_default_str();
  app.add_option("--repeats", o.repeats, "Repeat each run; t_r is the fastest")->capture_default_str();
  app.add_option("--out", o.out, "Output directory")->capture_default_str();
  app.add_option("--save-state", o.save_state, "Write the final MPS here");
  app.add_option("--load-state", o.load_state, "Start from this MPS instead of a random product state");
}

/// Turn parsed options into an experiment. Throws InvalidInput on bad values.
inline ExperimentSpec experiment_from_options(const CliOptions& o) {
  RunConfig c;
  c.n_sites = o.n;
  c.coupling = o.j;
  c.field = o.g;
  c.dtau = o.dtau;
  c.order = o.order;
  c.chi_max = o.chi_max;
  c.svd_tol = o.svd_tol;
  c.boost_threshold = o.threshold;
  c.convergence_tol = o.tol;
  c.convergence_mode = o.tol_mode == "per_site" ? ConvergenceMode::PerSite : ConvergenceMode::Total;
  c.max_steps = o.max_steps;
  c.seed = o.seed;
  c.ns_initial = o.ns_initial;
  if (o.reference != "auto") {
    try {
      std::size_t used = 0;
      c.reference_energy = std::stod(o.reference, &used);
      if (used != o.reference.size()) throw std::invalid_argument(o.reference);
    } catch (const std::exception&) {
      throw InvalidInput("--reference must be a number or 'auto'");
    }
  }

  ExperimentSpec spec;
  spec.out_dir = o.out;
  spec.repeats = o.repeats;
  if (!o.load_state.empty()) spec.load_state = o.load_state;
  if (!o.save_state.empty()) spec.save_state = o.save_state;
  auto add = [&](Method m) {
    RunConfig rc = c;
    rc.method = m;
    spec.runs.push_back({to_string(m), rc});
  };
  if (o.method == "compare") {
    spec.compare = true;
    add(Method::Ite);
    add(Method::Bite);
  } else {
    add(o.method == "ite" ? Method::Ite : Method::Bite);
  }
  for (const auto& r : spec.runs) r.config.validate();
  return spec;
}

inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app("Imaginary-time TEBD with great-circle boosts (ITE / BITE)", "bite");
  CliOptions opts;
  add_cli_options(app, opts);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 1;
  }
  ExperimentSpec spec;
  try {
    spec = experiment_from_options(opts);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return run_experiment(spec, out, err);
}

}  // namespace bite
