#pragma once

// Batch runs for the command-line front end: execute ITE/BITE configurations
// and write per-run trace CSVs, summary JSON, an ITE/BITE comparison CSV and
// a Table-style text summary.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "bite/driver.hpp"
#include "bite/state_io.hpp"

namespace bite {

struct RunSpec {
  std::string label;
  RunConfig config;
};

struct ExperimentSpec {
  std::vector<RunSpec> runs;
  std::filesystem::path out_dir = ".";
  /// Each configuration is run this many times; t_r is the fastest.
  std::size_t repeats = 1;
  bool compare = false;
  std::optional<std::filesystem::path> load_state;
  std::optional<std::filesystem::path> save_state;
};

struct RunSummary {
  std::string label;
  RunConfig config;
  RunTrace trace;
  std::vector<double> wall_times;

  double t_r() const { return *std::min_element(wall_times.begin(), wall_times.end()); }
};

enum class LogLevel { Quiet, Error, Info, Debug };

/// BITE_LOG_LEVEL = quiet | error | info | debug. Unset or unknown means info.
inline LogLevel log_level_from_env() {
  const char* v = std::getenv("BITE_LOG_LEVEL");
  if (!v) return LogLevel::Info;
  const std::string s(v);
  if (s == "quiet" || s == "off") return LogLevel::Quiet;
  if (s == "error") return LogLevel::Error;
  if (s == "debug") return LogLevel::Debug;
  return LogLevel::Info;
}

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.15g", v);
  return buf;
}

inline std::string fmt_fixed(double v, int digits) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace detail

inline constexpr const char* kTraceHeader =
    "step,tau,energy,energy_per_site,chi_max,chi_av,discarded_weight,event,wall_time_s";

inline std::string trace_csv(const RunTrace& trace) {
  using detail::fmt_double;
  std::ostringstream os;
  os << kTraceHeader << '\n';
  for (const auto& r : trace.records) {
    os << r.step << ',' << fmt_double(r.tau) << ',' << fmt_double(r.energy) << ',' << fmt_double(r.energy_per_site)
       << ',' << r.chi_max << ',' << fmt_double(r.chi_av) << ',' << fmt_double(r.discarded_weight) << ','
       << to_string(r.event) << ',' << fmt_double(r.wall_time) << '\n';
  }
  return os.str();
}

inline nlohmann::json config_json(const RunConfig& c) {
  nlohmann::json j;
  j["model"] = "tfim";
  j["n"] = c.n_sites;
  j["j"] = c.coupling;
  j["g"] = c.field;
  j["dtau"] = c.dtau;
  j["order"] = c.order;
  j["chi_max"] = c.chi_max;
  j["svd_tol"] = c.svd_tol;
  j["method"] = to_string(c.method);
  j["threshold"] = c.boost_threshold;
  j["tol"] = c.convergence_tol;
  j["tol_mode"] = to_string(c.convergence_mode);
  j["max_steps"] = c.max_steps;
  j["seed"] = c.seed;
  j["ns_initial"] = c.ns_initial;
  if (c.reference_energy)
    j["reference"] = *c.reference_energy;
  else
    j["reference"] = "auto";
  return j;
}

inline nlohmann::json summary_json(const RunSummary& s) {
  const auto& t = s.trace;
  const auto& c = t.counters;
  nlohmann::json j;
  j["label"] = s.label;
  j["config"] = config_json(s.config);
  j["final_energy"] = t.final_energy();
  j["final_energy_per_site"] = t.final_energy() / static_cast<double>(t.n_sites);
  j["initial_energy"] = t.initial_energy;
  j["reference_energy"] = t.reference_energy;
  j["energy_error"] = t.final_energy() - t.reference_energy;
  j["converged"] = t.converged;
  j["tebd_steps"] = c.tebd_steps;
  j["records"] = t.records.size();
  j["boosts_attempted"] = c.boosts_attempted;
  j["boosts_accepted"] = c.boosts_accepted;
  j["t_r"] = s.t_r();
  j["t_r_samples"] = s.wall_times;
  j["chi_max"] = t.chi_max_overall();
  j["chi_av"] = t.chi_av_overall();
  j["fidelity"] = t.final_fidelity ? nlohmann::json(*t.final_fidelity) : nlohmann::json(nullptr);
  nlohmann::json counters;
  counters["gate_applications"] = c.gate_applications;
  counters["svd_calls"] = c.svd_calls;
  counters["overlap_contractions"] = c.overlap_contractions;
  counters["tebd_seconds"] = c.tebd_seconds;
  counters["boost_seconds"] = c.boost_seconds;
  const auto k = c.boost_to_step_cost();
  counters["boost_to_step_cost"] = k ? nlohmann::json(*k) : nlohmann::json(nullptr);
  j["counters"] = counters;
  return j;
}

/// ITE and BITE energies side by side, one row per TEBD step count. When
/// several records share a step (a boost right after a step) the last one is used.
inline std::string compare_csv(const RunTrace& ite, const RunTrace& bite) {
  using detail::fmt_double;
  auto by_step = [](const RunTrace& t) {
    std::map<std::size_t, const TraceRecord*> m;
    for (const auto& r : t.records) m[r.step] = &r;
    return m;
  };
  const auto a = by_step(ite);
  const auto b = by_step(bite);
  std::size_t last = 0;
  if (!a.empty()) last = std::max(last, a.rbegin()->first);
  if (!b.empty()) last = std::max(last, b.rbegin()->first);
  const double n = static_cast<double>(std::max<std::size_t>(1, ite.n_sites));
  const double dtau = !ite.records.empty() && ite.records.front().step > 0
                          ? ite.records.front().tau / static_cast<double>(ite.records.front().step)
                          : 0.0;

  std::ostringstream os;
  os << "step,tau,ite_energy,bite_energy,ite_energy_per_site,bite_energy_per_site,ite_chi_av,bite_chi_av,bite_event\n";
  os << "0,0," << fmt_double(ite.initial_energy) << ',' << fmt_double(bite.initial_energy) << ','
     << fmt_double(ite.initial_energy / n) << ',' << fmt_double(bite.initial_energy / n) << ",1,1,\n";
  for (std::size_t s = 1; s <= last; ++s) {
    const auto ia = a.find(s);
    const auto ib = b.find(s);
    if (ia == a.end() && ib == b.end()) continue;
    const TraceRecord* ra = ia == a.end() ? nullptr : ia->second;
    const TraceRecord* rb = ib == b.end() ? nullptr : ib->second;
    const double tau = ra ? ra->tau : rb ? rb->tau : static_cast<double>(s) * dtau;
    os << s << ',' << fmt_double(tau) << ',' << (ra ? fmt_double(ra->energy) : "") << ','
       << (rb ? fmt_double(rb->energy) : "") << ',' << (ra ? fmt_double(ra->energy_per_site) : "") << ','
       << (rb ? fmt_double(rb->energy_per_site) : "") << ',' << (ra ? fmt_double(ra->chi_av) : "") << ','
       << (rb ? fmt_double(rb->chi_av) : "") << ',' << (rb ? to_string(rb->event) : "") << '\n';
  }
  return os.str();
}

/// Text table with columns method, dtau, t_r, chi_max, chi_av, fidelity.
/// Fidelity is blank when the chain is too long for a dense ground state.
inline std::string emit_table(const std::vector<RunSummary>& summaries) {
  std::ostringstream os;
  os << "| method | Δτ | t_r (s) | χ_max | χ_av | fidelity |\n";
  os << "|---|---|---|---|---|---|\n";
  for (const auto& s : summaries) {
    const auto& t = s.trace;
    os << "| " << to_string(t.method) << " | " << detail::fmt_double(s.config.dtau) << " | "
       << detail::fmt_fixed(s.t_r(), 3) << " | " << t.chi_max_overall() << " | "
       << detail::fmt_fixed(t.chi_av_overall(), 2) << " | "
       << (t.final_fidelity ? detail::fmt_fixed(*t.final_fidelity, 6) : std::string()) << " |\n";
  }
  return os.str();
}

/// Path for saving the final state of `label` when several runs share one --save-state.
inline std::filesystem::path state_path_for(const std::filesystem::path& base, const std::string& label,
                                            bool several) {
  if (!several) return base;
  auto p = base;
  p.replace_filename(base.stem().string() + "." + label + base.extension().string());
  return p;
}

/// Runs everything in `spec`. Exit code: 0 all converged, 2 some run did not
/// converge, 1 bad configuration (nothing written) or a failed run.
inline int run_experiment(const ExperimentSpec& spec, std::ostream& out = std::cout,
                          std::ostream& log = std::cerr, LogLevel level = log_level_from_env()) {
  auto info = [&](const std::string& msg) {
    if (level >= LogLevel::Info) log << "[bite] " << msg << '\n';
  };
  auto error = [&](const std::string& msg) {
    if (level >= LogLevel::Error) log << "[bite] error: " << msg << '\n';
  };

  // Everything that can be checked is checked before anything is written.
  std::optional<Mps> initial;
  try {
    if (spec.runs.empty()) throw InvalidInput("no runs configured");
    if (spec.repeats < 1) throw InvalidInput("repeats must be at least 1");
    std::set<std::string> labels;
    for (const auto& r : spec.runs) {
      r.config.validate();
      if (r.label.empty() || !labels.insert(r.label).second) throw InvalidInput("run labels must be unique");
    }
    if (spec.load_state) {
      initial = load_state(*spec.load_state);
      for (const auto& r : spec.runs)
        if (initial->size() != r.config.n_sites || initial->phys_dim != 2)
          throw InvalidInput("loaded state has " + std::to_string(initial->size()) + " sites, config has " +
                             std::to_string(r.config.n_sites));
    }
  } catch (const std::exception& e) {
    error(e.what());
    return 1;
  }

  std::vector<RunSummary> summaries;
  std::vector<Mps> finals;
  try {
    std::filesystem::create_directories(spec.out_dir);
    for (const auto& r : spec.runs) {
      RunSummary s;
      s.label = r.label;
      s.config = r.config;
      std::optional<RunResult> kept;
      for (std::size_t rep = 0; rep < spec.repeats; ++rep) {
        info("run " + r.label + " (" + std::to_string(rep + 1) + "/" + std::to_string(spec.repeats) +
             "): N=" + std::to_string(r.config.n_sites) + " dtau=" + detail::fmt_double(r.config.dtau) +
             " chi=" + std::to_string(r.config.chi_max));
        auto res = run(r.config, initial);
        s.wall_times.push_back(res.trace.wall_time);
        if (!kept) kept = std::move(res);
      }
      s.trace = std::move(kept->trace);
      info("run " + r.label + ": " + std::to_string(s.trace.counters.tebd_steps) + " steps, E=" +
           detail::fmt_double(s.trace.final_energy()) + ", ref=" + detail::fmt_double(s.trace.reference_energy) +
           (s.trace.converged ? ", converged" : ", NOT converged"));
      if (level >= LogLevel::Debug) {
        for (const auto& rec : s.trace.records)
          if (rec.event != TraceEvent::Tebd)
            log << "[bite] debug: step " << rec.step << ' ' << to_string(rec.event) << " E=" << detail::fmt_double(rec.energy)
                << '\n';
      }
      detail::write_file(spec.out_dir / (r.label + ".trace.csv"), trace_csv(s.trace));
      detail::write_file(spec.out_dir / (r.label + ".summary.json"), summary_json(s).dump(2) + "\n");
      finals.push_back(std::move(kept->state));
      summaries.push_back(std::move(s));
    }
    if (spec.compare) {
      const RunSummary* ite = nullptr;
      const RunSummary* bite = nullptr;
      for (const auto& s : summaries) (s.trace.method == Method::Ite ? ite : bite) = &s;
      if (ite && bite) detail::write_file(spec.out_dir / "compare.csv", compare_csv(ite->trace, bite->trace));
    }
    if (spec.save_state)
      for (std::size_t k = 0; k < summaries.size(); ++k)
        save_state(state_path_for(*spec.save_state, summaries[k].label, summaries.size() > 1), finals[k]);
  } catch (const std::exception& e) {
    error(e.what());
    return 1;
  }

  out << emit_table(summaries);
  const bool all = std::all_of(summaries.begin(), summaries.end(), [](const RunSummary& s) { return s.trace.converged; });
  return all ? 0 : 2;
}

}  // namespace bite
