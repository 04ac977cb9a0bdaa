#pragma once

// Full imaginary-time runs: plain TEBD (ITE) and TEBD interleaved with
// great-circle boosts (BITE), with per-event traces and cost counters.

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "bite/boost.hpp"
#include "bite/oracle.hpp"
#include "bite/tebd.hpp"

namespace bite {

enum class Method { Ite, Bite };
enum class ConvergenceMode { Total, PerSite };
enum class TraceEvent { Tebd, BoostAccepted, BoostRejected, BoostSkipped };

inline const char* to_string(Method m) { return m == Method::Ite ? "ite" : "bite"; }
inline const char* to_string(ConvergenceMode m) { return m == ConvergenceMode::Total ? "total" : "per_site"; }
inline const char* to_string(TraceEvent e) {
  switch (e) {
    case TraceEvent::Tebd: return "tebd";
    case TraceEvent::BoostAccepted: return "boost_accepted";
    case TraceEvent::BoostRejected: return "boost_rejected";
    case TraceEvent::BoostSkipped: return "boost_skipped";
  }
  return "unknown";
}

/// Largest chain for which dense fidelities and the exact reference are computed.
inline constexpr std::size_t kDenseReferenceSites = 14;

struct RunConfig {
  std::size_t n_sites = 20;
  double coupling = 0.5;  // J
  double field = 1.5;     // g
  double dtau = 0.01;
  int order = 2;
  std::size_t chi_max = 32;
  double svd_tol = 1e-10;
  Method method = Method::Ite;
  /// Boosting starts once |dE/dtau| <= threshold. Zero or negative disables it.
  double boost_threshold = 1.0;
  double convergence_tol = 1e-3;
  ConvergenceMode convergence_mode = ConvergenceMode::Total;
  /// Empty means "auto": exact solver result for the model.
  std::optional<double> reference_energy;
  std::size_t max_steps = 100000;
  std::uint64_t seed = 1;
  std::size_t ns_initial = 1;
  bool compute_fidelity = true;

  void validate() const {
    if (n_sites < 2) throw InvalidInput("n_sites must be at least 2");
    if (!(dtau > 0.0)) throw InvalidInput("dtau must be positive");
    if (order != 1 && order != 2) throw InvalidInput("order must be 1 or 2");
    if (chi_max < 1) throw InvalidInput("chi_max must be at least 1");
    if (svd_tol < 0.0) throw InvalidInput("svd_tol must be non-negative");
    if (!(convergence_tol > 0.0)) throw InvalidInput("convergence_tol must be positive");
    if (max_steps < 1) throw InvalidInput("max_steps must be at least 1");
    if (ns_initial < 1) throw InvalidInput("ns_initial must be at least 1");
  }
};

struct CostCounters {
  std::size_t tebd_steps = 0;
  std::size_t gate_applications = 0;
  std::size_t svd_calls = 0;
  std::size_t overlap_contractions = 0;
  std::size_t boosts_attempted = 0;
  std::size_t boosts_accepted = 0;
  double tebd_seconds = 0.0;
  double boost_seconds = 0.0;

  /// Measured cost of one boost attempt in units of one TEBD step (the K of the cost model).
  std::optional<double> boost_to_step_cost() const {
    if (boosts_attempted == 0 || tebd_steps == 0 || tebd_seconds <= 0.0) return std::nullopt;
    return (boost_seconds / static_cast<double>(boosts_attempted)) /
           (tebd_seconds / static_cast<double>(tebd_steps));
  }
};

struct TraceRecord {
  std::size_t step = 0;  // TEBD steps taken so far
  double tau = 0.0;
  double energy = 0.0;
  double energy_per_site = 0.0;
  std::size_t chi_max = 1;
  double chi_av = 1.0;
  double discarded_weight = 0.0;
  TraceEvent event = TraceEvent::Tebd;
  double wall_time = 0.0;
};

struct RunTrace {
  Method method = Method::Ite;
  std::size_t n_sites = 0;
  std::vector<TraceRecord> records;
  CostCounters counters;
  bool converged = false;
  double initial_energy = 0.0;
  double reference_energy = 0.0;
  std::optional<double> final_fidelity;
  double wall_time = 0.0;

  double final_energy() const { return records.empty() ? initial_energy : records.back().energy; }
  std::size_t chi_max_overall() const {
    std::size_t c = 1;
    for (const auto& r : records) c = std::max(c, r.chi_max);
    return c;
  }
  /// Mean over all records of the per-record mean bond dimension.
  double chi_av_overall() const {
    if (records.empty()) return 1.0;
    double s = 0.0;
    for (const auto& r : records) s += r.chi_av;
    return s / static_cast<double>(records.size());
  }
};

struct RunResult {
  Mps state;
  RunTrace trace;
};

/// Per-site vectors with two independent U[0,1) components, normalized.
inline Mps random_product_state(std::size_t n_sites, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<Vector> local;
  for (std::size_t k = 0; k < n_sites; ++k) {
    Vector v(2);
    do {
      v << uni(rng), uni(rng);
    } while (v.norm() == 0.0);
    local.push_back(v);
  }
  return make_product_state(local);
}

/// Ground energy of the configured TFIM: exact for N <= 14, free fermions beyond.
inline double reference_energy(const RunConfig& config) {
  if (config.n_sites <= kDenseReferenceSites)
    return oracle::ground_state(build_bond_model(config.n_sites, config.coupling, config.field)).energy;
  return oracle::tfim_free_fermion_energy(config.n_sites, config.coupling, config.field);
}

/// True when the record-to-record energy never rises by more than
/// max(1e-8, 10 x the record's discarded weight). `worst` receives the largest excess rise.
inline bool energy_monotone(const RunTrace& trace, double* worst = nullptr) {
  double prev = trace.initial_energy;
  double excess = 0.0;
  bool ok = true;
  for (const auto& r : trace.records) {
    const double allowed = std::max(1e-8, 10.0 * r.discarded_weight);
    const double rise = r.energy - prev;
    if (rise > allowed) {
      ok = false;
      excess = std::max(excess, rise - allowed);
    }
    prev = r.energy;
  }
  if (worst) *worst = excess;
  return ok;
}

namespace detail {

class RunState {
 public:
  RunState(const RunConfig& config, Method method)
      : config_(config),
        model_(build_bond_model(config.n_sites, config.coupling, config.field)),
        mpo_(build_mpo(model_)),
        schedule_(trotter_gates(model_, config.dtau, config.order)),
        params_{config.chi_max, config.svd_tol, config.order, config.dtau},
        start_(std::chrono::steady_clock::now()) {
    trace_.method = method;
    trace_.n_sites = config.n_sites;
    if (config.reference_energy) {
      trace_.reference_energy = *config.reference_energy;
    } else if (config.n_sites <= kDenseReferenceSites) {
      ground_ = oracle::ground_state(model_);
      trace_.reference_energy = ground_->energy;
    } else {
      trace_.reference_energy = reference_energy(config);
    }
  }

  const Mpo& mpo() const { return mpo_; }
  RunTrace& trace() { return trace_; }
  const RunConfig& config() const { return config_; }

  double measure(const Mps& m) {
    trace_.counters.overlap_contractions += 2;
    return expectation(m, mpo_);
  }

  void set_initial(const Mps& m) {
    trace_.initial_energy = measure(m);
    last_energy_ = trace_.initial_energy;
  }

  bool budget_left() const { return trace_.counters.tebd_steps < config_.max_steps; }

  /// One TEBD step with its trace record. Updates the energy gradient.
  Mps step(const Mps& m) {
    const auto t0 = std::chrono::steady_clock::now();
    auto res = tebd_step(m, schedule_, params_);
    auto& c = trace_.counters;
    ++c.tebd_steps;
    c.gate_applications += schedule_.gate_count();
    c.svd_calls += res.truncation.svd_calls;
    const double e = measure(res.state);
    c.tebd_seconds += seconds_since(t0);
    gradient_ = (e - last_energy_) / config_.dtau;
    push(res.state, e, res.truncation.discarded_weight, TraceEvent::Tebd);
    return std::move(res.state);
  }

  void push(const Mps& m, double energy, double discarded, TraceEvent event) {
    TraceRecord r;
    r.step = trace_.counters.tebd_steps;
    r.tau = static_cast<double>(r.step) * config_.dtau;
    r.energy = energy;
    r.energy_per_site = energy / static_cast<double>(config_.n_sites);
    r.chi_max = m.max_bond();
    r.chi_av = m.mean_bond();
    r.discarded_weight = discarded;
    r.event = event;
    r.wall_time = seconds_since(start_);
    trace_.records.push_back(r);
    last_energy_ = energy;
  }

  double scaled(double value) const {
    return config_.convergence_mode == ConvergenceMode::PerSite
               ? value / static_cast<double>(config_.n_sites)
               : value;
  }

  bool converged() const {
    return std::abs(scaled(last_energy_ - trace_.reference_energy)) <= config_.convergence_tol;
  }

  /// |dE/dtau| of the most recent TEBD step, in the configured mode.
  double gradient() const { return std::abs(scaled(gradient_)); }

  RunResult finish(Mps state, bool converged) {
    trace_.converged = converged;
    trace_.wall_time = seconds_since(start_);
    if (config_.compute_fidelity && config_.n_sites <= kDenseReferenceSites) {
      if (!ground_) ground_ = oracle::ground_state(model_);
      trace_.final_fidelity = oracle::fidelity(ground_->state, oracle::dense_from_mps(state));
    }
    return {std::move(state), std::move(trace_)};
  }

  static double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }

 private:
  RunConfig config_;
  BondModel model_;
  Mpo mpo_;
  GateSchedule schedule_;
  TebdParams params_;
  std::chrono::steady_clock::time_point start_;
  RunTrace trace_;
  std::optional<oracle::GroundState> ground_;
  double last_energy_ = 0.0;
  double gradient_ = std::numeric_limits<double>::infinity();
};

inline Mps initial_state(const RunConfig& config, const std::optional<Mps>& initial) {
  if (!initial) return random_product_state(config.n_sites, config.seed);
  if (initial->size() != config.n_sites || initial->phys_dim != 2)
    throw InvalidInput("initial state does not match the model size");
  return normalize(*initial);
}

}  // namespace detail

/// Plain TEBD until |E - E_ref| <= tol (in the configured mode) or max_steps.
inline RunResult ite_run(const RunConfig& config, const std::optional<Mps>& initial = std::nullopt) {
  config.validate();
  detail::RunState run(config, Method::Ite);
  Mps psi = detail::initial_state(config, initial);
  run.set_initial(psi);
  while (run.budget_left()) {
    psi = run.step(psi);
    if (run.converged()) return run.finish(std::move(psi), true);
  }
  return run.finish(std::move(psi), false);
}

/// TEBD with boosts.
///
///  1. t = U psi_i (ns_initial steps for the very first pair).
///  2. From F, E_i, E_t, E_it pick the lowest-energy state r on the great
///     circle through psi_i and t and build it; keep it only if its measured
///     energy is below E_t, otherwise continue from t.
///  3. psi_i' = U r, t' = U psi_i'.
///  4. Repeat with (psi_i', t') until converged.
///
/// Boosting is switched on the first time |dE/dtau| <= boost_threshold and
/// stays on. Before that every loop is a single TEBD step, so with a
/// threshold of zero the run is record-for-record identical to ite_run.
inline RunResult bite_run(const RunConfig& config, const std::optional<Mps>& initial = std::nullopt) {
  config.validate();
  detail::RunState run(config, Method::Bite);
  auto& counters = run.trace().counters;
  Mps psi_i = detail::initial_state(config, initial);
  run.set_initial(psi_i);

  Mps t = psi_i;
  for (std::size_t k = 0; k < config.ns_initial; ++k) {
    if (!run.budget_left()) return run.finish(std::move(t), false);
    t = run.step(t);
    if (run.converged()) return run.finish(std::move(t), true);
  }

  bool boosting = false;
  while (run.budget_left()) {
    if (!boosting && config.boost_threshold > 0.0 && run.gradient() <= config.boost_threshold)
      boosting = true;

    if (!boosting) {
      psi_i = t;
      t = run.step(t);
      if (run.converged()) return run.finish(std::move(t), true);
      continue;
    }

    const auto t0 = std::chrono::steady_clock::now();
    ++counters.boosts_attempted;
    const double e_t = run.trace().records.back().energy;
    Mps next = t;
    TraceEvent event = TraceEvent::BoostSkipped;
    double realized = e_t;
    double discarded = 0.0;
    try {
      const BoostInputs in = compute_inputs(psi_i, t, run.mpo());
      counters.overlap_contractions += 4;
      if (auto sel = select_boost(in)) {
        auto boosted = build_boosted_state(psi_i, t, *sel, in.theta, config.chi_max, config.svd_tol, run.mpo());
        counters.overlap_contractions += 3;
        counters.svd_calls += boosted.truncation.svd_calls;
        if (boosted.realized_energy < e_t) {
          event = TraceEvent::BoostAccepted;
          realized = boosted.realized_energy;
          discarded = boosted.truncation.discarded_weight;
          next = std::move(boosted.state);
        } else {
          event = TraceEvent::BoostRejected;
        }
      }
    } catch (const DegeneratePlane&) {
      event = TraceEvent::BoostSkipped;
    }
    counters.boost_seconds += detail::RunState::seconds_since(t0);

    // Rejected and skipped records report the state that is kept, |t>.
    run.push(next, realized, discarded, event);
    if (event == TraceEvent::BoostAccepted) {
      ++counters.boosts_accepted;
      if (run.converged()) return run.finish(std::move(next), true);
    }

    if (!run.budget_left()) return run.finish(std::move(next), false);
    psi_i = run.step(next);
    if (run.converged()) return run.finish(std::move(psi_i), true);
    if (!run.budget_left()) return run.finish(std::move(psi_i), false);
    t = run.step(psi_i);
    if (run.converged()) return run.finish(std::move(t), true);
  }
  return run.finish(std::move(t), false);
}

inline RunResult run(const RunConfig& config, const std::optional<Mps>& initial = std::nullopt) {
  return config.method == Method::Ite ? ite_run(config, initial) : bite_run(config, initial);
}

}  // namespace bite
