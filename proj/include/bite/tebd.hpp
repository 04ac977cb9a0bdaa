#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "bite/tfim.hpp"

namespace bite {

struct TebdParams {
  std::size_t chi_max = 32;
  double svd_tol = 1e-10;
  int order = 2;
  double dtau = 0.01;
};

struct StepResult {
  Mps state;
  TruncationReport truncation;
  /// log of the norm factor divided out when renormalizing, log ||U psi|| - log ||psi||.
  double log_norm_change = 0.0;
};

/// One Trotter step. Even layers sweep left to right, odd layers right to left,
/// so the orthogonality center always sits next to the bond being updated.
/// The output has unit norm and log_norm 0.
inline StepResult tebd_step(const Mps& m, const GateSchedule& schedule, const TebdParams& params) {
  if (schedule.n_sites != m.size()) throw InvalidInput("gate schedule does not match MPS size");
  if (params.chi_max < 1) throw InvalidInput("chi_max must be at least 1");
  StepResult out;
  out.state = normalize(m, m.center.value_or(0));
  for (const auto& layer : schedule.layers) {
    const std::size_t count = layer.bonds.size();
    for (std::size_t i = 0; i < count; ++i) {
      const bool forward = layer.parity == Parity::Even;
      const std::size_t idx = forward ? i : count - 1 - i;
      auto applied = apply_two_site_gate(out.state, layer.gates[idx], layer.bonds[idx], params.chi_max,
                                         params.svd_tol, forward ? Absorb::Right : Absorb::Left);
      out.state = std::move(applied.state);
      out.truncation.merge(applied.report);
    }
  }
  out.log_norm_change = out.state.log_norm;
  out.state.log_norm = 0.0;
  out.truncation.max_chi_after = out.state.max_bond();
  return out;
}

/// What an observer sees after every step.
struct StepObservation {
  std::size_t step = 0;
  double tau = 0.0;
  double energy = 0.0;
  std::size_t chi_max = 1;
  double chi_av = 1.0;
  double discarded_weight = 0.0;
};

using StepObserver = std::function<void(const StepObservation&)>;

struct EvolveResult {
  Mps state;
  std::vector<StepObservation> records;
  TruncationReport truncation;
  double log_norm_change = 0.0;
};

/// n_steps sequential TEBD steps, reporting the energy w.r.t. `h` after each.
inline EvolveResult evolve(const Mps& m, std::size_t n_steps, const GateSchedule& schedule,
                           const TebdParams& params, const Mpo& h, const StepObserver& observer = {}) {
  EvolveResult out;
  out.state = m;
  for (std::size_t k = 0; k < n_steps; ++k) {
    auto step = tebd_step(out.state, schedule, params);
    out.state = std::move(step.state);
    out.truncation.merge(step.truncation);
    out.log_norm_change += step.log_norm_change;
    StepObservation obs;
    obs.step = k + 1;
    obs.tau = static_cast<double>(k + 1) * schedule.dtau;
    obs.energy = expectation(out.state, h);
    obs.chi_max = out.state.max_bond();
    obs.chi_av = out.state.mean_bond();
    obs.discarded_weight = step.truncation.discarded_weight;
    out.records.push_back(obs);
    if (observer) observer(obs);
  }
  return out;
}

}  // namespace bite
