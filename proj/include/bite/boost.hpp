#pragma once

// Boosting along the great circle spanned by an initial state |psi_i> and an
// imaginary-time evolved state |t>.
//
// Repeated reflections r_n = R(r_{n-1}) r_{n-2}, with r_0 = t and
// r_{-1} = psi_i, rotate by a constant angle theta = arccos <t|psi_i> inside
// span{t, psi_i}. The n-th state and its energy follow in closed form:
//
//   r_n   = alpha_n t - alpha_{n-1} psi_i,     alpha_n = sin((n+1) theta) / sin(theta)
//   E_n   = alpha_n^2 E_t + alpha_{n-1}^2 E_i - 2 alpha_n alpha_{n-1} E_it
//
// so the whole circle can be scanned with scalars only and a single MPS
// addition builds the chosen state.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <vector>

#include "bite/mpo.hpp"

namespace bite {

namespace boost_limits {
/// F at or above 1 - this is treated as parallel states.
inline constexpr double kParallelTolerance = 1e-12;
/// Smallest sin(theta) the closed form will divide by.
inline constexpr double kSinFloor = 1e-12;
/// Selection must beat E_t by more than this to count as an improvement.
inline constexpr double kEnergyGuard = 1e-12;
inline constexpr std::size_t kMaxReflections = 1'000'000;
}  // namespace boost_limits

struct BoostInputs {
  double overlap = 0.0;  // F = <t|psi_i>
  double theta = 0.0;    // arccos(F)
  double energy_initial = 0.0;  // E_i
  double energy_evolved = 0.0;  // E_t
  double energy_cross = 0.0;    // E_it = <psi_i|H|t>
  std::size_t n_max = 0;        // floor(2 pi / theta), capped
};

/// Validate the four plane scalars and derive theta and n_max.
inline BoostInputs make_boost_inputs(double overlap, double energy_initial, double energy_evolved,
                                     double energy_cross) {
  if (!(overlap > 0.0)) throw InvalidPlane("boost plane has non-positive overlap F");
  if (overlap >= 1.0 - boost_limits::kParallelTolerance)
    throw DegeneratePlane("boost plane states are parallel (F ~ 1)");
  BoostInputs in;
  in.overlap = overlap;
  in.theta = std::acos(overlap);
  in.energy_initial = energy_initial;
  in.energy_evolved = energy_evolved;
  in.energy_cross = energy_cross;
  const double turns = 2.0 * std::numbers::pi / in.theta;
  in.n_max = turns >= static_cast<double>(boost_limits::kMaxReflections)
                 ? boost_limits::kMaxReflections
                 : static_cast<std::size_t>(std::floor(turns + 1e-9));
  return in;
}

/// F, E_i, E_t and E_it from four contractions. Both states are renormalized first.
inline BoostInputs compute_inputs(const Mps& psi_i, const Mps& t, const Mpo& h) {
  const Mps a = normalize(psi_i);
  const Mps b = normalize(t);
  const double f = overlap(b, a);
  const double e_i = matrix_element(a, h, a);
  const double e_t = matrix_element(b, h, b);
  const double e_it = matrix_element(a, h, b);
  return make_boost_inputs(f, e_i, e_t, e_it);
}

/// alpha_n = sin((n+1) theta) / sin(theta). Valid for negative n too (alpha_{-1} = 0).
inline double alpha(long n, double theta) {
  const double s = std::sin(theta);
  if (std::abs(s) < boost_limits::kSinFloor) throw DegeneratePlane("sin(theta) is too small");
  return std::sin(static_cast<double>(n + 1) * theta) / s;
}

/// alpha_0 .. alpha_{n_max} from the three-term recurrence alpha_n = 2F alpha_{n-1} - alpha_{n-2}.
/// Only used to cross-check the closed form; it drifts for small theta over long runs.
inline std::vector<double> alpha_series_recurrence(double overlap, std::size_t n_max) {
  std::vector<double> out;
  out.reserve(n_max + 1);
  double prev = 0.0;  // alpha_{-1}
  double cur = 1.0;   // alpha_0
  out.push_back(cur);
  for (std::size_t n = 1; n <= n_max; ++n) {
    const double next = 2.0 * overlap * cur - prev;
    prev = cur;
    cur = next;
    out.push_back(cur);
  }
  return out;
}

/// E_n for n = 0 .. n_max.
inline std::vector<double> energy_series(const BoostInputs& in) {
  const double s = std::sin(in.theta);
  if (std::abs(s) < boost_limits::kSinFloor) throw DegeneratePlane("sin(theta) is too small");
  std::vector<double> out;
  out.reserve(in.n_max + 1);
  double a_prev = 0.0;  // alpha_{-1}
  for (std::size_t n = 0; n <= in.n_max; ++n) {
    const double a = std::sin(static_cast<double>(n + 1) * in.theta) / s;
    out.push_back(a * a * in.energy_evolved + a_prev * a_prev * in.energy_initial -
                  2.0 * a * a_prev * in.energy_cross);
    a_prev = a;
  }
  return out;
}

struct BoostSelection {
  std::size_t n_star = 0;
  double predicted_energy = 0.0;
  double alpha_n = 0.0;
  double alpha_nm1 = 0.0;
  std::vector<double> energy_series;
};

/// Lowest E_n over n in [1, n_max], first index on ties. Empty when it does
/// not undercut E_t by more than the energy guard.
inline std::optional<BoostSelection> select_boost(const BoostInputs& in) {
  BoostSelection sel;
  sel.energy_series = energy_series(in);
  if (sel.energy_series.size() < 2) return std::nullopt;
  std::size_t best = 1;
  for (std::size_t n = 2; n < sel.energy_series.size(); ++n)
    if (sel.energy_series[n] < sel.energy_series[best]) best = n;
  if (!(sel.energy_series[best] < in.energy_evolved - boost_limits::kEnergyGuard)) return std::nullopt;
  sel.n_star = best;
  sel.predicted_energy = sel.energy_series[best];
  sel.alpha_n = alpha(static_cast<long>(best), in.theta);
  sel.alpha_nm1 = alpha(static_cast<long>(best) - 1, in.theta);
  return sel;
}

struct BoostedState {
  Mps state;
  TruncationReport truncation;
  /// <r|H|r> measured on the compressed state.
  double realized_energy = 0.0;
  /// Norm of alpha_n t - alpha_{n-1} psi_i before compression.
  double raw_norm = 0.0;
};

/// r_n built by one MPS addition plus SVD compression back to chi_max.
inline BoostedState build_boosted_state(const Mps& psi_i, const Mps& t, std::size_t n, double theta,
                                        std::size_t chi_max, double svd_tol, const Mpo& h) {
  const Mps a = normalize(psi_i);
  const Mps b = normalize(t);
  const double coef_t = alpha(static_cast<long>(n), theta);
  const double coef_i = -alpha(static_cast<long>(n) - 1, theta);
  BoostedState out;
  Mps sum = add(coef_t, b, coef_i, a);
  out.raw_norm = norm(sum);
  auto compressed = compress(sum, chi_max, svd_tol);
  out.state = std::move(compressed.state);
  out.truncation = compressed.report;
  out.realized_energy = expectation(out.state, h);
  return out;
}

inline BoostedState build_boosted_state(const Mps& psi_i, const Mps& t, const BoostSelection& sel,
                                        double theta, std::size_t chi_max, double svd_tol,
                                        const Mpo& h) {
  return build_boosted_state(psi_i, t, sel.n_star, theta, chi_max, svd_tol, h);
}

}  // namespace bite
