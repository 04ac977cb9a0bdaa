#pragma once

// Transverse-field Ising chain H = -J sum X_j X_{j+1} - g sum Z_j with open
// boundaries, written as a sum of two-site bond terms, and the Trotter gate
// schedules built from it.

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Eigenvalues>

#include "bite/mpo.hpp"

namespace bite {

namespace pauli {
inline Matrix identity() { return Matrix::Identity(2, 2); }
inline Matrix x() { return (Matrix(2, 2) << 0, 1, 1, 0).finished(); }
inline Matrix z() { return (Matrix(2, 2) << 1, 0, 0, -1).finished(); }
}  // namespace pauli

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

struct BondModel {
  std::size_t n_sites = 0;
  std::size_t phys_dim = 2;
  double coupling = 0.0;  // J
  double field = 0.0;     // g
  /// h_{j,j+1} for j = 0 .. n_sites-2, each d^2 x d^2.
  std::vector<Matrix> bond_terms;
};

/// Field terms are shared half-and-half between the two bonds touching an
/// interior site; an edge site has only one bond and gives it the full weight.
inline BondModel build_bond_model(std::size_t n_sites, double coupling, double field) {
  if (n_sites < 2) throw InvalidInput("TFIM needs at least two sites");
  BondModel model;
  model.n_sites = n_sites;
  model.coupling = coupling;
  model.field = field;
  const Matrix id = pauli::identity();
  const Matrix xx = kron(pauli::x(), pauli::x());
  const Matrix zi = kron(pauli::z(), id);
  const Matrix iz = kron(id, pauli::z());
  for (std::size_t j = 0; j + 1 < n_sites; ++j) {
    const double w_left = j == 0 ? 1.0 : 0.5;
    const double w_right = j + 2 == n_sites ? 1.0 : 0.5;
    model.bond_terms.push_back(-coupling * xx - field * (w_left * zi + w_right * iz));
  }
  return model;
}

inline Mpo build_mpo(const BondModel& model) {
  return mpo_from_bond_terms(model.bond_terms, model.phys_dim);
}

/// Bonds (j, j+1) with even j are the even set (0-based).
enum class Parity { Even, Odd };

struct GateLayer {
  Parity parity = Parity::Even;
  double scale = 1.0;  // fraction of dtau used by every gate in the layer
  std::vector<std::size_t> bonds;
  std::vector<Matrix> gates;  // gates[i] = exp(-h_{bonds[i]} * scale * dtau)
};

struct GateSchedule {
  int order = 2;
  double dtau = 0.0;
  std::size_t n_sites = 0;
  std::vector<GateLayer> layers;

  std::size_t gate_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.gates.size();
    return n;
  }
};

/// exp(-h * t) for a real symmetric h.
inline Matrix symmetric_exp(const Matrix& h, double t) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(h);
  const Vector w = (-t * eig.eigenvalues().array()).exp().matrix();
  return eig.eigenvectors() * w.asDiagonal() * eig.eigenvectors().transpose();
}

/// Layers in the order they act on a ket.
///
/// order 1: even then odd, i.e. U = exp(-H_odd dt) exp(-H_even dt).
/// order 2: even(dt/2), odd(dt), even(dt/2).
inline GateSchedule trotter_gates(const BondModel& model, double dtau, int order) {
  if (!(dtau >= 0.0)) throw InvalidInput("dtau must be non-negative");
  std::vector<std::pair<Parity, double>> plan;
  if (order == 1) {
    plan = {{Parity::Even, 1.0}, {Parity::Odd, 1.0}};
  } else if (order == 2) {
    plan = {{Parity::Even, 0.5}, {Parity::Odd, 1.0}, {Parity::Even, 0.5}};
  } else {
    throw InvalidInput("Trotter order must be 1 or 2");
  }
  GateSchedule sched;
  sched.order = order;
  sched.dtau = dtau;
  sched.n_sites = model.n_sites;
  for (auto [parity, scale] : plan) {
    GateLayer layer;
    layer.parity = parity;
    layer.scale = scale;
    for (std::size_t j = parity == Parity::Even ? 0 : 1; j < model.bond_terms.size(); j += 2) {
      layer.bonds.push_back(j);
      layer.gates.push_back(symmetric_exp(model.bond_terms[j], scale * dtau));
    }
    sched.layers.push_back(std::move(layer));
  }
  return sched;
}

}  // namespace bite
