#pragma once

// Dense statevector ground truth: conversions to and from MPS, exact
// imaginary-time steps, explicit reflections, exact diagonalization and the
// free-fermion solution of the open TFIM chain.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Eigenvalues>

#include "bite/tfim.hpp"

namespace bite::oracle {

inline constexpr std::size_t kMaxDenseAmplitudes = std::size_t{1} << 20;
inline constexpr std::size_t kMaxEigensolverDim = 4096;

struct DenseState {
  Vector amplitudes;
  std::size_t n_sites = 0;
  std::size_t phys_dim = 2;

  double norm() const { return amplitudes.norm(); }
  DenseState normalized() const {
    DenseState out = *this;
    out.amplitudes /= amplitudes.norm();
    return out;
  }
};

struct Spectrum {
  Vector energies;    // ascending
  Matrix vectors;     // column j is the eigenvector of energies[j]
  std::size_t n_sites = 0;

  DenseState state(Eigen::Index j) const { return {vectors.col(j), n_sites, 2}; }
};

inline std::size_t dense_dim(std::size_t n_sites, std::size_t d) {
  std::size_t dim = 1;
  for (std::size_t k = 0; k < n_sites; ++k) {
    dim *= d;
    if (dim > kMaxDenseAmplitudes) throw TooLarge("dense state exceeds 2^20 amplitudes");
  }
  return dim;
}

inline DenseState dense_from_mps(const Mps& m) {
  dense_dim(m.size(), m.phys_dim);
  RowMatrix acc = RowMatrix::Ones(1, 1);
  for (const auto& site : m.sites) {
    RowMatrix next = acc * site.right_grouped();
    acc = Eigen::Map<RowMatrix>(next.data(), next.rows() * static_cast<Eigen::Index>(m.phys_dim),
                                static_cast<Eigen::Index>(site.right()));
  }
  DenseState out;
  out.n_sites = m.size();
  out.phys_dim = m.phys_dim;
  out.amplitudes = Eigen::Map<const Vector>(acc.data(), acc.size()) * std::exp(m.log_norm);
  return out;
}

/// Exact MPS by successive SVDs; singular values below 1e-13 of the largest are dropped.
inline Mps mps_from_dense(const DenseState& v) {
  const std::size_t d = v.phys_dim;
  if (static_cast<std::size_t>(v.amplitudes.size()) != dense_dim(v.n_sites, d))
    throw InvalidInput("dense state length is not d^N");
  const double nrm = v.amplitudes.norm();
  if (!(nrm > 0.0)) throw DegenerateState("cannot convert a zero vector");
  Mps m;
  m.phys_dim = d;
  m.log_norm = std::log(nrm);
  Vector unit = v.amplitudes / nrm;
  RowMatrix rest = Eigen::Map<const RowMatrix>(unit.data(), 1, unit.size());
  for (std::size_t k = 0; k + 1 < v.n_sites; ++k) {
    const Eigen::Index left = rest.rows();
    RowMatrix grouped =
        Eigen::Map<RowMatrix>(rest.data(), left * static_cast<Eigen::Index>(d), rest.size() / (left * d));
    Eigen::BDCSVD<Matrix> svd(Matrix(grouped), Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    Eigen::Index keep = 1;
    while (keep < s.size() && s[keep] > 1e-13 * s[0]) ++keep;
    m.sites.push_back(SiteTensor::from_left_grouped(RowMatrix(svd.matrixU().leftCols(keep)), d));
    rest = RowMatrix(s.head(keep).asDiagonal() * svd.matrixV().leftCols(keep).transpose());
  }
  m.sites.push_back(SiteTensor::from_right_grouped(rest, d));
  m.center = v.n_sites - 1;
  return m;
}

/// Dense H from a bond model by embedding every bond term.
inline Matrix dense_hamiltonian(const BondModel& model) {
  const std::size_t n = model.n_sites;
  const std::size_t dim = dense_dim(n, 2);
  if (dim > kMaxEigensolverDim * 4) throw TooLarge("dense Hamiltonian too large");
  Matrix h = Matrix::Zero(dim, dim);
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const auto left = static_cast<Eigen::Index>(std::size_t{1} << j);
    const auto right = static_cast<Eigen::Index>(std::size_t{1} << (n - j - 2));
    h += kron(kron(Matrix::Identity(left, left), model.bond_terms[j]), Matrix::Identity(right, right));
  }
  return h;
}

/// Dense -J sum X X - g sum Z built directly from Pauli strings.
inline Matrix dense_tfim_hamiltonian(std::size_t n, double coupling, double field) {
  const std::size_t dim = dense_dim(n, 2);
  if (dim > kMaxEigensolverDim * 4) throw TooLarge("dense Hamiltonian too large");
  auto embed = [n](const std::vector<std::pair<std::size_t, Matrix>>& ops) {
    Matrix out = Matrix::Identity(1, 1);
    for (std::size_t k = 0; k < n; ++k) {
      Matrix op = pauli::identity();
      for (const auto& [site, m] : ops)
        if (site == k) op = m;
      out = kron(out, op);
    }
    return out;
  };
  Matrix h = Matrix::Zero(dim, dim);
  for (std::size_t j = 0; j + 1 < n; ++j) h -= coupling * embed({{j, pauli::x()}, {j + 1, pauli::x()}});
  for (std::size_t j = 0; j < n; ++j) h -= field * embed({{j, pauli::z()}});
  return h;
}

/// H|v> without forming H: each bond term acts on its pair of digits.
inline Vector apply_hamiltonian(const BondModel& model, const Vector& v) {
  const std::size_t n = model.n_sites;
  const std::size_t dim = static_cast<std::size_t>(v.size());
  Vector out = Vector::Zero(v.size());
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const Matrix& h = model.bond_terms[j];
    const std::size_t stride = std::size_t{1} << (n - j - 2);  // weight of digit j+1
    for (std::size_t base = 0; base < dim; ++base) {
      if ((base / stride) % 4 != 0) continue;  // digits j, j+1 both zero
      std::size_t idx[4];
      double in[4];
      for (std::size_t c = 0; c < 4; ++c) {
        idx[c] = base + c * stride;
        in[c] = v[static_cast<Eigen::Index>(idx[c])];
      }
      for (std::size_t r = 0; r < 4; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < 4; ++c) acc += h(r, c) * in[c];
        out[static_cast<Eigen::Index>(idx[r])] += acc;
      }
    }
  }
  return out;
}

inline Spectrum exact_spectrum(const Matrix& h, std::size_t n_sites) {
  if (static_cast<std::size_t>(h.rows()) > kMaxEigensolverDim)
    throw TooLarge("exact_spectrum is limited to dimension 4096");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(h);
  return {eig.eigenvalues(), eig.eigenvectors(), n_sites};
}

struct GroundState {
  double energy = 0.0;
  DenseState state;
};

/// Lowest eigenpair by Lanczos with full reorthogonalization on a matrix-free H.
/// Used for chains too long for the dense eigensolver.
inline GroundState lanczos_ground_state(const BondModel& model, double tol = 1e-12,
                                        std::size_t max_iter = 300) {
  const std::size_t dim = dense_dim(model.n_sites, 2);
  const std::size_t iters = std::min(max_iter, dim);
  std::vector<Vector> basis;
  std::vector<double> diag, off;
  // Deterministic start with weight on every basis state.
  Vector q = Vector::Ones(static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < dim; ++i) q[static_cast<Eigen::Index>(i)] += 0.1 * std::sin(1.0 + 0.37 * static_cast<double>(i));
  q.normalize();
  GroundState out;
  double last = std::numeric_limits<double>::infinity();
  Vector ritz;
  for (std::size_t k = 0; k < iters; ++k) {
    basis.push_back(q);
    Vector w = apply_hamiltonian(model, q);
    diag.push_back(q.dot(w));
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis) w -= b.dot(w) * b;
    const double beta = w.norm();

    const auto m = static_cast<Eigen::Index>(diag.size());
    Matrix tri = Matrix::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      tri(i, i) = diag[static_cast<std::size_t>(i)];
      if (i + 1 < m) tri(i, i + 1) = tri(i + 1, i) = off[static_cast<std::size_t>(i)];
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(tri);
    const double e0 = eig.eigenvalues()[0];
    ritz = eig.eigenvectors().col(0);
    const double residual = std::abs(beta * ritz[m - 1]);
    const bool done = residual < tol || beta < 1e-14 || std::abs(e0 - last) < 1e-15;
    last = e0;
    out.energy = e0;
    if (done) break;
    off.push_back(beta);
    q = w / beta;
  }
  Vector v = Vector::Zero(static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < basis.size() && static_cast<Eigen::Index>(i) < ritz.size(); ++i)
    v += ritz[static_cast<Eigen::Index>(i)] * basis[i];
  v.normalize();
  if (v.sum() < 0) v = -v;
  out.state = {v, model.n_sites, 2};
  out.energy = v.dot(apply_hamiltonian(model, v));
  return out;
}

/// Exact ground state: dense eigensolver when it fits, Lanczos otherwise (up to N = 20).
inline GroundState ground_state(const BondModel& model) {
  if (dense_dim(model.n_sites, 2) <= 1024) {
    auto spec = exact_spectrum(dense_hamiltonian(model), model.n_sites);
    return {spec.energies[0], spec.state(0)};
  }
  return lanczos_ground_state(model);
}

/// exp(-H dtau) v, renormalized.
inline DenseState dense_ite_step(const DenseState& v, const Matrix& h, double dtau) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(h);
  Vector coeffs = eig.eigenvectors().transpose() * v.amplitudes;
  coeffs.array() *= (-dtau * (eig.eigenvalues().array() - eig.eigenvalues()[0])).exp();
  DenseState out = v;
  out.amplitudes = eig.eigenvectors() * coeffs;
  out.amplitudes.normalize();
  return out;
}

/// R(|v>)|u> = 2 <v|u> v - u, with v taken as the unit vector along v.
///
/// Dividing by <v|v> does nothing for an exactly normalized v, but without it
/// a chain of reflections feeds each step's norm error back into the next and
/// blows up within a few dozen steps when theta is small.
inline DenseState dense_reflect(const DenseState& v, const DenseState& u) {
  DenseState out = u;
  const double vv = v.amplitudes.squaredNorm();
  out.amplitudes = (2.0 * v.amplitudes.dot(u.amplitudes) / vv) * v.amplitudes - u.amplitudes;
  return out;
}

/// r_n by n explicit reflections, r_k = R(r_{k-1}) r_{k-2} with r_0 = t, r_{-1} = psi_i.
inline DenseState brute_force_boost(const DenseState& psi_i, const DenseState& t, std::size_t n) {
  DenseState prev = psi_i;
  DenseState cur = t;
  for (std::size_t k = 0; k < n; ++k) {
    DenseState next = dense_reflect(cur, prev);
    prev = std::move(cur);
    cur = std::move(next);
  }
  return cur;
}

/// Ground energy of the open TFIM chain from its Bogoliubov-de Gennes matrix.
///
/// Jordan-Wigner with Z_j = 1 - 2 n_j turns H into
///   sum_ij A_ij c_i^+ c_j + 1/2 sum_ij B_ij (c_i^+ c_j^+ + h.c.) - g N
/// with A_jj = 2g, A_{j,j+1} = -J, B_{j,j+1} = -B_{j+1,j} = -J. The ground
/// energy is half the sum of the negative BdG eigenvalues plus Tr(A)/2 - gN.
/// A and B are accumulated bond by bond with the same edge weighting as the
/// bond model.
inline double tfim_free_fermion_energy(std::size_t n, double coupling, double field) {
  if (n < 2) throw InvalidInput("free-fermion solver needs at least two sites");
  Matrix a = Matrix::Zero(n, n);
  Matrix b = Matrix::Zero(n, n);
  double constant = 0.0;
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const double w_left = j == 0 ? 1.0 : 0.5;
    const double w_right = j + 2 == n ? 1.0 : 0.5;
    // -g w Z_j = -g w + 2 g w n_j
    for (auto [site, w] : {std::pair{j, w_left}, std::pair{j + 1, w_right}}) {
      a(site, site) += 2.0 * field * w;
      constant -= field * w;
    }
    // -J X_j X_{j+1} = -J (c_j^+ c_{j+1} + c_{j+1}^+ c_j + c_j^+ c_{j+1}^+ + c_{j+1} c_j)
    a(j, j + 1) -= coupling;
    a(j + 1, j) -= coupling;
    b(j, j + 1) -= coupling;
    b(j + 1, j) += coupling;
  }
  Matrix bdg(2 * n, 2 * n);
  bdg << a, b, -b, -a;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(bdg, Eigen::EigenvaluesOnly);
  double negative = 0.0;
  for (Eigen::Index k = 0; k < eig.eigenvalues().size(); ++k)
    negative += std::min(0.0, eig.eigenvalues()[k]);
  return 0.5 * negative + 0.5 * a.trace() + constant;
}

/// |<phi|psi>|^2 for normalized-on-the-fly states.
inline double fidelity(const DenseState& phi, const DenseState& psi) {
  const double o = phi.amplitudes.dot(psi.amplitudes) / (phi.norm() * psi.norm());
  return o * o;
}

}  // namespace bite::oracle
