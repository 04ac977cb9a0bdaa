#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "bite/mps.hpp"

namespace bite {

/// One MPO site: a left x right grid of d x d operators. An empty (0x0)
/// entry stands for the zero operator and is skipped during contraction.
struct MpoSite {
  std::size_t left = 1;
  std::size_t right = 1;
  std::vector<Matrix> ops;

  Matrix& at(std::size_t wl, std::size_t wr) { return ops[wl * right + wr]; }
  const Matrix& at(std::size_t wl, std::size_t wr) const { return ops[wl * right + wr]; }
};

struct Mpo {
  std::vector<MpoSite> sites;
  std::size_t phys_dim = 2;

  std::size_t size() const { return sites.size(); }
};

/// Finite-state MPO for a sum of nearest-neighbour two-site terms.
///
/// Each d^2 x d^2 term is split into sum_k L_k (x) R_k by an operator Schmidt
/// decomposition. Channel 0 means "nothing placed yet", channel 1 "term
/// finished", channels 2.. carry a pending L_k waiting for its R_k.
inline Mpo mpo_from_bond_terms(const std::vector<Matrix>& bond_terms, std::size_t d) {
  const std::size_t n = bond_terms.size() + 1;
  if (n < 2) throw InvalidInput("need at least one bond term");

  std::vector<std::vector<Matrix>> lefts(bond_terms.size()), rights(bond_terms.size());
  for (std::size_t j = 0; j < bond_terms.size(); ++j) {
    const Matrix& h = bond_terms[j];
    if (h.rows() != static_cast<Eigen::Index>(d * d) || h.cols() != h.rows())
      throw InvalidInput("bond term must be d^2 x d^2");
    // reshuffled(s1 s1', s2 s2') = h(s1 s2, s1' s2')
    Matrix reshuffled(d * d, d * d);
    for (std::size_t s1 = 0; s1 < d; ++s1)
      for (std::size_t s2 = 0; s2 < d; ++s2)
        for (std::size_t t1 = 0; t1 < d; ++t1)
          for (std::size_t t2 = 0; t2 < d; ++t2)
            reshuffled(s1 * d + t1, s2 * d + t2) = h(s1 * d + s2, t1 * d + t2);
    Eigen::JacobiSVD<Matrix> svd(reshuffled, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector& sv = svd.singularValues();
    for (Eigen::Index k = 0; k < sv.size(); ++k) {
      if (sv[k] <= 1e-14 * std::max(1.0, sv[0])) break;
      Matrix l(d, d), r(d, d);
      const double w = std::sqrt(sv[k]);
      for (std::size_t s = 0; s < d; ++s)
        for (std::size_t t = 0; t < d; ++t) {
          l(s, t) = w * svd.matrixU()(s * d + t, k);
          r(s, t) = w * svd.matrixV()(s * d + t, k);
        }
      lefts[j].push_back(l);
      rights[j].push_back(r);
    }
  }

  const Matrix id = Matrix::Identity(d, d);
  auto bond_width = [&](std::size_t j) { return 2 + lefts[j].size(); };

  Mpo mpo;
  mpo.phys_dim = d;
  for (std::size_t site = 0; site < n; ++site) {
    // Boundaries keep only the start (left edge) or finished (right edge) channel.
    MpoSite w;
    w.left = site == 0 ? 1 : bond_width(site - 1);
    w.right = site + 1 == n ? 1 : bond_width(site);
    w.ops.assign(w.left * w.right, Matrix());
    auto put = [&](std::size_t cl, std::size_t cr, const Matrix& op) {
      if (site == 0 && cl != 0) return;
      if (site + 1 == n && cr != 1) return;
      const std::size_t il = site == 0 ? 0 : cl;
      const std::size_t ir = site + 1 == n ? 0 : cr;
      w.at(il, ir) = op;
    };
    if (site + 1 < n) put(0, 0, id);
    if (site > 0) put(1, 1, id);
    if (site + 1 < n)
      for (std::size_t k = 0; k < lefts[site].size(); ++k) put(0, 2 + k, lefts[site][k]);
    if (site > 0)
      for (std::size_t k = 0; k < rights[site - 1].size(); ++k) put(2 + k, 1, rights[site - 1][k]);
    mpo.sites.push_back(std::move(w));
  }
  return mpo;
}

namespace detail {

inline double raw_matrix_element(const Mps& a, const Mpo& h, const Mps& b) {
  const std::size_t d = a.phys_dim;
  std::vector<RowMatrix> env{RowMatrix::Ones(1, 1)};
  for (std::size_t k = 0; k < a.size(); ++k) {
    const auto& ta = a.sites[k];
    const auto& tb = b.sites[k];
    const auto& w = h.sites[k];
    std::vector<RowMatrix> next(w.right, RowMatrix::Zero(static_cast<Eigen::Index>(ta.right()),
                                                         static_cast<Eigen::Index>(tb.right())));
    const auto rb = static_cast<Eigen::Index>(tb.right());
    for (std::size_t wl = 0; wl < w.left; ++wl) {
      RowMatrix tmp = env[wl] * tb.right_grouped();  // la x (d*rb), column block s' holds E B_{s'}
      for (std::size_t wr = 0; wr < w.right; ++wr) {
        const Matrix& op = w.at(wl, wr);
        if (op.size() == 0) continue;
        RowMatrix mixed = RowMatrix::Zero(static_cast<Eigen::Index>(ta.left() * d), rb);
        for (std::size_t la = 0; la < ta.left(); ++la)
          for (std::size_t s = 0; s < d; ++s)
            for (std::size_t sp = 0; sp < d; ++sp) {
              const double c = op(s, sp);
              if (c == 0.0) continue;
              mixed.row(static_cast<Eigen::Index>(la * d + s)) +=
                  c * tmp.block(static_cast<Eigen::Index>(la), static_cast<Eigen::Index>(sp) * rb, 1, rb);
            }
        next[wr].noalias() += ta.left_grouped().transpose() * mixed;
      }
    }
    env = std::move(next);
  }
  return env[0](0, 0);
}

inline void check_operator(const Mps& m, const Mpo& h) {
  if (m.size() != h.size() || m.phys_dim != h.phys_dim)
    throw InvalidInput("MPO and MPS shapes differ");
}

}  // namespace detail

/// <a|H|b> including log_norm factors. Not divided by any norm.
inline double matrix_element(const Mps& a, const Mpo& h, const Mps& b) {
  detail::check_compatible(a, b);
  detail::check_operator(a, h);
  return detail::raw_matrix_element(a, h, b) * std::exp(a.log_norm + b.log_norm);
}

/// Rayleigh quotient <m|H|m> / <m|m>.
inline double expectation(const Mps& m, const Mpo& h) {
  detail::check_operator(m, h);
  const double nrm = detail::raw_overlap(m, m);
  if (!(nrm > 1e-300)) throw DegenerateState("expectation value of a zero-norm state");
  return detail::raw_matrix_element(m, h, m) / nrm;
}

}  // namespace bite
