#pragma once

// Open-boundary, real-valued matrix product states.
//
// Site tensors are stored row-major in (left, phys, right) order. The same
// buffer can be viewed either as a (left*phys) x right matrix ("left grouped")
// or as a left x (phys*right) matrix ("right grouped") without copying.
//
// The represented vector is exp(log_norm) times the plain contraction of the
// site tensors. Dense basis ordering treats site 0 as the most significant
// digit, matching Kronecker products I (x) ... (x) O_j (x) ... .

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bite/errors.hpp"

namespace bite {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class SiteTensor {
 public:
  SiteTensor() = default;
  SiteTensor(std::size_t left, std::size_t phys, std::size_t right)
      : left_(left), phys_(phys), right_(right), data_(left * phys * right, 0.0) {}

  /// Build from a left-grouped (left*phys) x right matrix.
  static SiteTensor from_left_grouped(const RowMatrix& m, std::size_t phys) {
    SiteTensor t(static_cast<std::size_t>(m.rows()) / phys, phys,
                 static_cast<std::size_t>(m.cols()));
    t.left_grouped() = m;
    return t;
  }

  /// Build from a right-grouped left x (phys*right) matrix.
  static SiteTensor from_right_grouped(const RowMatrix& m, std::size_t phys) {
    SiteTensor t(static_cast<std::size_t>(m.rows()), phys,
                 static_cast<std::size_t>(m.cols()) / phys);
    t.right_grouped() = m;
    return t;
  }

  std::size_t left() const { return left_; }
  std::size_t phys() const { return phys_; }
  std::size_t right() const { return right_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t l, std::size_t p, std::size_t r) {
    return data_[(l * phys_ + p) * right_ + r];
  }
  double operator()(std::size_t l, std::size_t p, std::size_t r) const {
    return data_[(l * phys_ + p) * right_ + r];
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  Eigen::Map<RowMatrix> left_grouped() { return {data_.data(), rows_lg(), cols_lg()}; }
  Eigen::Map<const RowMatrix> left_grouped() const { return {data_.data(), rows_lg(), cols_lg()}; }
  Eigen::Map<RowMatrix> right_grouped() { return {data_.data(), rows_rg(), cols_rg()}; }
  Eigen::Map<const RowMatrix> right_grouped() const { return {data_.data(), rows_rg(), cols_rg()}; }

  /// The left x right matrix A^p for a fixed physical index.
  Eigen::Map<const RowMatrix, 0, Eigen::OuterStride<>> slice(std::size_t p) const {
    return {data_.data() + p * right_, static_cast<Eigen::Index>(left_),
            static_cast<Eigen::Index>(right_),
            Eigen::OuterStride<>(static_cast<Eigen::Index>(phys_ * right_))};
  }

  double norm() const {
    return std::sqrt(std::inner_product(data_.begin(), data_.end(), data_.begin(), 0.0));
  }

  void scale(double s) {
    for (auto& x : data_) x *= s;
  }

 private:
  Eigen::Index rows_lg() const { return static_cast<Eigen::Index>(left_ * phys_); }
  Eigen::Index cols_lg() const { return static_cast<Eigen::Index>(right_); }
  Eigen::Index rows_rg() const { return static_cast<Eigen::Index>(left_); }
  Eigen::Index cols_rg() const { return static_cast<Eigen::Index>(phys_ * right_); }

  std::size_t left_ = 1;
  std::size_t phys_ = 2;
  std::size_t right_ = 1;
  std::vector<double> data_ = std::vector<double>(2, 0.0);
};

struct Mps {
  std::vector<SiteTensor> sites;
  std::size_t phys_dim = 2;
  /// Orthogonality center, if the gauge is known.
  std::optional<std::size_t> center;
  double log_norm = 0.0;

  std::size_t size() const { return sites.size(); }

  /// Internal bond dimensions chi_0 .. chi_{N-2} (bond k sits between sites k and k+1).
  std::vector<std::size_t> bond_dims() const {
    std::vector<std::size_t> dims;
    for (std::size_t k = 0; k + 1 < sites.size(); ++k) dims.push_back(sites[k].right());
    return dims;
  }

  std::size_t max_bond() const {
    std::size_t chi = 1;
    for (auto c : bond_dims()) chi = std::max(chi, c);
    return chi;
  }

  double mean_bond() const {
    auto dims = bond_dims();
    if (dims.empty()) return 1.0;
    return static_cast<double>(std::accumulate(dims.begin(), dims.end(), std::size_t{0})) /
           static_cast<double>(dims.size());
  }
};

struct TruncationReport {
  /// Sum over all SVDs of the relative squared weight that was dropped.
  double discarded_weight = 0.0;
  std::size_t max_chi_after = 0;
  /// Bonds that were re-split, in the order they were visited.
  std::vector<std::size_t> bonds;
  std::size_t svd_calls = 0;

  void merge(const TruncationReport& other) {
    discarded_weight += other.discarded_weight;
    max_chi_after = std::max(max_chi_after, other.max_chi_after);
    bonds.insert(bonds.end(), other.bonds.begin(), other.bonds.end());
    svd_calls += other.svd_calls;
  }
};

/// Which side of a two-site split receives the singular values.
enum class Absorb { Right, Left };

namespace detail {

inline void check_valid(const Mps& m) {
  if (m.sites.empty()) throw InvalidInput("MPS has no sites");
  if (m.sites.front().left() != 1 || m.sites.back().right() != 1)
    throw InvalidInput("MPS boundary bonds must have dimension 1");
  for (std::size_t k = 0; k < m.size(); ++k) {
    if (m.sites[k].phys() != m.phys_dim) throw InvalidInput("MPS site has wrong physical dimension");
    if (k + 1 < m.size() && m.sites[k].right() != m.sites[k + 1].left())
      throw InvalidInput("MPS neighbouring bond dimensions disagree");
  }
}

inline void check_compatible(const Mps& a, const Mps& b) {
  if (a.size() != b.size() || a.phys_dim != b.phys_dim)
    throw InvalidInput("MPS shapes differ: " + std::to_string(a.size()) + " vs " +
                       std::to_string(b.size()) + " sites");
}

struct ThinQr {
  RowMatrix q;
  RowMatrix r;
};

inline ThinQr thin_qr(const RowMatrix& m) {
  const Eigen::Index k = std::min(m.rows(), m.cols());
  Eigen::HouseholderQR<Matrix> qr{Matrix(m)};
  ThinQr out;
  out.q = RowMatrix(qr.householderQ() * Matrix::Identity(m.rows(), k));
  out.r = RowMatrix(qr.matrixQR().topRows(k).template triangularView<Eigen::Upper>());
  return out;
}

struct TruncatedSvd {
  RowMatrix u;
  Vector s;
  RowMatrix vt;
  double discarded = 0.0;  // relative squared weight
};

/// SVD keeping min(chi_max, #{s_k^2 >= svd_tol * sum s^2}) values, at least one.
inline TruncatedSvd truncated_svd(const RowMatrix& m, std::size_t chi_max, double svd_tol) {
  Eigen::BDCSVD<Matrix> svd(Matrix(m), Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double total = s.squaredNorm();
  if (!(total > 0.0)) throw DegenerateState("cannot split a zero tensor");
  Eigen::Index keep = 0;
  while (keep < s.size() && static_cast<std::size_t>(keep) < chi_max &&
         s[keep] * s[keep] >= svd_tol * total)
    ++keep;
  keep = std::max<Eigen::Index>(keep, 1);
  TruncatedSvd out;
  out.u = svd.matrixU().leftCols(keep);
  out.s = s.head(keep);
  out.vt = svd.matrixV().leftCols(keep).transpose();
  out.discarded = s.tail(s.size() - keep).squaredNorm() / total;
  return out;
}

/// Left-orthonormalize site k, pushing the remainder into site k+1.
inline void shift_center_right(Mps& m, std::size_t k) {
  auto& a = m.sites[k];
  auto qr = thin_qr(a.left_grouped());
  RowMatrix next = qr.r * m.sites[k + 1].right_grouped();
  m.sites[k] = SiteTensor::from_left_grouped(qr.q, m.phys_dim);
  m.sites[k + 1] = SiteTensor::from_right_grouped(next, m.phys_dim);
}

/// Right-orthonormalize site k, pushing the remainder into site k-1.
inline void shift_center_left(Mps& m, std::size_t k) {
  auto& b = m.sites[k];
  auto qr = thin_qr(RowMatrix(b.right_grouped().transpose()));
  RowMatrix prev = m.sites[k - 1].left_grouped() * qr.r.transpose();
  m.sites[k] = SiteTensor::from_right_grouped(RowMatrix(qr.q.transpose()), m.phys_dim);
  m.sites[k - 1] = SiteTensor::from_left_grouped(prev, m.phys_dim);
}

// Transfer-matrix step of the <a|b> zipper: E' = sum_p A_p^T E B_p.
inline RowMatrix overlap_step(const RowMatrix& env, const SiteTensor& a, const SiteTensor& b) {
  RowMatrix tmp = env * b.right_grouped();  // la x (d*rb)
  Eigen::Map<const RowMatrix> grouped(tmp.data(), static_cast<Eigen::Index>(a.left() * a.phys()),
                                      static_cast<Eigen::Index>(b.right()));
  return a.left_grouped().transpose() * grouped;
}

inline double raw_overlap(const Mps& a, const Mps& b) {
  RowMatrix env = RowMatrix::Ones(1, 1);
  for (std::size_t k = 0; k < a.size(); ++k) env = overlap_step(env, a.sites[k], b.sites[k]);
  return env(0, 0);
}

}  // namespace detail

/// Product state from one local vector per site; every site is normalized.
inline Mps make_product_state(const std::vector<Vector>& local_vectors) {
  if (local_vectors.empty()) throw InvalidInput("product state needs at least one site");
  Mps m;
  m.phys_dim = static_cast<std::size_t>(local_vectors.front().size());
  if (m.phys_dim == 0) throw InvalidInput("local dimension must be positive");
  for (const auto& v : local_vectors) {
    if (static_cast<std::size_t>(v.size()) != m.phys_dim)
      throw InvalidInput("local vectors must all have the same length");
    const double n = v.norm();
    if (!(n > 0.0)) throw InvalidInput("local vector has zero norm");
    SiteTensor t(1, m.phys_dim, 1);
    for (std::size_t p = 0; p < m.phys_dim; ++p) t(0, p, 0) = v[static_cast<Eigen::Index>(p)] / n;
    m.sites.push_back(std::move(t));
  }
  m.center = 0;
  return m;
}

/// Bring the orthogonality center to `target`. Does a full sweep when the gauge is unknown.
inline Mps move_center(Mps m, std::size_t target) {
  detail::check_valid(m);
  if (target >= m.size()) throw InvalidInput("orthogonality center out of range");
  if (!m.center) {
    for (std::size_t k = 0; k < target; ++k) detail::shift_center_right(m, k);
    for (std::size_t k = m.size() - 1; k > target; --k) detail::shift_center_left(m, k);
  } else {
    for (std::size_t k = *m.center; k < target; ++k) detail::shift_center_right(m, k);
    for (std::size_t k = *m.center; k > target; --k) detail::shift_center_left(m, k);
  }
  m.center = target;
  return m;
}

inline Mps canonicalize(Mps m, std::size_t target) {
  m.center.reset();
  return move_center(std::move(m), target);
}

/// <a|b>, including both log_norm factors.
inline double overlap(const Mps& a, const Mps& b) {
  detail::check_compatible(a, b);
  return detail::raw_overlap(a, b) * std::exp(a.log_norm + b.log_norm);
}

inline double norm(const Mps& m) {
  if (m.center) return m.sites[*m.center].norm() * std::exp(m.log_norm);
  return std::sqrt(std::max(0.0, overlap(m, m)));
}

/// Unit-norm copy with log_norm reset to zero and center at `target` (default site 0).
inline Mps normalize(Mps m, std::size_t target = 0) {
  m = move_center(std::move(m), m.center.value_or(target));
  auto& c = m.sites[*m.center];
  const double n = c.norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw DegenerateState("cannot normalize a zero-norm MPS");
  c.scale(1.0 / n);
  m.log_norm = 0.0;
  return m;
}

/// alpha|a> + beta|b> as a direct sum; bond dimensions add.
inline Mps add(double alpha, const Mps& a, double beta, const Mps& b) {
  detail::check_valid(a);
  detail::check_valid(b);
  detail::check_compatible(a, b);
  const std::size_t n = a.size();
  const std::size_t d = a.phys_dim;
  const double shared = std::max(a.log_norm, b.log_norm);
  const double ca = alpha * std::exp(a.log_norm - shared);
  const double cb = beta * std::exp(b.log_norm - shared);

  Mps c;
  c.phys_dim = d;
  c.log_norm = shared;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& ta = a.sites[k];
    const auto& tb = b.sites[k];
    const bool first = k == 0;
    const bool last = k + 1 == n;
    const std::size_t left = first ? 1 : ta.left() + tb.left();
    const std::size_t right = last ? 1 : ta.right() + tb.right();
    SiteTensor t(left, d, right);
    const double sa = first ? ca : 1.0;
    const double sb = first ? cb : 1.0;
    const std::size_t off_l = first ? 0 : ta.left();
    const std::size_t off_r = last ? 0 : ta.right();
    for (std::size_t l = 0; l < ta.left(); ++l)
      for (std::size_t p = 0; p < d; ++p)
        for (std::size_t r = 0; r < ta.right(); ++r) t(l, p, r) += sa * ta(l, p, r);
    for (std::size_t l = 0; l < tb.left(); ++l)
      for (std::size_t p = 0; p < d; ++p)
        for (std::size_t r = 0; r < tb.right(); ++r) t(l + off_l, p, r + off_r) += sb * tb(l, p, r);
    c.sites.push_back(std::move(t));
  }
  return c;
}

struct Compressed {
  Mps state;
  TruncationReport report;
};

/// Right-to-left SVD sweep from a left-canonical form. The result has unit
/// norm, log_norm 0 and its orthogonality center on site 0.
inline Compressed compress(const Mps& m, std::size_t chi_max, double svd_tol) {
  if (chi_max < 1) throw InvalidInput("chi_max must be at least 1");
  if (svd_tol < 0.0) throw InvalidInput("svd_tol must be non-negative");
  Compressed out;
  out.state = move_center(m, m.size() - 1);
  auto& s = out.state;
  for (std::size_t k = s.size() - 1; k > 0; --k) {
    auto svd = detail::truncated_svd(s.sites[k].right_grouped(), chi_max, svd_tol);
    RowMatrix us = svd.u * svd.s.asDiagonal();
    RowMatrix prev = s.sites[k - 1].left_grouped() * us;
    s.sites[k] = SiteTensor::from_right_grouped(svd.vt, s.phys_dim);
    s.sites[k - 1] = SiteTensor::from_left_grouped(prev, s.phys_dim);
    out.report.discarded_weight += svd.discarded;
    out.report.bonds.push_back(k - 1);
    ++out.report.svd_calls;
  }
  s.center = 0;
  s = normalize(std::move(s));
  out.report.max_chi_after = s.max_bond();
  return out;
}

/// Contract a d^2 x d^2 gate into sites (site, site+1) and re-split by SVD.
///
/// The gate's row index is s_site * d + s_{site+1}. With Absorb::Right the
/// orthogonality center ends on site+1, with Absorb::Left on site. The kept
/// singular values are rescaled to unit norm and the factor is moved into log_norm.
inline Compressed apply_two_site_gate(const Mps& m, const Matrix& gate, std::size_t site,
                                      std::size_t chi_max, double svd_tol,
                                      Absorb absorb = Absorb::Right) {
  detail::check_valid(m);
  if (site + 1 >= m.size()) throw InvalidInput("gate site out of range");
  const std::size_t d = m.phys_dim;
  if (gate.rows() != static_cast<Eigen::Index>(d * d) || gate.cols() != gate.rows())
    throw InvalidInput("gate must be d^2 x d^2");
  if (chi_max < 1) throw InvalidInput("chi_max must be at least 1");

  Compressed out;
  out.state = move_center(m, absorb == Absorb::Right ? site : site + 1);
  auto& s = out.state;
  const auto& a = s.sites[site];
  const auto& b = s.sites[site + 1];
  const std::size_t lo = a.left();
  const std::size_t ro = b.right();

  // theta((l, s1), (s2, r))
  RowMatrix theta = a.left_grouped() * b.right_grouped();
  RowMatrix block(d * d, ro);
  for (std::size_t l = 0; l < lo; ++l) {
    for (std::size_t s1 = 0; s1 < d; ++s1)
      for (std::size_t s2 = 0; s2 < d; ++s2)
        block.row(static_cast<Eigen::Index>(s1 * d + s2)) =
            theta.block(static_cast<Eigen::Index>(l * d + s1), static_cast<Eigen::Index>(s2 * ro),
                        1, static_cast<Eigen::Index>(ro));
    RowMatrix applied = gate * block;
    for (std::size_t s1 = 0; s1 < d; ++s1)
      for (std::size_t s2 = 0; s2 < d; ++s2)
        theta.block(static_cast<Eigen::Index>(l * d + s1), static_cast<Eigen::Index>(s2 * ro), 1,
                    static_cast<Eigen::Index>(ro)) =
            applied.row(static_cast<Eigen::Index>(s1 * d + s2));
  }

  auto svd = detail::truncated_svd(theta, chi_max, svd_tol);
  const double kept = svd.s.norm();
  svd.s /= kept;
  s.log_norm += std::log(kept);
  if (absorb == Absorb::Right) {
    s.sites[site] = SiteTensor::from_left_grouped(svd.u, d);
    s.sites[site + 1] = SiteTensor::from_right_grouped(svd.s.asDiagonal() * svd.vt, d);
    s.center = site + 1;
  } else {
    s.sites[site] = SiteTensor::from_left_grouped(svd.u * svd.s.asDiagonal(), d);
    s.sites[site + 1] = SiteTensor::from_right_grouped(svd.vt, d);
    s.center = site;
  }
  out.report.discarded_weight = svd.discarded;
  out.report.max_chi_after = static_cast<std::size_t>(svd.s.size());
  out.report.bonds.push_back(site);
  out.report.svd_calls = 1;
  return out;
}

}  // namespace bite
