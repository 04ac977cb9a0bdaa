#include <gtest/gtest.h>

#include <cmath>

#include "bite/oracle.hpp"
#include "test_support.hpp"

using namespace bite;
using bite::testing::dense_propagator;
using bite::testing::dense_trotter_operator;
using bite::testing::embed_gate;

namespace {

Matrix bond_sum(const BondModel& model) {
  const auto dim = static_cast<Eigen::Index>(std::size_t{1} << model.n_sites);
  Matrix h = Matrix::Zero(dim, dim);
  for (std::size_t j = 0; j < model.bond_terms.size(); ++j)
    h += embed_gate(model.bond_terms[j], j, model.n_sites);
  return h;
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

// Spectral norm of the one-step Trotter defect at N = 6.
double trotter_defect(int order, double dtau) {
  const auto model = build_bond_model(6, 0.5, 1.5);
  const Matrix h = oracle::dense_tfim_hamiltonian(6, 0.5, 1.5);
  const Matrix diff = dense_trotter_operator(trotter_gates(model, dtau, order)) - dense_propagator(h, dtau);
  Eigen::JacobiSVD<Matrix> svd(diff);
  return svd.singularValues()[0];
}

}  // namespace

TEST(BondModel, TwoSiteTermIsForcedByEdgeWeights) {
  const auto model = build_bond_model(2, 0.5, 1.5);
  ASSERT_EQ(model.bond_terms.size(), 1u);
  const Matrix expected = -0.5 * kron(pauli::x(), pauli::x()) -
                          1.5 * (kron(pauli::z(), pauli::identity()) + kron(pauli::identity(), pauli::z()));
  EXPECT_LT(max_abs(model.bond_terms[0] - expected), 1e-15);
}

TEST(BondModel, BondSumMatchesPauliStringHamiltonian) {
  for (std::size_t n = 2; n <= 10; ++n) {
    const auto model = build_bond_model(n, 0.7, -1.3);
    EXPECT_LT(max_abs(bond_sum(model) - oracle::dense_tfim_hamiltonian(n, 0.7, -1.3)), 1e-12) << "N=" << n;
  }
}

TEST(BondModel, DenseAssemblyAgrees) {
  const auto model = build_bond_model(4, 0.5, 1.5);
  EXPECT_LT(max_abs(oracle::dense_hamiltonian(model) - oracle::dense_tfim_hamiltonian(4, 0.5, 1.5)), 1e-12);
}

TEST(BondModel, TermsAreSymmetric) {
  const auto model = build_bond_model(7, 0.3, 2.1);
  for (const auto& h : model.bond_terms) EXPECT_LT(max_abs(h - h.transpose()), 1e-15);
}

TEST(BondModel, ZeroCouplingGivesDiagonalTerms) {
  const auto model = build_bond_model(5, 0.0, 1.1);
  for (const auto& h : model.bond_terms) {
    Matrix off = h;
    off.diagonal().setZero();
    EXPECT_EQ(max_abs(off), 0.0);
  }
}

TEST(BondModel, RejectsSingleSite) {
  EXPECT_THROW(build_bond_model(1, 0.5, 1.5), InvalidInput);
  EXPECT_THROW(build_bond_model(0, 0.5, 1.5), InvalidInput);
}

TEST(BondModel, MpoExpectationMatchesDense) {
  const auto model = build_bond_model(6, 0.5, 1.5);
  const Mpo h = build_mpo(model);
  const Matrix hd = oracle::dense_hamiltonian(model);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Mps m = bite::testing::random_mps(6, 4, seed);
    const Vector v = oracle::dense_from_mps(m).amplitudes;
    EXPECT_NEAR(expectation(m, h), v.dot(hd * v) / v.squaredNorm(), 1e-10);
  }
}

TEST(Trotter, ZeroStepGivesIdentityGates) {
  const auto model = build_bond_model(6, 0.5, 1.5);
  for (int order : {1, 2}) {
    const auto sched = trotter_gates(model, 0.0, order);
    for (const auto& layer : sched.layers)
      for (const auto& g : layer.gates) EXPECT_LT(max_abs(g - Matrix::Identity(4, 4)), 1e-15);
  }
}

TEST(Trotter, LayerStructure) {
  const auto model = build_bond_model(7, 0.5, 1.5);
  const auto first = trotter_gates(model, 0.1, 1);
  ASSERT_EQ(first.layers.size(), 2u);
  EXPECT_EQ(first.layers[0].parity, Parity::Even);
  EXPECT_EQ(first.layers[1].parity, Parity::Odd);
  EXPECT_EQ(first.layers[0].bonds, (std::vector<std::size_t>{0, 2, 4}));
  EXPECT_EQ(first.layers[1].bonds, (std::vector<std::size_t>{1, 3, 5}));

  const auto second = trotter_gates(model, 0.1, 2);
  ASSERT_EQ(second.layers.size(), 3u);
  EXPECT_EQ(second.layers[0].parity, Parity::Even);
  EXPECT_EQ(second.layers[1].parity, Parity::Odd);
  EXPECT_EQ(second.layers[2].parity, Parity::Even);
  EXPECT_DOUBLE_EQ(second.layers[0].scale, 0.5);
  EXPECT_DOUBLE_EQ(second.layers[1].scale, 1.0);
  EXPECT_DOUBLE_EQ(second.layers[2].scale, 0.5);
  EXPECT_EQ(second.gate_count(), 9u);
}

TEST(Trotter, RejectsBadArguments) {
  const auto model = build_bond_model(4, 0.5, 1.5);
  EXPECT_THROW(trotter_gates(model, 0.01, 3), InvalidInput);
  EXPECT_THROW(trotter_gates(model, 0.01, 0), InvalidInput);
  EXPECT_THROW(trotter_gates(model, -0.01, 2), InvalidInput);
}

TEST(Trotter, SingleGateMatchesDenseExponential) {
  const auto model = build_bond_model(2, 0.5, 1.5);
  const auto sched = trotter_gates(model, 0.03, 1);
  const Matrix h = oracle::dense_tfim_hamiltonian(2, 0.5, 1.5);
  // Taylor series to high order, independent of the eigendecomposition path.
  Matrix expected = Matrix::Identity(4, 4);
  Matrix term = Matrix::Identity(4, 4);
  for (int k = 1; k < 30; ++k) {
    term = term * (-0.03 * h) / static_cast<double>(k);
    expected += term;
  }
  const Vector v = bite::testing::random_dense(4, 3).amplitudes;
  EXPECT_LT((sched.layers[0].gates[0] * v - expected * v).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_TRUE(sched.layers[1].gates.empty());
}

TEST(Trotter, GatesAreSymmetricPositiveDefinite) {
  const auto model = build_bond_model(6, 0.5, 1.5);
  for (int order : {1, 2}) {
    for (const auto& layer : trotter_gates(model, 0.05, order).layers) {
      for (const auto& g : layer.gates) {
        EXPECT_LT(max_abs(g - g.transpose()), 1e-14);
        Eigen::SelfAdjointEigenSolver<Matrix> eig(g);
        EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
      }
    }
  }
}

TEST(Trotter, OrderWithinLayerIsIrrelevant) {
  const std::size_t n = 8;
  const auto model = build_bond_model(n, 0.5, 1.5);
  const auto sched = trotter_gates(model, 0.05, 2);
  const auto dim = static_cast<Eigen::Index>(std::size_t{1} << n);
  for (const auto& layer : sched.layers) {
    Matrix fwd = Matrix::Identity(dim, dim);
    Matrix bwd = Matrix::Identity(dim, dim);
    for (std::size_t i = 0; i < layer.bonds.size(); ++i) {
      fwd = embed_gate(layer.gates[i], layer.bonds[i], n) * fwd;
      const std::size_t r = layer.bonds.size() - 1 - i;
      bwd = embed_gate(layer.gates[r], layer.bonds[r], n) * bwd;
    }
    EXPECT_LT(max_abs(fwd - bwd), 1e-12);
  }
}

TEST(Trotter, SecondOrderErrorShrinksEightfold) {
  const double ratio = trotter_defect(2, 0.01) / trotter_defect(2, 0.005);
  EXPECT_GE(ratio, 6.0);
  EXPECT_LE(ratio, 10.0);
}

TEST(Trotter, DefectSlopeMatchesOrder) {
  for (int order : {1, 2}) {
    const std::vector<double> steps{0.02, 0.01, 0.005};
    std::vector<double> logs;
    for (double dt : steps) logs.push_back(std::log(trotter_defect(order, dt)));
    const double slope = (logs.front() - logs.back()) / (std::log(steps.front()) - std::log(steps.back()));
    EXPECT_NEAR(slope, order + 1, 0.3) << "order " << order;
  }
}
