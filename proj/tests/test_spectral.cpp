#include "lamlab/spectral.hpp"
#include "support.hpp"

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace lamlab;

namespace {

// Smallest eigenvalue of the pencil (4L + MV, M) on a region, by dense solve.
double dense_lambda(const OperatorPair& ops, const Region& region) {
  const RestrictedForm f = restrict_to(ops, region);
  Eigen::MatrixXd A = 4.0 * Eigen::MatrixXd(f.stiffness);
  A.diagonal() += f.mass.cwiseProduct(f.potential);
  const Eigen::MatrixXd B = f.mass.asDiagonal();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(A, B);
  return es.eigenvalues()[0];
}

}  // namespace

TEST(Lambda, ConstantPotentialOnClosedManifolds) {
  for (double c : {-1.0, 0.0, 2.5}) {
    for (const auto& m : {sample::share(build_circle(64, 2 * std::numbers::pi)),
                          sample::share(build_single_node()), sample::share(build_torus(8, 8))}) {
      const OperatorPair ops = assemble(m, NodeField::Constant(m->size(), c));
      const SpectralResult r = lambda_constant(ops, make_whole(*m));
      EXPECT_NEAR(r.lambda, c, 1e-8) << m->kind();
      const NodeField one = NodeField::Ones(m->size()) / std::sqrt(ops.mass.sum());
      EXPECT_NEAR(std::abs(ops.mass.dot(one.cwiseProduct(r.eigenfunction))), 1.0, 1e-8);
    }
  }
}

TEST(Lambda, MatchesDenseOracleOnCoarseInstances) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 12; ++trial) {
    const auto m = trial % 2 == 0 ? sample::share(sample::random_graph(rng, 40, 30, trial % 4))
                                  : sample::share(sample::flat_disk(4.0, 0.125));
    const OperatorPair ops = assemble(m, sample::random_field(rng, m->size(), -3, 3));
    const Region whole = make_whole(*m);
    const SpectralResult r = lambda_constant(ops, whole);
    EXPECT_NEAR(r.lambda, dense_lambda(ops, whole), 1e-8 * std::max(1.0, std::abs(r.lambda)));
    EXPECT_LE(r.residual, 1e-8);
    EXPECT_GE(r.eigenfunction.minCoeff(), 0.0);
    EXPECT_NEAR(mass_norm(ops.mass, r.eigenfunction), 1.0, 1e-12);
    if (trial % 2 == 1) {
      const Region ball = make_ball(*m, 2.0);
      const SpectralResult rb = lambda_constant(ops, ball);
      EXPECT_NEAR(rb.lambda, dense_lambda(ops, ball), 1e-8 * std::max(1.0, std::abs(rb.lambda)));
      for (Index i = 0; i < m->size(); ++i)
        if (!ball.contains(i)) {
          EXPECT_EQ(rb.eigenfunction[i], 0.0);
        }
    }
  }
}

TEST(Lambda, SingleNodeIsItsPotential) {
  const auto m = sample::share(build_single_node(3.0));
  const SpectralResult r = lambda_constant(assemble(m, NodeField::Constant(1, -4.2)), make_whole(*m));
  EXPECT_NEAR(r.lambda, -4.2, 1e-12);
  EXPECT_NEAR(r.eigenfunction[0], 1.0 / std::sqrt(3.0), 1e-12);
}

TEST(Lambda, DisconnectedRegionIsRejected) {
  const auto m = sample::share(build_path(20, 1.0));
  const OperatorPair ops = assemble(m, NodeField::Zero(20));
  std::vector<char> mask(20, 0);
  mask[2] = mask[10] = 1;
  const Region split(RegionKind::Whole, mask, 0, 0.0, 0.0, 0);
  EXPECT_THROW(lambda_constant(ops, split), InvalidArgument);
}

TEST(Lambda, ShiftMovesLambdaAndKeepsEigenfunction) {
  std::mt19937_64 rng(12);
  const auto m = sample::share(sample::random_graph(rng, 30, 20, 1));
  const OperatorPair ops = assemble(m, sample::random_field(rng, 30, 0, 2));
  const SpectralResult a = lambda_constant(ops, make_whole(*m));
  const SpectralResult b =
      lambda_constant(with_potential(ops, (ops.potential.array() + 1.75).matrix()), make_whole(*m));
  EXPECT_NEAR(b.lambda - a.lambda, 1.75, 1e-8);
  EXPECT_NEAR(ops.mass.dot(a.eigenfunction.cwiseProduct(b.eigenfunction)), 1.0, 1e-8);
}

TEST(Exhaustion, NonincreasingAndDiskScaling) {
  const auto m = sample::share(sample::flat_disk(8.0, 0.02));
  const OperatorPair ops = assemble(m, NodeField::Zero(m->size()));
  const ExhaustionTrace t = exhaustion_lambda(ops, {1.0, 2.0, 3.0, 4.0, 6.0});
  ASSERT_EQ(t.entries.size(), 6u);
  for (std::size_t k = 1; k < t.entries.size(); ++k) EXPECT_LE(t.entries[k].lambda, t.entries[k - 1].lambda);
  const double j0 = 2.404825557695773;
  EXPECT_NEAR(t.entries.back().lambda * 64.0, 4.0 * j0 * j0, 0.02 * 4.0 * j0 * j0);
  EXPECT_THROW(exhaustion_lambda(ops, {2.0, 1.0}), InvalidArgument);
}

TEST(LambdaInfinity, ConstantDefinitionAndExteriorAgreeForDecayingWell) {
  const auto m = sample::share(sample::flat_disk(120.0, 0.1));
  NodeField v(m->size());
  for (Index i = 0; i < m->size(); ++i) {
    const double r = m->node_distances()[i];
    v[i] = 1.0 - 2.0 * std::exp(-r * r);
  }
  const OperatorPair ops = assemble(m, v);
  const InfinityTrace ext = lambda_infinity_exterior(ops, {10.0, 20.0, 40.0});
  const SpectralResult cst = lambda_infinity_const(ops, 1.0);
  EXPECT_NEAR(ext.value, 1.0, 1e-2);
  EXPECT_NEAR(cst.lambda, 1.0, 1e-2);
  EXPECT_GE(cst.lambda, 1.0);
  EXPECT_LT(lambda_constant(ops, make_whole(*m)).lambda, cst.lambda);
  EXPECT_THROW(lambda_infinity_exterior(ops, {119.9}), InvalidArgument);
}

TEST(Traces, CsvHasHeaderAndRows) {
  std::ostringstream os;
  write_trace_csv(os, {{1.0, 2.0, 1e-9, 3}, {2.0, 1.0, 1e-9, 4}});
  const std::string s = os.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "R_or_r,lambda,residual,iterations");
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 3);
}
