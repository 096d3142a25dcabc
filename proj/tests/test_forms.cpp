#include "lamlab/forms.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace lamlab;

namespace {

// sum over edges of c (u_i - u_j)(v_i - v_j) plus ghost terms, written out directly.
double edge_sum(const DiscreteManifold& m, const NodeField& u, const NodeField& v) {
  double s = 0.0;
  for (const Edge& e : m.edges()) s += e.conductance * (u[e.i] - u[e.j]) * (v[e.i] - v[e.j]);
  for (const Ghost& g : m.ghosts()) s += g.conductance * u[g.node] * v[g.node];
  return s;
}

}  // namespace

TEST(Forms, StiffnessIsSymmetricWithZeroRowSumsOnClosedGraphs) {
  std::mt19937_64 rng(1);
  const DiscreteManifold m = sample::random_graph(rng, 25, 15, 0);
  const SparseMatrix L = assemble_stiffness(m);
  EXPECT_NEAR((SparseMatrix(L.transpose()) - L).norm(), 0.0, 1e-14);
  EXPECT_NEAR((L * NodeField::Ones(m.size())).cwiseAbs().maxCoeff(), 0.0, 1e-13);
}

TEST(Forms, AdjointIdentityOnRandomFields) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = sample::share(sample::random_graph(rng, 30, 20, trial % 3));
    const OperatorPair ops = assemble(m, NodeField::Zero(m->size()));
    const NodeField u = sample::random_field(rng, m->size(), -1, 1);
    const NodeField v = sample::random_field(rng, m->size(), -1, 1);
    const double lhs = -ops.mass.cwiseProduct(laplacian_apply(ops, u)).dot(v);
    const double rhs = edge_sum(*m, u, v);
    EXPECT_LE(std::abs(lhs - rhs), 1e-12 * std::sqrt(edge_sum(*m, u, u) * edge_sum(*m, v, v)));
  }
}

TEST(Forms, GradientSquaredIntegratesToEnergy) {
  std::mt19937_64 rng(3);
  const auto m = sample::share(sample::random_graph(rng, 20, 8, 2));
  const OperatorPair ops = assemble(m, NodeField::Zero(m->size()));
  const NodeField f = sample::random_field(rng, m->size(), -2, 2);
  EXPECT_NEAR(ops.mass.dot(node_gradient_squared(ops, f)), dirichlet_energy(ops, f),
              1e-12 * dirichlet_energy(ops, f));
}

TEST(Forms, I0IsKineticPlusPotential) {
  const auto m = sample::share(build_circle(8, 8.0));
  NodeField v(8);
  v << 1, 2, 3, 4, 5, 6, 7, 8;
  const OperatorPair ops = assemble(m, v);
  NodeField u = NodeField::Zero(8);
  u[0] = 1.0;
  // two unit edges, each (1-0)^2, times 4; plus m_0 V_0 = 1
  EXPECT_DOUBLE_EQ(i0_energy(ops, u), 4.0 * 2.0 + 1.0);
}

TEST(Forms, RestrictionIsPrincipalSubmatrix) {
  const auto m = sample::share(sample::flat_disk(2.0, 0.1));
  const OperatorPair ops = assemble(m, NodeField::Ones(m->size()));
  const Region ball = make_ball(*m, 1.0);
  const RestrictedForm f = restrict_to(ops, ball);
  ASSERT_EQ(f.size(), ball.size());
  const Eigen::MatrixXd full(ops.stiffness);
  const Eigen::MatrixXd sub(f.stiffness);
  for (Index a = 0; a < f.size(); ++a)
    for (Index b = 0; b < f.size(); ++b) EXPECT_EQ(sub(a, b), full(ball.nodes()[a], ball.nodes()[b]));
}

TEST(Forms, ModifiedCurvatureOfConstantIsVOnClosedManifolds) {
  const auto m = sample::share(build_torus(6, 6));
  std::mt19937_64 rng(4);
  const OperatorPair ops = assemble(m, sample::random_field(rng, 36, -1, 1));
  const NodeField vm = modified_scalar_curvature(ops, NodeField::Constant(36, 0.3));
  EXPECT_LE((vm - ops.potential).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Forms, FFunctionalGapIsSecondOrderForSmoothFields) {
  // Halving the mesh on the same smooth f should cut the gap by about 4.
  double prev = 0.0;
  for (Index n : {32, 64, 128}) {
    const auto m = sample::share(build_circle(n, 2 * std::numbers::pi));
    const OperatorPair ops = assemble(m, NodeField::Zero(n));
    NodeField f(n);
    for (Index i = 0; i < n; ++i) f[i] = 0.1 * std::sin(2.0 * std::numbers::pi * i / n);
    const double gap = std::abs(f_functional(ops, f).gap);
    if (prev > 0.0) {
      EXPECT_NEAR(prev / gap, 4.0, 0.4);
    }
    prev = gap;
  }
}

TEST(Forms, WeightedMeasureOverflowIsReported) {
  const auto m = sample::share(build_circle(4, 1.0));
  const OperatorPair ops = assemble(m, NodeField::Zero(4));
  EXPECT_THROW(weighted_measure(ops, NodeField::Constant(4, -1000.0)), InvalidArgument);
}

TEST(Potential, DirichletSolveAndZeroMeanClosedSolve) {
  const auto m = sample::share(sample::flat_disk(4.0, 0.05));
  const OperatorPair ops = assemble(m, NodeField::Zero(m->size()));
  // -Delta u = 4 with u(R) = 0 has u = R^2 - r^2 in the plane.
  const PotentialSolution s = potential_function(ops, NodeField::Constant(m->size(), 4.0), make_whole(*m));
  EXPECT_NEAR(s.u[0], 16.0, 0.05);
  EXPECT_LT(s.residual, 1e-8);

  const auto c = sample::share(build_circle(32, 2 * std::numbers::pi));
  const OperatorPair cops = assemble(c, NodeField::Zero(32));
  NodeField f(32);
  for (Index i = 0; i < 32; ++i) f[i] = std::cos(2.0 * std::numbers::pi * i / 32);
  const PotentialSolution cs = potential_function(cops, f, make_whole(*c));
  EXPECT_NEAR(cops.mass.dot(cs.u), 0.0, 1e-12);
  EXPECT_THROW(potential_function(cops, NodeField::Ones(32), make_whole(*c)), InvalidArgument);
}

TEST(Potential, DivergenceFormIntegratesToZeroOnClosedManifolds) {
  const auto m = sample::share(build_torus(8, 8));
  std::mt19937_64 rng(5);
  const OperatorPair ops = assemble(m, NodeField::Zero(64));
  const DivergencePotential dp = divergence_form_potential(ops, sample::random_field(rng, 64, -1, 1));
  EXPECT_NEAR(ops.mass.dot(dp.potential), 0.0, 1e-12);
  EXPECT_GT(dp.gradient_sup, 0.0);
  EXPECT_LE(dp.gradient_sup, 2.0);
}
