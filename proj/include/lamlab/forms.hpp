#pragma once

// Quadratic forms on a DiscreteManifold. The stiffness matrix L carries the
// Dirichlet energy u.Lu = sum_edges c_ij (u_i - u_j)^2 + sum_ghosts b_i u_i^2
// and the mass matrix is diag(volume weights), so Delta = -mass^{-1} L.

#include "lamlab/core.hpp"
#include "lamlab/geometry.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <memory>
#include <sstream>
#include <vector>

namespace lamlab {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Stiffness, mass and potential of a Schrodinger-type form on a manifold.
struct OperatorPair {
  std::shared_ptr<const DiscreteManifold> manifold;
  SparseMatrix stiffness;
  NodeField mass;
  NodeField potential;

  Index size() const { return mass.size(); }
};

/// The same three ingredients restricted to a region (Dirichlet-zero outside).
struct RestrictedForm {
  SparseMatrix stiffness;
  NodeField mass;
  NodeField potential;
  std::vector<Index> nodes;

  Index size() const { return mass.size(); }
};

inline SparseMatrix assemble_stiffness(const DiscreteManifold& m) {
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(4 * m.edges().size() + m.ghosts().size());
  for (const Edge& e : m.edges()) {
    t.emplace_back(e.i, e.i, e.conductance);
    t.emplace_back(e.j, e.j, e.conductance);
    t.emplace_back(e.i, e.j, -e.conductance);
    t.emplace_back(e.j, e.i, -e.conductance);
  }
  for (const Ghost& g : m.ghosts()) t.emplace_back(g.node, g.node, g.conductance);
  SparseMatrix L(m.size(), m.size());
  L.setFromTriplets(t.begin(), t.end());
  return L;
}

inline OperatorPair assemble(std::shared_ptr<const DiscreteManifold> m, NodeField potential) {
  detail::require(m != nullptr, "assemble needs a manifold");
  detail::require(potential.size() == m->size(), "potential size must equal node count");
  detail::require(potential.allFinite(), "potential must be finite");
  OperatorPair ops;
  ops.stiffness = assemble_stiffness(*m);
  ops.mass = m->volume_field();
  ops.potential = std::move(potential);
  ops.manifold = std::move(m);
  return ops;
}

inline OperatorPair assemble(const DiscreteManifold& m, NodeField potential) {
  return assemble(std::make_shared<const DiscreteManifold>(m), std::move(potential));
}

inline OperatorPair with_potential(const OperatorPair& ops, NodeField potential) {
  detail::require(potential.size() == ops.size(), "potential size must equal node count");
  OperatorPair out = ops;
  out.potential = std::move(potential);
  return out;
}

/// Principal submatrix on the region nodes. Edges leaving the region stay on
/// the diagonal, which is exactly the Dirichlet-zero condition.
inline RestrictedForm restrict_to(const OperatorPair& ops, const Region& region) {
  RestrictedForm f;
  f.nodes = region.nodes();
  const Index n = region.size();
  std::vector<Index> local(static_cast<std::size_t>(ops.size()), -1);
  for (Index k = 0; k < n; ++k) local[static_cast<std::size_t>(f.nodes[static_cast<std::size_t>(k)])] = k;
  std::vector<Eigen::Triplet<double>> t;
  for (Index col = 0; col < ops.stiffness.outerSize(); ++col) {
    const Index lc = local[static_cast<std::size_t>(col)];
    if (lc < 0) continue;
    for (SparseMatrix::InnerIterator it(ops.stiffness, col); it; ++it) {
      const Index lr = local[static_cast<std::size_t>(it.row())];
      if (lr >= 0) t.emplace_back(lr, lc, it.value());
    }
  }
  f.stiffness.resize(n, n);
  f.stiffness.setFromTriplets(t.begin(), t.end());
  f.mass = region.restrict_field(ops.mass);
  f.potential = region.restrict_field(ops.potential);
  return f;
}

/// sqrt(sum_i m_i u_i^2).
inline double mass_norm(const NodeField& mass, const NodeField& u) {
  return std::sqrt((mass.array() * u.array().square()).sum());
}

/// (Delta u)_i = -(1/m_i) [sum_j c_ij (u_i - u_j) + b_i u_i].
inline NodeField laplacian_apply(const OperatorPair& ops, const NodeField& u) {
  detail::require(u.size() == ops.size(), "field size must equal node count");
  return -(ops.stiffness * u).cwiseQuotient(ops.mass);
}

template <class Form>
double dirichlet_energy(const Form& form, const NodeField& u) {
  return u.dot(form.stiffness * u);
}

/// I_0(u) = 4 u.Lu + sum_i m_i V_i u_i^2.
template <class Form>
double i0_energy(const Form& form, const NodeField& u) {
  detail::require(u.size() == form.size(), "field size must equal node count");
  return 4.0 * dirichlet_energy(form, u) +
         (form.mass.array() * form.potential.array() * u.array().square()).sum();
}

/// Node-wise |grad f|^2: each edge's energy is split equally between its
/// endpoints and ghost links go entirely to their node, so that
/// sum_i m_i |grad f|^2_i equals f.Lf.
inline NodeField node_gradient_squared(const OperatorPair& ops, const NodeField& f) {
  const DiscreteManifold& m = *ops.manifold;
  NodeField g = NodeField::Zero(ops.size());
  for (const Edge& e : m.edges()) {
    const double d = f[e.i] - f[e.j];
    const double half = 0.5 * e.conductance * d * d;
    g[e.i] += half;
    g[e.j] += half;
  }
  for (const Ghost& gh : m.ghosts()) g[gh.node] += gh.conductance * f[gh.node] * f[gh.node];
  return g.cwiseQuotient(ops.mass);
}

/// V^m = 2 Delta f - |grad f|^2 + V.
inline NodeField modified_scalar_curvature(const OperatorPair& ops, const NodeField& f) {
  detail::require(f.size() == ops.size(), "field size must equal node count");
  detail::require(f.allFinite(), "f must be finite");
  return 2.0 * laplacian_apply(ops, f) - node_gradient_squared(ops, f) + ops.potential;
}

/// dm = e^{-f} dv as a density against the volume weights.
struct MeasureField {
  NodeField density;
  double total_mass = 0.0;
};

inline MeasureField weighted_measure(const OperatorPair& ops, const NodeField& f) {
  MeasureField mf;
  mf.density.resize(f.size());
  for (Index i = 0; i < f.size(); ++i) {
    const double w = std::exp(-f[i]);
    if (!std::isfinite(w)) {
      std::ostringstream os;
      os << "e^{-f} overflows at node " << i << " (f = " << f[i] << ")";
      throw InvalidArgument(os.str());
    }
    mf.density[i] = w;
  }
  mf.total_mass = ops.mass.dot(mf.density);
  return mf;
}

struct FFunctionalValue {
  double modified = 0.0;  // sum m e^{-f} V^m
  double original = 0.0;  // sum m e^{-f} (V + |grad f|^2)
  double gap = 0.0;       // modified - original
};

/// Both forms of the F-functional. They agree in the continuum by an
/// integration by parts; discretely the chain rule for e^{-f} is inexact.
/// Per edge the gap is about -c e^{-f} (f_i - f_j)^4 / 6, so it is small for
/// smooth f and of order |f|^4 / h^2 for nodal noise.
inline FFunctionalValue f_functional(const OperatorPair& ops, const NodeField& f) {
  const MeasureField dm = weighted_measure(ops, f);
  const NodeField w = ops.mass.cwiseProduct(dm.density);
  FFunctionalValue out;
  out.modified = w.dot(modified_scalar_curvature(ops, f));
  out.original = w.dot(ops.potential + node_gradient_squared(ops, f));
  out.gap = out.modified - out.original;
  return out;
}

/// max over edges of |u_i - u_j| / l_ij.
inline double edge_gradient_sup(const DiscreteManifold& m, const NodeField& u) {
  double s = 0.0;
  for (const Edge& e : m.edges()) s = std::max(s, std::abs(u[e.i] - u[e.j]) / e.length);
  return s;
}

struct PotentialSolution {
  NodeField u;
  double residual = 0.0;       // mass-weighted norm of -Delta u - f on the region
  double gradient_sup = 0.0;   // max edge gradient of u
};

/// Solves -Delta u = f on the region with u = 0 outside it. A region without
/// any Dirichlet contact (whole closed manifold) is solvable only when
/// sum_i m_i f_i = 0; the zero-mean solution is returned then.
inline PotentialSolution potential_function(const OperatorPair& ops, const NodeField& f,
                                            const Region& region, double tolerance = 1e-10) {
  detail::require(f.size() == ops.size(), "field size must equal node count");
  detail::require(f.allFinite(), "f must be finite");
  const RestrictedForm form = restrict_to(ops, region);
  const NodeField rhs = form.mass.cwiseProduct(region.restrict_field(f));
  const bool floating = region.size() == ops.size() && ops.manifold->closed();

  NodeField u_local;
  if (floating) {
    const double net = rhs.sum();
    const double scale = rhs.cwiseAbs().sum();
    if (std::abs(net) > 1e-12 * std::max(scale, 1e-300)) {
      std::ostringstream os;
      os << "-Delta u = f has no solution on a closed manifold without Dirichlet boundary "
            "unless sum_i m_i f_i = 0 (got "
         << net << ")";
      throw InvalidArgument(os.str());
    }
    if (form.size() == 1) {
      u_local = NodeField::Zero(1);
    } else {
      // Pin the last node, solve the reduced nonsingular system, then shift to zero mean.
      const Index n = form.size() - 1;
      SparseMatrix reduced = form.stiffness.topLeftCorner(n, n);
      Eigen::SimplicialLDLT<SparseMatrix> solver(reduced);
      detail::require(solver.info() == Eigen::Success, "factorization of the pinned Laplacian failed");
      u_local = NodeField::Zero(form.size());
      u_local.head(n) = solver.solve(rhs.head(n));
      const double mean = form.mass.dot(u_local) / form.mass.sum();
      u_local.array() -= mean;
    }
  } else {
    Eigen::SimplicialLDLT<SparseMatrix> solver(form.stiffness);
    detail::require(solver.info() == Eigen::Success, "factorization of the Dirichlet Laplacian failed");
    u_local = solver.solve(rhs);
    for (int refine = 0; refine < 2; ++refine)
      u_local += solver.solve(rhs - form.stiffness * u_local);
  }

  PotentialSolution sol;
  sol.u = region.extend(u_local, ops.size());
  const NodeField r = (form.stiffness * u_local - rhs).cwiseQuotient(form.mass);
  sol.residual = mass_norm(form.mass, r);
  sol.gradient_sup = edge_gradient_sup(*ops.manifold, sol.u);
  const double fnorm = mass_norm(form.mass, region.restrict_field(f));
  if (sol.residual > tolerance * std::max(fnorm, 1e-300) && fnorm > 0.0)
    throw SolverError("potential solve missed its residual bound", sol.residual);
  return sol;
}

struct DivergencePotential {
  NodeField potential;
  double gradient_sup = 0.0;
};

/// V := -Delta u_profile, a potential in divergence form by construction.
inline DivergencePotential divergence_form_potential(const OperatorPair& ops,
                                                     const NodeField& u_profile) {
  detail::require(u_profile.allFinite(), "u_profile must be finite");
  return {-laplacian_apply(ops, u_profile), edge_gradient_sup(*ops.manifold, u_profile)};
}

}  // namespace lamlab
