#pragma once

// Linear spectral problems: the lambda constant as the bottom of the
// spectrum of -4 Delta + V with Dirichlet-zero outside a region, domain
// exhaustion, and the two notions of lambda at infinity.

#include "lamlab/core.hpp"
#include "lamlab/detail/shift_invert.hpp"
#include "lamlab/forms.hpp"
#include "lamlab/geometry.hpp"

#include <algorithm>
#include <optional>
#include <ostream>
#include <sstream>
#include <vector>

namespace lamlab {

struct SpectralOptions {
  double tolerance = 1e-8;  // mass-weighted residual of -4 Delta u + V u - lambda u
  int krylov_dim = 40;
  int max_restarts = 200;
};

struct TraceEntry {
  double radius = 0.0;
  double lambda = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

struct SpectralResult {
  double lambda = 0.0;
  NodeField eigenfunction;  // full size, zero outside the region, sum m u^2 = 1
  double residual = 0.0;
  int iterations = 0;
  std::optional<Region> region;
  std::vector<TraceEntry> trace;
};

/// Mass-weighted L2 norm of -4 Delta u + V u - lambda u over the region rows.
inline double el_residual_linear(const OperatorPair& ops, const NodeField& u, double lambda,
                                 const Region& region) {
  detail::require(u.size() == ops.size(), "field size must equal node count");
  const NodeField r = (4.0 * (ops.stiffness * u)).cwiseQuotient(ops.mass) +
                      ops.potential.cwiseProduct(u) - lambda * u;
  double s = 0.0;
  for (Index i : region.nodes()) s += ops.mass[i] * r[i] * r[i];
  return std::sqrt(s);
}

namespace detail {

// 4 L + diag(m V) on the region.
inline SparseMatrix schrodinger_matrix(const RestrictedForm& form) {
  SparseMatrix A = 4.0 * form.stiffness;
  for (Index i = 0; i < form.size(); ++i) A.coeffRef(i, i) += form.mass[i] * form.potential[i];
  A.makeCompressed();
  return A;
}

// Ground states are positive; entries below 1e-14 of the maximum are rounding noise.
inline void clamp_ground_state(NodeField& u) {
  const double scale = u.cwiseAbs().maxCoeff();
  for (Index i = 0; i < u.size(); ++i)
    if (u[i] < 1e-14 * scale) u[i] = 0.0;
}

}  // namespace detail

/// Smallest eigenvalue of (4L + diag(mV)) u = lambda diag(m) u with u = 0
/// outside the region. Shift is inf V - 1, which is below the spectrum.
inline SpectralResult lambda_constant(const OperatorPair& ops, const Region& region,
                                      const SpectralOptions& opts = {}) {
  if (!region.connected(*ops.manifold)) {
    std::ostringstream os;
    os << "lambda_constant needs a connected region (" << to_string(region.kind()) << " with "
       << region.size() << " nodes is disconnected)";
    throw InvalidArgument(os.str());
  }
  const RestrictedForm form = restrict_to(ops, region);
  const SparseMatrix A = detail::schrodinger_matrix(form);
  const double sigma = form.potential.minCoeff() - 1.0;
  auto pair = detail::smallest_eigenpair(A, form.mass, sigma, opts.tolerance, opts.krylov_dim,
                                         opts.max_restarts, NodeField::Ones(form.size()));
  if (!pair.converged) {
    std::ostringstream os;
    os << "eigensolver did not reach residual " << opts.tolerance << " (best " << pair.residual
       << ")";
    throw SolverError(os.str(), pair.residual);
  }
  detail::clamp_ground_state(pair.vector);
  pair.vector /= mass_norm(form.mass, pair.vector);

  SpectralResult out;
  out.eigenfunction = region.extend(pair.vector, ops.size());
  out.lambda = i0_energy(form, pair.vector);
  out.residual = el_residual_linear(ops, out.eigenfunction, out.lambda, region);
  out.iterations = pair.iterations;
  out.region = region;
  return out;
}

/// lambda(B_R(p)) for each radius, then the whole truncation. Dirichlet
/// domain monotonicity makes the sequence nonincreasing.
struct ExhaustionTrace {
  std::vector<TraceEntry> entries;
  std::vector<SpectralResult> solves;
};

inline ExhaustionTrace exhaustion_lambda(const OperatorPair& ops, const std::vector<double>& radii,
                                         const SpectralOptions& opts = {}) {
  for (std::size_t k = 1; k < radii.size(); ++k)
    detail::require(radii[k] > radii[k - 1], "exhaustion radii must be increasing");
  const DiscreteManifold& m = *ops.manifold;
  ExhaustionTrace trace;
  auto push = [&](double r, const Region& region) {
    SpectralResult s = lambda_constant(ops, region, opts);
    trace.entries.push_back({r, s.lambda, s.residual, s.iterations});
    trace.solves.push_back(std::move(s));
  };
  for (double r : radii) {
    const Region ball = make_ball(m, r);
    if (ball.size() == m.size()) break;
    push(r, ball);
  }
  push(m.truncation_radius(), make_whole(m));
  return trace;
}

/// lambda on exterior(r) = M - B_r(p) with Dirichlet-zero on the ball and at
/// truncation. The reported value is the last trace entry.
struct InfinityTrace {
  std::vector<TraceEntry> entries;
  double value = 0.0;
};

inline InfinityTrace lambda_infinity_exterior(const OperatorPair& ops,
                                              const std::vector<double>& radii,
                                              const SpectralOptions& opts = {}) {
  detail::require(!radii.empty(), "lambda_infinity_exterior needs at least one radius");
  for (std::size_t k = 1; k < radii.size(); ++k)
    detail::require(radii[k] > radii[k - 1], "exterior radii must be increasing");
  InfinityTrace trace;
  for (double r : radii) {
    const Region ext = make_exterior(*ops.manifold, r);
    if (ext.size() < 8) {
      std::ostringstream os;
      os << "exterior of radius " << r << " has only " << ext.size() << " nodes (need >= 8)";
      throw InvalidArgument(os.str());
    }
    const SpectralResult s = lambda_constant(ops, ext, opts);
    trace.entries.push_back({r, s.lambda, s.residual, s.iterations});
  }
  trace.value = trace.entries.back().lambda;
  return trace;
}

/// lambda of -4 Delta + V_inf on the whole truncation: V_inf + lambda(-4 Delta).
inline SpectralResult lambda_infinity_const(const OperatorPair& ops, double v_infinity,
                                            const SpectralOptions& opts = {}) {
  detail::require(std::isfinite(v_infinity), "v_infinity must be finite");
  const OperatorPair free = with_potential(ops, NodeField::Zero(ops.size()));
  SpectralResult s = lambda_constant(free, make_whole(*ops.manifold), opts);
  s.lambda += v_infinity;
  return s;
}

inline void write_trace_csv(std::ostream& os, const std::vector<TraceEntry>& entries) {
  os.precision(17);
  os << "R_or_r,lambda,residual,iterations\n";
  for (const TraceEntry& e : entries)
    os << e.radius << ',' << e.lambda << ',' << e.residual << ',' << e.iterations << '\n';
}

}  // namespace lamlab
