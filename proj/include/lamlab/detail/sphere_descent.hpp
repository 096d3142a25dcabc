#pragma once

// Descent on the mass-weighted unit sphere {u : sum m_i u_i^2 = 1} for
// entropy objectives of the form
//     E(u) = c [ 4 u.Lu + sum m (V u^2 - s u^2 log u^2) ],   s in {1, 1/2}.
// Writing u^2 log u^2 = u^2 log w^2 + u^2 log(u^2 / w^2) and using that the
// relative entropy of two unit-mass densities is nonnegative gives
//     E(u) <= c <u, (4L + diag(m q_w)) u>,   q_w = V - s log w^2,
// with equality at u = w. Each step therefore moves to the ground state of
// the surrogate operator built at the current iterate, which cannot raise E
// and stays positive (Perron). A short extrapolation along the step follows
// and is kept only when it lowers E further.

#include "lamlab/core.hpp"
#include "lamlab/detail/shift_invert.hpp"
#include "lamlab/forms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

namespace lamlab {

struct DescentOptions {
  double tolerance = 1e-6;          // Euler-Lagrange residual target
  int max_iterations = 2000;
  int max_extrapolation = 3;        // step doublings tried beyond the surrogate minimizer
  double objective_floor = -700.0;  // below this the objective is deemed unbounded
};

struct DescentStep {
  int iteration = 0;
  double objective = 0.0;
  double grad_norm = 0.0;  // mass-weighted norm of the sphere-projected gradient
  double step = 0.0;       // accepted step length along (surrogate minimizer - iterate)
};

namespace detail {

struct DescentOutcome {
  NodeField u;
  double objective = 0.0;
  double residual = std::numeric_limits<double>::infinity();
  std::vector<DescentStep> trace;
  bool converged = false;
};

inline double sphere_gradient_norm(const NodeField& m, const NodeField& u, const NodeField& g) {
  const NodeField riesz = g.cwiseQuotient(m) - u.dot(g) * u;
  return std::sqrt((m.array() * riesz.array().square()).sum());
}

/// Objective provides value(u), gradient(u), residual(u) and
/// surrogate_potential(u) = q_u as described above.
template <class Objective>
DescentOutcome sphere_descent(const Objective& obj, const RestrictedForm& form, NodeField u,
                              const DescentOptions& opts) {
  const NodeField& m = form.mass;
  auto normalize = [&m](NodeField v) {
    v = v.cwiseAbs();
    return NodeField(v / std::sqrt((m.array() * v.array().square()).sum()));
  };

  DescentOutcome out;
  u = normalize(std::move(u));
  double energy = obj.value(u);
  double last_step = 0.0;
  const SparseMatrix kinetic = 4.0 * form.stiffness;

  for (int it = 0;; ++it) {
    const double res = obj.residual(u);
    out.trace.push_back({it, energy, sphere_gradient_norm(m, u, obj.gradient(u)), last_step});
    if (res < out.residual) {
      out.u = u;
      out.objective = energy;
      out.residual = res;
    }
    if (res <= opts.tolerance) {
      out.converged = true;
      return out;
    }
    if (it >= opts.max_iterations) return out;

    const NodeField q = obj.surrogate_potential(u);
    SparseMatrix A = kinetic;
    for (Index i = 0; i < A.rows(); ++i) A.coeffRef(i, i) += m[i] * q[i];
    const EigenpairOutcome ground =
        smallest_eigenpair(A, m, q.minCoeff() - 1.0, 1e-3 * opts.tolerance, 40, 50, u);
    const NodeField v = normalize(ground.vector);
    const NodeField step = v - u;

    double best_t = 1.0;
    NodeField best_u = v;
    double best_energy = obj.value(v);
    double t = 1.0;
    for (int k = 0; k < opts.max_extrapolation; ++k) {
      t *= 2.0;
      NodeField trial = normalize(u + t * step);
      const double e = obj.value(trial);
      if (!(e < best_energy)) break;
      best_t = t;
      best_energy = e;
      best_u = std::move(trial);
    }
    // The surrogate bound makes best_energy <= energy up to the eigensolver's accuracy.
    if (best_energy > energy + 1e-12 * (std::abs(energy) + 1.0)) return out;

    const bool stalled = !(best_energy < energy) && (best_u - u).cwiseAbs().maxCoeff() < 1e-15;
    u = std::move(best_u);
    energy = best_energy;
    last_step = best_t;
    if (energy < opts.objective_floor) {
      std::ostringstream os;
      os << "objective fell below the floor " << opts.objective_floor
         << " (unbounded-below suspicion)";
      throw SolverError(os.str(), res);
    }
    if (stalled) return out;
  }
}

}  // namespace detail
}  // namespace lamlab
