#pragma once

// Nonlinear entropy problems: the W-functional and its infimum mu on the
// unit L2 sphere, the Nehari functionals N and I, the constant d on the
// Nehari set, their exterior (at-infinity) versions, and the mu / d
// comparison report.

#include "lamlab/core.hpp"
#include "lamlab/detail/sphere_descent.hpp"
#include "lamlab/forms.hpp"
#include "lamlab/geometry.hpp"
#include "lamlab/spectral.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace lamlab {

// ---------------------------------------------------------------------------
// Functionals. All use 0 log 0 = 0; Form is OperatorPair or RestrictedForm.

namespace detail {

// sum_i m_i u_i^2 log u_i^2
inline double entropy_sum(const NodeField& m, const NodeField& u) {
  double s = 0.0;
  for (Index i = 0; i < u.size(); ++i) s += m[i] * xlogx(u[i] * u[i]);
  return s;
}

// u_i log u_i^2, zero where u_i^2 < 1e-300.
inline NodeField u_log_u2(const NodeField& u) {
  NodeField out(u.size());
  for (Index i = 0; i < u.size(); ++i) {
    const double s = u[i] * u[i];
    out[i] = s < 1e-300 ? 0.0 : u[i] * std::log(s);
  }
  return out;
}

inline NodeField log_u2_capped(const NodeField& u) {
  NodeField out(u.size());
  for (Index i = 0; i < u.size(); ++i) out[i] = std::log(std::max(u[i] * u[i], 1e-300));
  return out;
}

template <class Form>
double potential_sum(const Form& f, const NodeField& u) {
  return (f.mass.array() * f.potential.array() * u.array().square()).sum();
}

}  // namespace detail

/// W(u) = 4 u.Lu + sum m (V u^2 - u^2 log u^2).
template <class Form>
double w_functional(const Form& f, const NodeField& u) {
  detail::require(u.size() == f.size(), "field size must equal node count");
  return 4.0 * dirichlet_energy(f, u) + detail::potential_sum(f, u) - detail::entropy_sum(f.mass, u);
}

/// N(u) = 4 u.Lu + sum m (V u^2 - 1/2 u^2 log u^2).
template <class Form>
double n_functional(const Form& f, const NodeField& u) {
  detail::require(u.size() == f.size(), "field size must equal node count");
  return 4.0 * dirichlet_energy(f, u) + detail::potential_sum(f, u) -
         0.5 * detail::entropy_sum(f.mass, u);
}

/// I(u) = N(u) + 1/2 sum m u^2.
template <class Form>
double i_functional(const Form& f, const NodeField& u) {
  return n_functional(f, u) + 0.5 * (f.mass.array() * u.array().square()).sum();
}

template <class Form>
NodeField w_gradient(const Form& f, const NodeField& u) {
  return 8.0 * (f.stiffness * u) +
         2.0 * f.mass.cwiseProduct(f.potential.cwiseProduct(u) - detail::u_log_u2(u) - u);
}

template <class Form>
NodeField n_gradient(const Form& f, const NodeField& u) {
  return 8.0 * (f.stiffness * u) +
         f.mass.cwiseProduct(2.0 * f.potential.cwiseProduct(u) - detail::u_log_u2(u) - u);
}

/// J(v) = log ||v||^2 + 2 N(v) / ||v||^2; invariant under v -> a v.
template <class Form>
double j_objective(const Form& f, const NodeField& v) {
  const double s = (f.mass.array() * v.array().square()).sum();
  detail::require(s > 0.0, "J is undefined at v = 0");
  return std::log(s) + 2.0 * n_functional(f, v) / s;
}

template <class Form>
NodeField j_gradient(const Form& f, const NodeField& v) {
  const double s = (f.mass.array() * v.array().square()).sum();
  const NodeField mv = f.mass.cwiseProduct(v);
  return (2.0 / s) * mv + (2.0 / s) * n_gradient(f, v) - (4.0 * n_functional(f, v) / (s * s)) * mv;
}

struct NehariProjection {
  double a_star = 1.0;
  NodeField projected;
};

/// N(a u) = a^2 (N(u) - log a ||u||^2) vanishes at the unique a* = exp(N(u)/||u||^2).
template <class Form>
NehariProjection nehari_project(const Form& f, const NodeField& u) {
  const double s = (f.mass.array() * u.array().square()).sum();
  detail::require(s > 0.0, "nehari_project needs u != 0");
  NehariProjection p;
  const double t = n_functional(f, u) / s;
  p.a_star = std::exp(t);
  if (!(p.a_star > 0.0) || !std::isfinite(p.a_star)) {
    std::ostringstream os;
    os << "Nehari scale a* = exp(" << t << ") is not representable";
    throw SolverError(os.str(), std::abs(t));
  }
  p.projected = p.a_star * u;
  return p;
}

/// Mass-weighted norm of 4 Delta u - V u + 2 u log u + mu u.
template <class Form>
double mu_el_residual(const Form& f, const NodeField& u, double mu) {
  const NodeField r = -(4.0 * (f.stiffness * u)).cwiseQuotient(f.mass) -
                      f.potential.cwiseProduct(u) + detail::u_log_u2(u) + mu * u;
  return mass_norm(f.mass, r);
}

/// Mass-weighted norm of -4 Delta w + V w - w log w.
template <class Form>
double d_el_residual(const Form& f, const NodeField& w) {
  const NodeField r = (4.0 * (f.stiffness * w)).cwiseQuotient(f.mass) +
                      f.potential.cwiseProduct(w) - 0.5 * detail::u_log_u2(w);
  return mass_norm(f.mass, r);
}

// ---------------------------------------------------------------------------
// Minimization

struct EntropyOptions {
  DescentOptions descent;
  SpectralOptions spectral;
};

struct StartRecord {
  std::string label;
  double initial_objective = 0.0;
  double final_objective = 0.0;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct EntropyResult {
  double value = 0.0;        // mu or d
  NodeField minimizer;       // full size, zero outside the region
  double el_residual = 0.0;
  std::vector<DescentStep> descent_trace;
  int restarts_used = 0;
  std::optional<Region> region;
  std::vector<StartRecord> starts;
  double scale_invariance_defect = 0.0;  // d only: max |J(a v) - J(v)|
};

/// Raised when no start reaches the residual target; carries the best candidate.
class EntropySolverError : public SolverError {
 public:
  EntropySolverError(const std::string& what, std::shared_ptr<const EntropyResult> candidate)
      : SolverError(what, candidate->el_residual), candidate_(std::move(candidate)) {}
  const EntropyResult& candidate() const { return *candidate_; }

 private:
  std::shared_ptr<const EntropyResult> candidate_;
};

namespace detail {

struct WObjective {
  const RestrictedForm& form;
  double value(const NodeField& u) const { return w_functional(form, u); }
  NodeField gradient(const NodeField& u) const { return w_gradient(form, u); }
  double residual(const NodeField& u) const { return mu_el_residual(form, u, value(u)); }
  NodeField surrogate_potential(const NodeField& u) const { return form.potential - log_u2_capped(u); }
};

// On the unit sphere J = 2N; its stationary points project to Nehari critical points.
struct JObjective {
  const RestrictedForm& form;
  double value(const NodeField& v) const { return j_objective(form, v); }
  NodeField gradient(const NodeField& v) const { return j_gradient(form, v); }
  double residual(const NodeField& v) const {
    return d_el_residual(form, nehari_project(form, v).projected);
  }
  NodeField surrogate_potential(const NodeField& v) const {
    return form.potential - 0.5 * log_u2_capped(v);
  }
};

/// Fixed start set: constant, linear ground state, and three Gaussian
/// profiles centered at the potential minimum with widths rho/16, rho/6 and
/// rho/2, rho being the region's extent from that center.
inline std::vector<std::pair<std::string, NodeField>> entropy_starts(const OperatorPair& ops,
                                                                     const Region& region,
                                                                     const RestrictedForm& form,
                                                                     const SpectralOptions& sopts) {
  std::vector<std::pair<std::string, NodeField>> starts;
  starts.emplace_back("constant", NodeField::Ones(form.size()));
  try {
    const SpectralResult ground = lambda_constant(ops, region, sopts);
    starts.emplace_back("linear_ground_state", region.restrict_field(ground.eigenfunction));
  } catch (const SolverError&) {
    // the linear start is optional
  }
  if (form.size() > 1) {
    Index best = 0;
    for (Index k = 1; k < form.size(); ++k)
      if (form.potential[k] < form.potential[best]) best = k;
    const Index center = form.nodes[static_cast<std::size_t>(best)];
    const std::vector<double> dist = ops.manifold->distances_from(center);
    double rho = 0.0;
    for (Index node : form.nodes) rho = std::max(rho, dist[static_cast<std::size_t>(node)]);
    static constexpr double kFractions[3] = {1.0 / 16.0, 1.0 / 6.0, 0.5};
    static constexpr const char* kLabels[3] = {"gaussian_narrow", "gaussian_medium", "gaussian_wide"};
    if (rho > 0.0 && std::isfinite(rho)) {
      for (int w = 0; w < 3; ++w) {
        const double width = rho * kFractions[w];
        NodeField g(form.size());
        for (Index k = 0; k < form.size(); ++k) {
          const double d = dist[static_cast<std::size_t>(form.nodes[static_cast<std::size_t>(k)])];
          g[k] = std::exp(-0.5 * d * d / (width * width));
        }
        if (g.maxCoeff() > 0.0) starts.emplace_back(kLabels[w], g);
      }
    }
  }
  return starts;
}

template <class Objective>
EntropyResult minimize_over_starts(const OperatorPair& ops, const Region& region,
                                   const RestrictedForm& form, const Objective& obj,
                                   const EntropyOptions& opts, const char* what) {
  EntropyResult best;
  best.value = std::numeric_limits<double>::infinity();
  best.el_residual = std::numeric_limits<double>::infinity();
  EntropyResult fallback = best;
  bool have_converged = false;

  for (auto& [label, start] : entropy_starts(ops, region, form, opts.spectral)) {
    NodeField u0 = start.cwiseAbs();
    u0 /= mass_norm(form.mass, u0);
    StartRecord rec;
    rec.label = label;
    rec.initial_objective = obj.value(u0);
    DescentOutcome run = sphere_descent(obj, form, u0, opts.descent);
    rec.final_objective = run.objective;
    rec.residual = run.residual;
    rec.iterations = static_cast<int>(run.trace.size()) - 1;
    rec.converged = run.converged;
    best.starts.push_back(rec);
    fallback.starts.push_back(rec);

    auto adopt = [&](EntropyResult& target) {
      target.value = run.objective;
      target.minimizer = run.u;
      target.el_residual = run.residual;
      target.descent_trace = run.trace;
    };
    if (run.converged && run.objective < best.value) {
      adopt(best);
      have_converged = true;
    }
    if (run.residual < fallback.el_residual) adopt(fallback);
  }
  const int used = static_cast<int>(best.starts.size());
  best.restarts_used = fallback.restarts_used = used;
  best.region = fallback.region = region;
  if (!have_converged) {
    fallback.minimizer = region.extend(fallback.minimizer, ops.size());
    std::ostringstream os;
    os << what << " descent stagnated above residual " << opts.descent.tolerance << " after "
       << used << " starts (best residual " << fallback.el_residual << ")";
    throw EntropySolverError(os.str(), std::make_shared<const EntropyResult>(std::move(fallback)));
  }
  return best;
}

inline void require_connected(const OperatorPair& ops, const Region& region, const char* what) {
  if (!region.connected(*ops.manifold)) {
    std::ostringstream os;
    os << what << " needs a connected region";
    throw InvalidArgument(os.str());
  }
}

}  // namespace detail

/// mu = inf { W(u) : sum m u^2 = 1, u = 0 outside region }.
inline EntropyResult mu_constant(const OperatorPair& ops, const Region& region,
                                 const EntropyOptions& opts = {}) {
  detail::require_connected(ops, region, "mu_constant");
  const RestrictedForm form = restrict_to(ops, region);
  const detail::WObjective obj{form};
  EntropyResult r = detail::minimize_over_starts(ops, region, form, obj, opts, "mu");
  r.el_residual = mu_el_residual(form, r.minimizer, r.value);
  r.minimizer = region.extend(r.minimizer, ops.size());
  return r;
}

/// d = inf { I(u) : N(u) = 0 } = 1/2 exp(min J), minimizer projected onto
/// the Nehari set.
inline EntropyResult d_constant(const OperatorPair& ops, const Region& region,
                                const EntropyOptions& opts = {}) {
  detail::require_connected(ops, region, "d_constant");
  const RestrictedForm form = restrict_to(ops, region);
  const detail::JObjective obj{form};
  EntropyResult r = detail::minimize_over_starts(ops, region, form, obj, opts, "d");
  const NodeField v = r.minimizer;
  const double j = j_objective(form, v);
  for (double a : {0.25, 3.0, 17.0})
    r.scale_invariance_defect =
        std::max(r.scale_invariance_defect, std::abs(j_objective(form, NodeField(a * v)) - j));
  const NehariProjection proj = nehari_project(form, v);
  r.value = 0.5 * std::exp(j);
  r.el_residual = d_el_residual(form, proj.projected);
  r.minimizer = region.extend(proj.projected, ops.size());
  return r;
}

struct EntropyTraceEntry {
  double radius = 0.0;
  double value = 0.0;
  double el_residual = 0.0;
  int restarts = 0;
};

struct EntropyTrace {
  std::vector<EntropyTraceEntry> entries;
  double value = 0.0;
};

namespace detail {

template <class Solve>
EntropyTrace exterior_trace(const OperatorPair& ops, const std::vector<double>& radii, Solve solve) {
  detail::require(!radii.empty(), "at-infinity traces need at least one radius");
  for (std::size_t k = 1; k < radii.size(); ++k)
    detail::require(radii[k] > radii[k - 1], "exterior radii must be increasing");
  EntropyTrace trace;
  for (double r : radii) {
    const EntropyResult res = solve(make_exterior(*ops.manifold, r));
    trace.entries.push_back({r, res.value, res.el_residual, res.restarts_used});
  }
  trace.value = trace.entries.back().value;
  return trace;
}

}  // namespace detail

/// mu on exterior(r) for each radius; reported value is the last entry.
inline EntropyTrace mu_infinity(const OperatorPair& ops, const std::vector<double>& radii,
                                const EntropyOptions& opts = {}) {
  return detail::exterior_trace(ops, radii,
                                [&](const Region& ext) { return mu_constant(ops, ext, opts); });
}

inline EntropyTrace d_infinity(const OperatorPair& ops, const std::vector<double>& radii,
                               const EntropyOptions& opts = {}) {
  return detail::exterior_trace(ops, radii,
                                [&](const Region& ext) { return d_constant(ops, ext, opts); });
}

/// mu and d solved independently, tabulated against log(2 sqrt d) and
/// log(2 d). No relation between them is asserted.
struct Prop6Report {
  std::optional<EntropyResult> mu;
  std::optional<EntropyResult> d;
  std::optional<double> log_2d;
  std::optional<double> log_2sqrt_d;
  std::optional<double> gap_a;  // mu - log(2 sqrt d)
  std::optional<double> gap_b;  // mu - log(2 d)
  std::string error;

  bool ok() const { return error.empty(); }
};

inline Prop6Report proposition6_report(const OperatorPair& ops, const Region& region,
                                       const EntropyOptions& opts = {}) {
  Prop6Report rep;
  try {
    rep.mu = mu_constant(ops, region, opts);
  } catch (const std::exception& e) {
    rep.error = std::string("mu solve failed: ") + e.what();
  }
  try {
    rep.d = d_constant(ops, region, opts);
  } catch (const std::exception& e) {
    if (!rep.error.empty()) rep.error += "; ";
    rep.error += std::string("d solve failed: ") + e.what();
  }
  if (rep.d) {
    rep.log_2d = std::log(2.0 * rep.d->value);
    rep.log_2sqrt_d = std::log(2.0 * std::sqrt(rep.d->value));
  }
  if (rep.mu && rep.d) {
    rep.gap_a = rep.mu->value - *rep.log_2sqrt_d;
    rep.gap_b = rep.mu->value - *rep.log_2d;
  }
  return rep;
}

inline void write_descent_csv(std::ostream& os, const std::vector<DescentStep>& trace) {
  os.precision(17);
  os << "iteration,objective,grad_norm,step\n";
  for (const DescentStep& s : trace)
    os << s.iteration << ',' << s.objective << ',' << s.grad_norm << ',' << s.step << '\n';
}

}  // namespace lamlab
