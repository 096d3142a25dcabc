#pragma once

// Invariant suite run against one assembled instance: discrete
// adjointness, form lower bounds, lambda >= inf V, Rayleigh consistency,
// potential shifts, Dirichlet domain monotonicity, the Nehari scaling
// identity and J scale invariance, and finite-difference gradient checks.
// All random inputs come from one seeded generator.

#include "lamlab/core.hpp"
#include "lamlab/entropy.hpp"
#include "lamlab/forms.hpp"
#include "lamlab/geometry.hpp"
#include "lamlab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace lamlab {

struct PropertyCheck {
  std::string name;
  bool passed = true;
  double worst = 0.0;      // worst observed defect
  double tolerance = 0.0;
  std::string detail;
};

struct VerifyOptions {
  std::uint64_t seed = 0;
  int samples = 5;              // random trials per property
  bool entropy_solves = false;  // also run mu and d on the whole instance
  SpectralOptions spectral;
  EntropyOptions entropy;
};

namespace detail {

class Checker {
 public:
  Checker(std::string name, double tolerance) { c_.name = std::move(name); c_.tolerance = tolerance; }
  // Records a defect; the property fails when any defect exceeds tolerance.
  void defect(double d) {
    if (!(d <= c_.tolerance)) c_.passed = false;
    if (!(d <= c_.worst)) c_.worst = d;  // NaN sticks
  }
  void fail(const std::string& why) {
    c_.passed = false;
    c_.detail = why;
  }
  PropertyCheck done() { return std::move(c_); }

 private:
  PropertyCheck c_;
};

inline double rel(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

// sum over edges and ghosts of c (u_i - u_j)(v_i - v_j), ghosts with u_j = 0.
inline double edge_form(const DiscreteManifold& m, const NodeField& u, const NodeField& v) {
  double s = 0.0;
  for (const Edge& e : m.edges()) s += e.conductance * (u[e.i] - u[e.j]) * (v[e.i] - v[e.j]);
  for (const Ghost& g : m.ghosts()) s += g.conductance * u[g.node] * v[g.node];
  return s;
}

template <class F>
double central_difference(F&& f, NodeField u, Index i, double h) {
  const double x = u[i];
  u[i] = x + h;
  const double fp = f(u);
  u[i] = x - h;
  const double fm = f(u);
  return (fp - fm) / (2.0 * h);
}

}  // namespace detail

inline std::vector<PropertyCheck> verify_instance(const OperatorPair& ops, const VerifyOptions& opts) {
  const DiscreteManifold& m = *ops.manifold;
  const Index n = ops.size();
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  std::uniform_real_distribution<double> pos(0.2, 1.5);
  auto random_field = [&](auto& dist) {
    NodeField u(n);
    for (Index i = 0; i < n; ++i) u[i] = dist(rng);
    return u;
  };
  std::vector<PropertyCheck> out;

  {
    detail::Checker c("adjointness", 1e-12);
    for (int s = 0; s < opts.samples; ++s) {
      const NodeField u = random_field(sym), v = random_field(sym);
      const double lhs = -ops.mass.cwiseProduct(laplacian_apply(ops, u)).dot(v);
      const double rhs = detail::edge_form(m, u, v);
      const double scale = std::sqrt(detail::edge_form(m, u, u) * detail::edge_form(m, v, v));
      c.defect(std::abs(lhs - rhs) / std::max(scale, 1e-300));
    }
    out.push_back(c.done());
  }
  {
    detail::Checker c("gradient_square_sums_to_energy", 1e-12);
    for (int s = 0; s < opts.samples; ++s) {
      const NodeField f = random_field(sym);
      c.defect(detail::rel(ops.mass.dot(node_gradient_squared(ops, f)), dirichlet_energy(ops, f)));
    }
    out.push_back(c.done());
  }
  {
    // A ghost sees the constant drop to zero, so nodes with Dirichlet contact are skipped.
    detail::Checker c("modified_curvature_of_constant_is_v", 1e-12);
    const NodeField vm = modified_scalar_curvature(ops, NodeField::Constant(n, 0.7));
    std::vector<bool> touches(n, false);
    for (const Ghost& g : m.ghosts()) touches[g.node] = true;
    for (Index i = 0; i < n; ++i)
      if (!touches[i]) c.defect(std::abs(vm[i] - ops.potential[i]) / std::max(1.0, std::abs(ops.potential[i])));
    out.push_back(c.done());
  }
  const double inf_v = ops.potential.minCoeff();
  {
    detail::Checker c("i0_at_least_inf_v", 1e-12);
    for (int s = 0; s < opts.samples; ++s) {
      const NodeField u = random_field(sym);
      const double norm2 = ops.mass.dot(u.cwiseProduct(u));
      c.defect(std::max(0.0, inf_v * norm2 - i0_energy(ops, u)) / std::max(1.0, std::abs(inf_v) * norm2));
    }
    out.push_back(c.done());
  }

  const Region whole = make_whole(m);
  std::optional<SpectralResult> ground;
  {
    detail::Checker c("lambda_at_least_inf_v", 1e-8);
    try {
      ground = lambda_constant(ops, whole, opts.spectral);
      c.defect(std::max(0.0, inf_v - ground->lambda));
    } catch (const std::exception& e) {
      c.fail(e.what());
    }
    out.push_back(c.done());
  }
  if (ground) {
    detail::Checker r("rayleigh_consistency", 1e-8);
    const NodeField& u = ground->eigenfunction;
    r.defect(std::abs(i0_energy(ops, u) / ops.mass.dot(u.cwiseProduct(u)) - ground->lambda) /
             std::max(1.0, std::abs(ground->lambda)));
    r.defect(ground->residual);
    out.push_back(r.done());

    detail::Checker p("ground_state_nonnegative", 0.0);
    p.defect(std::max(0.0, -u.minCoeff()));
    out.push_back(p.done());

    detail::Checker sh("potential_shift", 1e-8);
    try {
      const double shift = 1.75;
      const OperatorPair moved = with_potential(ops, (ops.potential.array() + shift).matrix());
      const SpectralResult s2 = lambda_constant(moved, whole, opts.spectral);
      sh.defect(std::abs(s2.lambda - ground->lambda - shift) / std::max(1.0, std::abs(ground->lambda)));
      sh.defect(1.0 - std::abs(ops.mass.dot(s2.eigenfunction.cwiseProduct(u))));
    } catch (const std::exception& e) {
      sh.fail(e.what());
    }
    out.push_back(sh.done());
  }
  {
    // Nested balls around the base point, then the whole instance.
    detail::Checker c("domain_monotonicity", 1e-10);
    std::ostringstream os;
    double prev = std::numeric_limits<double>::infinity();
    for (double frac : {0.25, 0.5, 0.75, 1.0}) {
      try {
        const Region reg = frac < 1.0 ? make_ball(m, frac * m.truncation_radius()) : whole;
        if (frac < 1.0 && (reg.size() == n || !reg.connected(m))) continue;
        const double lam = lambda_constant(ops, reg, opts.spectral).lambda;
        c.defect(std::max(0.0, lam - prev) / std::max(1.0, std::abs(prev)));
        os << frac << ":" << lam << " ";
        prev = lam;
      } catch (const std::exception& e) {
        c.fail(e.what());
      }
    }
    PropertyCheck pc = c.done();
    if (pc.detail.empty()) pc.detail = os.str();
    out.push_back(pc);
  }
  {
    detail::Checker c("volume_growth_nondecreasing", 1e-14);
    double prev = 0.0;
    for (int k = 0; k <= 16; ++k) {
      const double v = volume_growth(m, m.truncation_radius() * k / 16.0);
      c.defect(std::max(0.0, prev - v));
      prev = v;
    }
    c.defect(detail::rel(volume_growth(m, m.truncation_radius()), m.total_volume()));
    out.push_back(c.done());
  }
  {
    detail::Checker sc("nehari_scaling_identity", 1e-12);
    detail::Checker ji("j_scale_invariance", 1e-10);
    detail::Checker on("i_equals_half_norm_on_nehari", 1e-12);
    detail::Checker np("nehari_projection_scaling", 1e-10);
    // Near-constant fields keep a* = exp(N/|u|^2) representable on fine meshes.
    std::uniform_real_distribution<double> scale(0.1, 5.0), near_one(0.9, 1.1);
    for (int s = 0; s < opts.samples; ++s) {
      const NodeField u = random_field(near_one);
      const double a = scale(rng);
      const double norm2 = ops.mass.dot(u.cwiseProduct(u));
      const double lhs = n_functional(ops, NodeField(a * u));
      const double rhs = a * a * (n_functional(ops, u) - std::log(a) * norm2);
      sc.defect(std::abs(lhs - rhs) / std::max({std::abs(lhs), a * a * norm2, 1e-300}));
      ji.defect(std::abs(j_objective(ops, NodeField(a * u)) - j_objective(ops, u)));
      const NehariProjection p = nehari_project(ops, u);
      const double pn2 = ops.mass.dot(p.projected.cwiseProduct(p.projected));
      on.defect(std::abs(i_functional(ops, p.projected) - 0.5 * pn2) / std::max(pn2, 1e-300));
      np.defect(detail::rel(nehari_project(ops, NodeField(a * u)).a_star, p.a_star / a));
    }
    out.push_back(sc.done());
    out.push_back(ji.done());
    out.push_back(on.done());
    out.push_back(np.done());
  }
  {
    // Central differences on up to 20 random coordinates, relative to the
    // largest checked gradient entry.
    detail::Checker gw("w_gradient_fd", 1e-5);
    detail::Checker gj("j_gradient_fd", 1e-5);
    std::uniform_int_distribution<Index> pick(0, n - 1);
    for (int s = 0; s < std::min(opts.samples, 3); ++s) {
      const NodeField u = random_field(pos);
      const NodeField g_w = w_gradient(ops, u);
      const NodeField g_j = j_gradient(ops, u);
      double ew = 0, sw = 0, ej = 0, sj = 0;
      for (int k = 0; k < std::min<Index>(20, n); ++k) {
        const Index i = n <= 20 ? k : pick(rng);
        const double h = 1e-5 * std::max(1.0, std::abs(u[i]));
        const double fw = detail::central_difference([&](const NodeField& x) { return w_functional(ops, x); }, u, i, h);
        const double fj = detail::central_difference([&](const NodeField& x) { return j_objective(ops, x); }, u, i, h);
        ew = std::max(ew, std::abs(fw - g_w[i]));
        sw = std::max(sw, std::abs(g_w[i]));
        ej = std::max(ej, std::abs(fj - g_j[i]));
        sj = std::max(sj, std::abs(g_j[i]));
      }
      gw.defect(ew / std::max(sw, 1e-300));
      gj.defect(ej / std::max(sj, 1e-300));
    }
    out.push_back(gw.done());
    out.push_back(gj.done());
  }
  if (opts.entropy_solves) {
    detail::Checker mu("mu_residual_and_bound", opts.entropy.descent.tolerance);
    detail::Checker mono("mu_descent_monotone", 1e-12);
    try {
      const EntropyResult r = mu_constant(ops, whole, opts.entropy);
      mu.defect(r.el_residual);
      for (const StartRecord& s : r.starts) mu.defect(std::max(0.0, r.value - s.initial_objective));
      for (std::size_t k = 1; k < r.descent_trace.size(); ++k)
        mono.defect(std::max(0.0, r.descent_trace[k].objective - r.descent_trace[k - 1].objective) /
                    std::max(1.0, std::abs(r.descent_trace[k - 1].objective)));
    } catch (const std::exception& e) {
      mu.fail(e.what());
    }
    out.push_back(mu.done());
    out.push_back(mono.done());
    detail::Checker d("d_residual", opts.entropy.descent.tolerance);
    detail::Checker nd("d_minimizer_on_nehari_set", 1e-10);
    try {
      const EntropyResult r = d_constant(ops, whole, opts.entropy);
      d.defect(r.el_residual);
      if (!(r.value > 0.0)) d.fail("d is not positive");
      nd.defect(std::abs(n_functional(ops, r.minimizer)) /
                std::max(1.0, ops.mass.dot(r.minimizer.cwiseProduct(r.minimizer))));
    } catch (const std::exception& e) {
      d.fail(e.what());
    }
    out.push_back(d.done());
    out.push_back(nd.done());
  }
  return out;
}

}  // namespace lamlab
