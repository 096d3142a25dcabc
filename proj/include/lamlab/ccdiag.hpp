#pragma once

// Concentration-compactness diagnostics for sequences of fields (typically
// exhaustion ground states): the concentration function Q(r), a
// vanishing / dichotomy / compactness classifier, the lambda vs lambda-at-
// infinity existence predictor, and mass traces over a fixed region.

#include "lamlab/core.hpp"
#include "lamlab/forms.hpp"
#include "lamlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace lamlab {

namespace detail {

inline double total_mass(const DiscreteManifold& m, const NodeField& u) {
  double s = 0.0;
  for (Index i = 0; i < m.size(); ++i) s += m.volume_weights()[static_cast<std::size_t>(i)] * u[i] * u[i];
  return s;
}

// Mass of `density` (already multiplied by the weights) inside ball(z, r)
// for each r in `radii` (sorted ascending), skipping nodes not in `keep`.
inline std::vector<double> ball_masses(const DiscreteManifold& m, const NodeField& density, Index z,
                                       const std::vector<double>& radii,
                                       const std::vector<char>* keep = nullptr) {
  const std::vector<double> dist = m.distances_from(z, radii.back());
  std::vector<double> out(radii.size(), 0.0);
  for (Index i = 0; i < m.size(); ++i) {
    const double d = dist[static_cast<std::size_t>(i)];
    if (!std::isfinite(d) || (keep && !(*keep)[static_cast<std::size_t>(i)])) continue;
    for (std::size_t k = 0; k < radii.size(); ++k)
      if (d <= radii[k]) out[k] += density[i];
  }
  return out;
}

struct BestBall {
  Index center = 0;
  double mass = 0.0;  // fraction of the total
};

inline BestBall best_ball(const DiscreteManifold& m, const NodeField& density, double r,
                          const std::vector<char>* keep = nullptr) {
  const double total = density.sum();
  BestBall best{0, -1.0};
  const std::vector<double> radii{r};
  for (Index z = 0; z < m.size(); ++z) {
    if (keep && !(*keep)[static_cast<std::size_t>(z)]) continue;
    const double q = ball_masses(m, density, z, radii, keep)[0] / total;
    if (q > best.mass) best = {z, q};
  }
  if (best.mass < 0.0) best.mass = 0.0;
  return best;
}

inline NodeField mass_density(const DiscreteManifold& m, const NodeField& u) {
  detail::require(u.size() == m.size(), "field size must equal node count");
  detail::require(u.allFinite(), "field must be finite");
  return m.volume_field().cwiseProduct(u.cwiseProduct(u));
}

}  // namespace detail

/// Q(r) = max over centers z of the fraction of sum m u^2 inside ball(z, r).
inline double concentration_function(const DiscreteManifold& m, const NodeField& u, double r) {
  detail::require(r >= 0.0, "concentration radius must be >= 0");
  const NodeField density = detail::mass_density(m, u);
  if (!(density.sum() > 0.0)) throw InvalidArgument("concentration function of u = 0 is undefined");
  return std::min(1.0, detail::best_ball(m, density, r).mass);
}

/// A sequence of fields on one manifold, e.g. ground states of a domain
/// exhaustion. `potential`, when set, is used for the rho-mass evidence.
struct SequenceSnapshot {
  std::shared_ptr<const DiscreteManifold> manifold;
  std::vector<NodeField> fields;
  std::vector<double> norms;
  std::vector<double> objectives;
  std::optional<NodeField> potential;
};

inline SequenceSnapshot make_snapshot(std::shared_ptr<const DiscreteManifold> m,
                                      std::vector<NodeField> fields,
                                      std::vector<double> objectives = {},
                                      std::optional<NodeField> potential = std::nullopt) {
  detail::require(m != nullptr, "snapshot needs a manifold");
  detail::require(objectives.empty() || objectives.size() == fields.size(),
                  "one objective value per field");
  SequenceSnapshot s;
  for (std::size_t j = 0; j < fields.size(); ++j) {
    detail::require(fields[j].size() == m->size(), "all snapshot fields must live on the same manifold");
    const double norm = std::sqrt(detail::total_mass(*m, fields[j]));
    if (!(norm > 0.0)) {
      std::ostringstream os;
      os << "snapshot field " << j << " has zero norm";
      throw InvalidArgument(os.str());
    }
    s.norms.push_back(norm);
  }
  if (potential) detail::require(potential->size() == m->size(), "potential size must equal node count");
  s.manifold = std::move(m);
  s.fields = std::move(fields);
  s.objectives = std::move(objectives);
  s.potential = std::move(potential);
  return s;
}

struct TrichotomyThresholds {
  double eps_vanishing = 0.05;
  double eps_dichotomy = 0.1;
  double eps_compact = 0.05;
  double drift_fraction = 0.25;       // bounded centers: drift <= this * truncation radius
  double separation_fraction = 0.5;   // separating pieces: distance > this * truncation radius
};

enum class Verdict { Vanishing, Dichotomy, Compactness, Inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Vanishing: return "vanishing";
    case Verdict::Dichotomy: return "dichotomy";
    case Verdict::Compactness: return "compactness";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

struct FieldEvidence {
  double norm = 0.0;
  std::optional<double> objective;
  std::vector<double> profile;   // Q at Trichotomy::profile_radii
  double q_probe = 0.0;          // Q(r_probe)
  Index center = 0;              // best center at the finest profile radius
  Index probe_center = 0;        // best center for r_probe (first peeled ball)
  double center_distance = 0.0;  // from the base point
  double split_alpha = 0.0;      // mass in the first peeled ball
  double split_beta = 0.0;       // mass in the second ball, after removing the first
  Index second_center = 0;
  double split_distance = 0.0;   // between the two peeled centers
  std::optional<double> rho_mass;  // share of |grad u|^2 + V u^2 in the best ball (recorded only)
};

struct Trichotomy {
  Verdict verdict = Verdict::Inconclusive;
  double r_probe = 0.0;
  TrichotomyThresholds thresholds;
  double truncation_radius = 0.0;
  std::vector<double> profile_radii;
  std::vector<FieldEvidence> fields;
  double center_drift = 0.0;  // max distance of any center from the last one
  std::string reason;
};

inline Trichotomy trichotomy_classify(const SequenceSnapshot& snap, double r_probe,
                                      const TrichotomyThresholds& th = {}) {
  detail::require(snap.manifold != nullptr, "snapshot needs a manifold");
  detail::require(snap.fields.size() >= 3, "trichotomy needs at least 3 fields");
  detail::require(r_probe > 0.0, "probe radius must be positive");
  detail::require(th.eps_vanishing + th.eps_dichotomy <= 1.0 && th.eps_compact > 0.0 &&
                      th.eps_vanishing > 0.0 && th.eps_dichotomy > 0.0 &&
                      th.eps_compact + th.eps_dichotomy < 1.0,
                  "trichotomy thresholds overlap");
  const DiscreteManifold& m = *snap.manifold;
  Trichotomy t;
  t.r_probe = r_probe;
  t.thresholds = th;
  t.truncation_radius = m.truncation_radius();
  t.profile_radii = {0.25 * r_probe, 0.5 * r_probe, r_probe, 2.0 * r_probe, 4.0 * r_probe};

  std::optional<OperatorPair> ops;
  if (snap.potential) ops = assemble(m, *snap.potential);

  for (std::size_t j = 0; j < snap.fields.size(); ++j) {
    const NodeField& u = snap.fields[j];
    const NodeField density = detail::mass_density(m, u);
    const double total = density.sum();
    FieldEvidence ev;
    ev.norm = std::sqrt(total);
    if (j < snap.objectives.size()) ev.objective = snap.objectives[j];

    // One bounded search per center gives the whole profile; index 2 is
    // r_probe. Many centers nearly tie at r_probe when the mass sits well
    // inside one probe ball, so the sequence center is located at the finest
    // profile radius instead.
    ev.profile.assign(t.profile_radii.size(), 0.0);
    detail::BestBall first{0, -1.0}, fine{0, -1.0};
    for (Index z = 0; z < m.size(); ++z) {
      const std::vector<double> q = detail::ball_masses(m, density, z, t.profile_radii);
      for (std::size_t k = 0; k < q.size(); ++k)
        ev.profile[k] = std::max(ev.profile[k], std::min(1.0, q[k] / total));
      if (q[2] / total > first.mass) first = {z, q[2] / total};
      if (q[0] / total > fine.mass) fine = {z, q[0] / total};
    }
    ev.q_probe = std::min(1.0, first.mass);
    ev.probe_center = first.center;
    ev.center = fine.center;
    ev.center_distance = m.node_distances()[static_cast<std::size_t>(fine.center)];

    // Greedy peeling: drop the best ball and probe what is left.
    const std::vector<double> from_first = m.distances_from(first.center);
    std::vector<char> keep(static_cast<std::size_t>(m.size()), 1);
    for (Index i = 0; i < m.size(); ++i)
      if (from_first[static_cast<std::size_t>(i)] <= r_probe) keep[static_cast<std::size_t>(i)] = 0;
    ev.split_alpha = ev.q_probe;
    if (std::find(keep.begin(), keep.end(), 1) != keep.end()) {
      const detail::BestBall second = detail::best_ball(m, density, r_probe, &keep);
      ev.split_beta = second.mass;
      ev.second_center = second.center;
      ev.split_distance = from_first[static_cast<std::size_t>(second.center)];
    } else {
      ev.second_center = first.center;
    }

    if (ops) {
      const NodeField rho =
          m.volume_field().cwiseProduct(node_gradient_squared(*ops, u) +
                                        ops->potential.cwiseProduct(u.cwiseProduct(u)));
      const double rho_total = rho.sum();
      if (rho_total != 0.0) {
        double in_ball = 0.0;
        for (Index i = 0; i < m.size(); ++i)
          if (from_first[static_cast<std::size_t>(i)] <= r_probe) in_ball += rho[i];
        ev.rho_mass = in_ball / rho_total;
      }
    }
    t.fields.push_back(std::move(ev));
  }

  const FieldEvidence& last = t.fields.back();
  const std::vector<double> from_last = m.distances_from(last.center);
  for (const FieldEvidence& ev : t.fields)
    t.center_drift = std::max(t.center_drift, from_last[static_cast<std::size_t>(ev.center)]);

  bool q_decreasing = t.fields.back().q_probe < t.fields.front().q_probe;
  bool separating = true;
  for (std::size_t j = 1; j < t.fields.size(); ++j) {
    if (t.fields[j].q_probe > t.fields[j - 1].q_probe + 1e-12) q_decreasing = false;
    if (t.fields[j].split_distance + 1e-12 < t.fields[j - 1].split_distance) separating = false;
  }
  separating = separating && last.split_distance > t.fields.front().split_distance;

  std::ostringstream why;
  if (last.q_probe > 1.0 - th.eps_compact &&
      t.center_drift <= th.drift_fraction * t.truncation_radius) {
    t.verdict = Verdict::Compactness;
    why << "Q(r_probe) = " << last.q_probe << " > " << 1.0 - th.eps_compact << ", center drift "
        << t.center_drift;
  } else if (last.q_probe < th.eps_vanishing && q_decreasing) {
    t.verdict = Verdict::Vanishing;
    why << "Q(r_probe) = " << last.q_probe << " < " << th.eps_vanishing
        << " and decreasing along the sequence";
  } else if (last.split_alpha > th.eps_dichotomy && 1.0 - last.split_alpha > th.eps_dichotomy &&
             last.split_beta > th.eps_dichotomy && separating &&
             last.split_distance > th.separation_fraction * t.truncation_radius) {
    t.verdict = Verdict::Dichotomy;
    why << "split masses " << last.split_alpha << " / " << last.split_beta << " at distance "
        << last.split_distance;
  } else {
    t.verdict = Verdict::Inconclusive;
    why << "Q(r_probe) = " << last.q_probe << ", drift " << t.center_drift << ", split "
        << last.split_alpha << " / " << last.split_beta << " at distance " << last.split_distance;
  }
  t.reason = why.str();
  return t;
}

enum class Prediction { GroundStatePredicted, NoPrediction, AtInfinityRegime };

inline const char* to_string(Prediction p) {
  switch (p) {
    case Prediction::GroundStatePredicted: return "ground state predicted";
    case Prediction::NoPrediction: return "no prediction";
    case Prediction::AtInfinityRegime: return "at-infinity regime";
  }
  return "?";
}

/// lambda < lambda_inf - delta is the sufficient condition for a ground
/// state. The converse is not claimed: "at-infinity regime" only says the
/// condition fails.
inline Prediction existence_predictor(double lambda, double lambda_inf, double delta = 1e-4) {
  detail::require(std::isfinite(lambda) && std::isfinite(lambda_inf),
                  "existence predictor needs finite lambda values");
  detail::require(delta >= 0.0, "margin must be >= 0");
  if (lambda < lambda_inf - delta) return Prediction::GroundStatePredicted;
  if (std::abs(lambda - lambda_inf) <= delta) return Prediction::NoPrediction;
  return Prediction::AtInfinityRegime;
}

/// Share of sum m u^2 inside the region for each field.
inline std::vector<double> mass_ratio(const DiscreteManifold& m, const std::vector<NodeField>& fields,
                                      const Region& region) {
  std::vector<double> out;
  out.reserve(fields.size());
  for (const NodeField& u : fields) {
    const NodeField density = detail::mass_density(m, u);
    const double total = density.sum();
    if (!(total > 0.0)) throw InvalidArgument("mass_ratio of u = 0 is undefined");
    double in = 0.0;
    for (Index i : region.nodes()) in += density[i];
    out.push_back(in / total);
  }
  return out;
}

}  // namespace lamlab
