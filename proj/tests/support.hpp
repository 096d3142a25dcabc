#pragma once

// Random instances shared by the unit tests.

#include "lamlab/forms.hpp"
#include "lamlab/geometry.hpp"

#include <memory>
#include <random>
#include <set>
#include <vector>

namespace lamlab::sample {

// Random spanning tree plus extra chords; optional Dirichlet ghosts.
inline DiscreteManifold random_graph(std::mt19937_64& rng, Index n, int chords, int ghosts) {
  std::uniform_real_distribution<double> w(0.3, 2.0);
  std::vector<double> vol(static_cast<std::size_t>(n));
  for (double& v : vol) v = w(rng);
  std::vector<Edge> edges;
  for (Index i = 1; i < n; ++i) {
    std::uniform_int_distribution<Index> parent(0, i - 1);
    edges.push_back({parent(rng), i, w(rng), w(rng)});
  }
  std::set<std::pair<Index, Index>> used;
  for (const Edge& e : edges) used.insert({std::min(e.i, e.j), std::max(e.i, e.j)});
  std::uniform_int_distribution<Index> node(0, n - 1);
  for (int k = 0; k < chords; ++k) {
    const Index a = node(rng), b = node(rng);
    if (a != b && used.insert({std::min(a, b), std::max(a, b)}).second) edges.push_back({a, b, w(rng), w(rng)});
  }
  std::vector<Ghost> gh;
  for (int k = 0; k < ghosts; ++k) gh.push_back({node(rng), w(rng), 0.5});
  return DiscreteManifold(vol, edges, 2, 0, gh);
}

inline NodeField random_field(std::mt19937_64& rng, Index n, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  NodeField u(n);
  for (Index i = 0; i < n; ++i) u[i] = d(rng);
  return u;
}

inline std::shared_ptr<const DiscreteManifold> share(DiscreteManifold m) {
  return std::make_shared<const DiscreteManifold>(std::move(m));
}

inline DiscreteManifold flat_disk(double r_max, double h) {
  RadialSpec s;
  s.dimension = 2;
  s.r_max = r_max;
  s.h = h;
  return build_radial(s);
}

}  // namespace lamlab::sample
