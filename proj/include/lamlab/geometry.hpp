#pragma once

// Discrete stand-ins for complete Riemannian manifolds: weighted graphs with
// node volumes and edge conductances, radial grids for warped products
// dr^2 + phi(r)^2 g_sphere, geodesic balls and the two cutoff profiles used
// for volume-growth arguments.

#include "lamlab/core.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>
#include <queue>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace lamlab {

struct Edge {
  Index i = 0;
  Index j = 0;
  double conductance = 1.0;
  double length = 1.0;
};

/// A Dirichlet ghost: an implicit zero-valued node attached to `node`.
/// It contributes conductance * u_node^2 to the Dirichlet energy.
struct Ghost {
  Index node = 0;
  double conductance = 0.0;
  double length = 0.0;
};

class DiscreteManifold {
 public:
  /// `node_distances` may be left empty, in which case distances from the
  /// base point are shortest paths over edge lengths. `coordinates` is the
  /// per-node label written to CSV (radius on radial grids, id otherwise).
  DiscreteManifold(std::vector<double> volume_weights, std::vector<Edge> edges,
                   int dimension, Index base_point, std::vector<Ghost> ghosts = {},
                   std::vector<double> node_distances = {},
                   std::vector<double> coordinates = {}, std::string kind = "graph")
      : volumes_(std::move(volume_weights)),
        edges_(std::move(edges)),
        ghosts_(std::move(ghosts)),
        dimension_(dimension),
        base_(base_point),
        distances_(std::move(node_distances)),
        coordinates_(std::move(coordinates)),
        kind_(std::move(kind)) {
    const Index n = size();
    detail::require(n >= 1, "manifold needs at least one node");
    detail::require(dimension_ >= 1, "dimension tag must be >= 1");
    detail::require(base_ >= 0 && base_ < n, "base point out of range");
    for (Index i = 0; i < n; ++i) {
      const double m = volumes_[static_cast<std::size_t>(i)];
      if (!(m > 0.0) || !std::isfinite(m)) {
        std::ostringstream os;
        os << "volume weight of node " << i << " must be positive and finite (got " << m << ")";
        throw InvalidArgument(os.str());
      }
    }
    build_adjacency();
    for (const Ghost& g : ghosts_) {
      detail::require(g.node >= 0 && g.node < n, "ghost attached to unknown node");
      detail::require(g.conductance > 0.0 && std::isfinite(g.conductance),
                      "ghost conductance must be positive");
    }
    detail::require(connected_all(), "manifold graph must be connected");
    if (distances_.empty()) {
      distances_ = distances_from(base_);
    } else {
      detail::require(static_cast<Index>(distances_.size()) == n,
                      "node_distances must have one entry per node");
      for (const Edge& e : edges_) {
        const double gap = std::abs(distances_[idx(e.i)] - distances_[idx(e.j)]);
        if (gap > e.length * (1.0 + 1e-12)) {
          std::ostringstream os;
          os << "node distances violate the triangle inequality on edge (" << e.i << ", " << e.j
             << ")";
          throw InvalidArgument(os.str());
        }
      }
    }
    if (coordinates_.empty()) {
      coordinates_.resize(idx(n));
      for (Index i = 0; i < n; ++i) coordinates_[idx(i)] = static_cast<double>(i);
    }
    truncation_ = 0.0;
    for (double d : distances_) truncation_ = std::max(truncation_, d);
  }

  Index size() const { return static_cast<Index>(volumes_.size()); }
  int dimension() const { return dimension_; }
  Index base_point() const { return base_; }
  const std::string& kind() const { return kind_; }

  const std::vector<double>& volume_weights() const { return volumes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<Ghost>& ghosts() const { return ghosts_; }
  const std::vector<double>& node_distances() const { return distances_; }
  const std::vector<double>& coordinates() const { return coordinates_; }

  /// Largest distance from the base point; stands in for infinity.
  double truncation_radius() const { return truncation_; }
  void set_truncation_radius(double r) { truncation_ = std::max(truncation_, r); }

  /// True when no Dirichlet ghosts are attached (a closed manifold).
  bool closed() const { return ghosts_.empty(); }

  double total_volume() const {
    double s = 0.0;
    for (double m : volumes_) s += m;
    return s;
  }

  NodeField volume_field() const {
    return Eigen::Map<const NodeField>(volumes_.data(), size());
  }

  /// (neighbor, edge index) pairs of node i.
  std::span<const std::pair<Index, std::size_t>> neighbors(Index i) const {
    const auto begin = offsets_[idx(i)];
    const auto end = offsets_[idx(i) + 1];
    return {adjacency_.data() + begin, end - begin};
  }

  /// Shortest-path distances from z; nodes farther than `cutoff` are +inf.
  std::vector<double> distances_from(Index z,
                                     double cutoff = std::numeric_limits<double>::infinity()) const {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(idx(size()), inf);
    using Item = std::pair<double, Index>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist[idx(z)] = 0.0;
    heap.emplace(0.0, z);
    while (!heap.empty()) {
      const auto [d, i] = heap.top();
      heap.pop();
      if (d > dist[idx(i)]) continue;
      for (const auto& [j, e] : neighbors(i)) {
        const double nd = d + edges_[e].length;
        if (nd <= cutoff && nd < dist[idx(j)]) {
          dist[idx(j)] = nd;
          heap.emplace(nd, j);
        }
      }
    }
    return dist;
  }

 private:
  static std::size_t idx(Index i) { return static_cast<std::size_t>(i); }

  void build_adjacency() {
    const Index n = size();
    std::vector<std::size_t> degree(idx(n), 0);
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const Edge& ed = edges_[e];
      if (ed.i < 0 || ed.i >= n || ed.j < 0 || ed.j >= n || ed.i == ed.j) {
        std::ostringstream os;
        os << "edge " << e << " has invalid endpoints (" << ed.i << ", " << ed.j << ")";
        throw InvalidArgument(os.str());
      }
      if (!(ed.conductance > 0.0) || !std::isfinite(ed.conductance)) {
        std::ostringstream os;
        os << "edge " << e << " needs a positive conductance (got " << ed.conductance << ")";
        throw InvalidArgument(os.str());
      }
      if (!(ed.length > 0.0) || !std::isfinite(ed.length)) {
        std::ostringstream os;
        os << "edge " << e << " needs a positive length (got " << ed.length << ")";
        throw InvalidArgument(os.str());
      }
      ++degree[idx(ed.i)];
      ++degree[idx(ed.j)];
    }
    offsets_.assign(idx(n) + 1, 0);
    for (Index i = 0; i < n; ++i) offsets_[idx(i) + 1] = offsets_[idx(i)] + degree[idx(i)];
    adjacency_.resize(offsets_.back());
    std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      adjacency_[fill[idx(edges_[e].i)]++] = {edges_[e].j, e};
      adjacency_[fill[idx(edges_[e].j)]++] = {edges_[e].i, e};
    }
    for (Index i = 0; i < n; ++i) {
      auto first = adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[idx(i)]);
      auto last = adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[idx(i) + 1]);
      std::sort(first, last);
      auto dup = std::adjacent_find(first, last, [](const auto& a, const auto& b) {
        return a.first == b.first;
      });
      if (dup != last) {
        std::ostringstream os;
        os << "duplicate edge between nodes " << i << " and " << dup->first;
        throw InvalidArgument(os.str());
      }
    }
  }

  bool connected_all() const {
    std::vector<char> seen(idx(size()), 0);
    std::vector<Index> stack{0};
    seen[0] = 1;
    Index count = 1;
    while (!stack.empty()) {
      const Index i = stack.back();
      stack.pop_back();
      for (const auto& [j, e] : neighbors(i)) {
        if (!seen[idx(j)]) {
          seen[idx(j)] = 1;
          ++count;
          stack.push_back(j);
        }
      }
    }
    return count == size();
  }

  std::vector<double> volumes_;
  std::vector<Edge> edges_;
  std::vector<Ghost> ghosts_;
  int dimension_;
  Index base_;
  std::vector<double> distances_;
  std::vector<double> coordinates_;
  std::string kind_;
  double truncation_ = 0.0;
  std::vector<std::size_t> offsets_;
  std::vector<std::pair<Index, std::size_t>> adjacency_;
};

// ---------------------------------------------------------------------------
// Warps and radial grids

/// Named warp profile phi(r) of the model metric dr^2 + phi(r)^2 g_sphere.
struct Warp {
  std::string family;
  std::function<double(double)> phi;

  double operator()(double r) const { return phi(r); }

  /// phi(r) = scale * r^exponent.  exponent = 1 gives flat space.
  static Warp power(double scale = 1.0, double exponent = 1.0) {
    return {"power", [scale, exponent](double r) { return scale * std::pow(r, exponent); }};
  }
  /// phi(r) = sinh(k r) / k: constant curvature -k^2.
  static Warp sinh(double curvature_scale = 1.0) {
    return {"sinh", [k = curvature_scale](double r) { return std::sinh(k * r) / k; }};
  }
  /// phi(r) = a: a cylinder over a round sphere of radius a.
  static Warp constant(double a = 1.0) {
    return {"constant", [a](double) { return a; }};
  }
  /// Piecewise-linear interpolation through (r_k, phi_k); r must be increasing
  /// and cover the grid.
  static Warp tabulated(std::vector<double> r, std::vector<double> values) {
    detail::require(r.size() == values.size() && r.size() >= 2,
                    "tabulated warp needs matching r/phi arrays with >= 2 samples");
    for (std::size_t k = 1; k < r.size(); ++k)
      detail::require(r[k] > r[k - 1], "tabulated warp radii must be increasing");
    return {"tabulated", [r = std::move(r), v = std::move(values)](double x) {
              if (x <= r.front()) return v.front();
              if (x >= r.back()) return v.back();
              const auto it = std::upper_bound(r.begin(), r.end(), x);
              const auto k = static_cast<std::size_t>(it - r.begin());
              const double t = (x - r[k - 1]) / (r[k] - r[k - 1]);
              return (1.0 - t) * v[k - 1] + t * v[k];
            }};
  }
};

struct RadialSpec {
  int dimension = 2;
  Warp warp = Warp::power();
  double r_max = 1.0;
  double h = 0.1;
};

/// Area of the unit (n-1)-sphere in R^n.
inline double unit_sphere_area(int n) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

/// Cell-centered grid r_i = (i + 1/2) h. Cell volumes use 3-point
/// Gauss-Legendre quadrature, exact for phi^{n-1} up to degree 5. The center
/// node has no inward edge; the outer node carries a Dirichlet ghost at the
/// wall r = R_max.
inline DiscreteManifold build_radial(const RadialSpec& spec) {
  detail::require(spec.dimension >= 2, "radial grids need dimension >= 2");
  detail::require(spec.h > 0.0 && std::isfinite(spec.h), "mesh width h must be positive");
  detail::require(spec.r_max > 0.0 && std::isfinite(spec.r_max), "R_max must be positive");
  const double cells = spec.r_max / spec.h;
  detail::require(cells >= 8.0 - 1e-9, "R_max / h must be at least 8");
  const auto n = static_cast<Index>(std::llround(cells));
  detail::require(std::abs(cells - static_cast<double>(n)) < 1e-6 * std::max(1.0, cells),
                  "R_max must be an integer multiple of h");

  const double h = spec.h;
  const double omega = unit_sphere_area(spec.dimension);
  const int power = spec.dimension - 1;
  auto checked_phi = [&](double r) {
    const double v = spec.warp(r);
    if (!(v > 0.0) || !std::isfinite(v)) {
      std::ostringstream os;
      os << "warp '" << spec.warp.family << "' is not positive at r = " << r << " (phi = " << v
         << ")";
      throw InvalidArgument(os.str());
    }
    return v;
  };

  static constexpr double kNodes[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
  static constexpr double kWeights[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};

  std::vector<double> volumes(static_cast<std::size_t>(n));
  std::vector<double> radii(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const double lo = static_cast<double>(i) * h;
    const double mid = lo + 0.5 * h;
    double integral = 0.0;
    for (int q = 0; q < 3; ++q) {
      const double r = mid + 0.5 * h * kNodes[q];
      integral += kWeights[q] * std::pow(checked_phi(r), power);
    }
    volumes[static_cast<std::size_t>(i)] = omega * 0.5 * h * integral;
    radii[static_cast<std::size_t>(i)] = mid;
  }
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i + 1 < n; ++i) {
    const double face = static_cast<double>(i + 1) * h;
    edges.push_back({i, i + 1, omega * std::pow(checked_phi(face), power) / h, h});
  }
  const double wall = static_cast<double>(n) * h;
  std::vector<Ghost> ghosts{
      {n - 1, omega * std::pow(checked_phi(wall), power) / (0.5 * h), 0.5 * h}};
  DiscreteManifold m(std::move(volumes), std::move(edges), spec.dimension, 0, std::move(ghosts),
                     radii, radii, "radial");
  m.set_truncation_radius(wall);
  return m;
}

/// Closed cycle of n nodes with total length `circumference`.
inline DiscreteManifold build_circle(Index n, double circumference) {
  detail::require(n >= 3, "circle needs at least 3 nodes");
  detail::require(circumference > 0.0, "circumference must be positive");
  const double ell = circumference / static_cast<double>(n);
  std::vector<Edge> edges;
  for (Index i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n, 1.0 / ell, ell});
  return {std::vector<double>(static_cast<std::size_t>(n), ell), std::move(edges), 1, 0, {}, {}, {},
          "circle"};
}

/// Periodic nx-by-ny grid with spacing s (a flat 2-torus).
inline DiscreteManifold build_torus(Index nx, Index ny, double spacing = 1.0) {
  detail::require(nx >= 3 && ny >= 3, "torus needs at least 3 nodes per direction");
  detail::require(spacing > 0.0, "torus spacing must be positive");
  std::vector<Edge> edges;
  auto id = [nx](Index x, Index y) { return y * nx + x; };
  for (Index y = 0; y < ny; ++y) {
    for (Index x = 0; x < nx; ++x) {
      edges.push_back({id(x, y), id((x + 1) % nx, y), 1.0, spacing});
      edges.push_back({id(x, y), id(x, (y + 1) % ny), 1.0, spacing});
    }
  }
  return {std::vector<double>(static_cast<std::size_t>(nx * ny), spacing * spacing),
          std::move(edges), 2, 0, {}, {}, {}, "torus"};
}

/// Non-periodic nx-by-ny grid (Neumann edges), base point at the center.
inline DiscreteManifold build_grid(Index nx, Index ny, double spacing = 1.0) {
  detail::require(nx >= 2 && ny >= 2, "grid needs at least 2 nodes per direction");
  std::vector<Edge> edges;
  auto id = [nx](Index x, Index y) { return y * nx + x; };
  for (Index y = 0; y < ny; ++y) {
    for (Index x = 0; x < nx; ++x) {
      if (x + 1 < nx) edges.push_back({id(x, y), id(x + 1, y), 1.0, spacing});
      if (y + 1 < ny) edges.push_back({id(x, y), id(x, y + 1), 1.0, spacing});
    }
  }
  return {std::vector<double>(static_cast<std::size_t>(nx * ny), spacing * spacing),
          std::move(edges), 2, id(nx / 2, ny / 2), {}, {}, {}, "grid"};
}

/// Segment of n cells of width h and cross-section area a (a finite
/// cylinder). Dirichlet ends attach a ghost half a cell beyond the end node.
/// The base point is node 0.
inline DiscreteManifold build_path(Index n, double h, double cross_section = 1.0,
                                   bool dirichlet_left = true, bool dirichlet_right = true) {
  detail::require(n >= 2, "path needs at least 2 nodes");
  detail::require(h > 0.0 && cross_section > 0.0, "path needs positive h and cross-section");
  std::vector<Edge> edges;
  for (Index i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, cross_section / h, h});
  std::vector<Ghost> ghosts;
  if (dirichlet_left) ghosts.push_back({0, 2.0 * cross_section / h, 0.5 * h});
  if (dirichlet_right) ghosts.push_back({n - 1, 2.0 * cross_section / h, 0.5 * h});
  std::vector<double> x(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = (static_cast<double>(i) + 0.5) * h;
  std::vector<double> dist(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) dist[i] = x[i] - x[0];
  return {std::vector<double>(static_cast<std::size_t>(n), cross_section * h), std::move(edges), 1,
          0, std::move(ghosts), std::move(dist), std::move(x), "path"};
}

inline DiscreteManifold build_single_node(double volume = 1.0) {
  return {std::vector<double>{volume}, {}, 1, 0, {}, {}, {}, "single"};
}

// ---------------------------------------------------------------------------
// Regions

enum class RegionKind { Ball, Exterior, Annulus, Whole };

inline const char* to_string(RegionKind k) {
  switch (k) {
    case RegionKind::Ball: return "ball";
    case RegionKind::Exterior: return "exterior";
    case RegionKind::Annulus: return "annulus";
    case RegionKind::Whole: return "whole";
  }
  return "?";
}

/// Node set with Dirichlet-zero treatment on its complement.
class Region {
 public:
  Region(RegionKind kind, std::vector<char> mask, Index center, double inner, double outer,
         Index cut_edges)
      : kind_(kind), mask_(std::move(mask)), center_(center), inner_(inner), outer_(outer),
        cut_edges_(cut_edges) {
    for (std::size_t i = 0; i < mask_.size(); ++i)
      if (mask_[i]) nodes_.push_back(static_cast<Index>(i));
    if (nodes_.empty()) {
      std::ostringstream os;
      os << "empty " << to_string(kind_) << " region (radii " << inner_ << ", " << outer_ << ")";
      throw InvalidArgument(os.str());
    }
  }

  RegionKind kind() const { return kind_; }
  const std::vector<Index>& nodes() const { return nodes_; }
  Index size() const { return static_cast<Index>(nodes_.size()); }
  bool contains(Index i) const { return mask_[static_cast<std::size_t>(i)] != 0; }
  const std::vector<char>& mask() const { return mask_; }
  Index center() const { return center_; }
  double inner_radius() const { return inner_; }
  double outer_radius() const { return outer_; }
  /// Edges with exactly one endpoint inside; they carry the Dirichlet cut.
  Index cut_edges() const { return cut_edges_; }

  /// Region-restricted vector (entries in node order).
  NodeField restrict_field(const NodeField& u) const {
    NodeField out(size());
    for (Index k = 0; k < size(); ++k) out[k] = u[nodes_[static_cast<std::size_t>(k)]];
    return out;
  }

  /// Zero-extension of a region vector to the full manifold.
  NodeField extend(const NodeField& u_region, Index manifold_size) const {
    NodeField out = NodeField::Zero(manifold_size);
    for (Index k = 0; k < size(); ++k) out[nodes_[static_cast<std::size_t>(k)]] = u_region[k];
    return out;
  }

  bool connected(const DiscreteManifold& m) const {
    std::vector<char> seen(mask_.size(), 0);
    std::vector<Index> stack{nodes_.front()};
    seen[static_cast<std::size_t>(nodes_.front())] = 1;
    Index count = 1;
    while (!stack.empty()) {
      const Index i = stack.back();
      stack.pop_back();
      for (const auto& [j, e] : m.neighbors(i)) {
        const auto sj = static_cast<std::size_t>(j);
        if (mask_[sj] && !seen[sj]) {
          seen[sj] = 1;
          ++count;
          stack.push_back(j);
        }
      }
    }
    return count == size();
  }

 private:
  RegionKind kind_;
  std::vector<char> mask_;
  std::vector<Index> nodes_;
  Index center_;
  double inner_;
  double outer_;
  Index cut_edges_;
};

namespace detail {

inline Index count_cut_edges(const DiscreteManifold& m, const std::vector<char>& mask) {
  Index cut = 0;
  for (const Edge& e : m.edges())
    if (mask[static_cast<std::size_t>(e.i)] != mask[static_cast<std::size_t>(e.j)]) ++cut;
  return cut;
}

inline void require_within_truncation(const DiscreteManifold& m, double r, const char* what) {
  if (!(r >= 0.0) || r > m.truncation_radius() * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << what << " radius " << r << " is outside [0, " << m.truncation_radius() << "]";
    throw InvalidArgument(os.str());
  }
}

}  // namespace detail

/// Ball {i : dist(z, i) <= r}; the center always belongs to its ball.
inline Region make_ball(const DiscreteManifold& m, Index center, double r) {
  detail::require(center >= 0 && center < m.size(), "ball center out of range");
  detail::require_within_truncation(m, r, "ball");
  std::vector<char> mask(static_cast<std::size_t>(m.size()), 0);
  if (center == m.base_point()) {
    const auto& d = m.node_distances();
    for (std::size_t i = 0; i < d.size(); ++i) mask[i] = d[i] <= r;
  } else {
    const auto d = m.distances_from(center, r);
    for (std::size_t i = 0; i < d.size(); ++i) mask[i] = d[i] <= r;
  }
  mask[static_cast<std::size_t>(center)] = 1;
  const Index cut = detail::count_cut_edges(m, mask);
  return {RegionKind::Ball, std::move(mask), center, 0.0, r, cut};
}

inline Region make_ball(const DiscreteManifold& m, double r) {
  return make_ball(m, m.base_point(), r);
}

/// Complement of the ball of radius r around the base point.
inline Region make_exterior(const DiscreteManifold& m, double r) {
  const Region ball = make_ball(m, m.base_point(), r);
  std::vector<char> mask(ball.mask());
  for (char& c : mask) c = !c;
  const Index cut = detail::count_cut_edges(m, mask);
  return {RegionKind::Exterior, std::move(mask), m.base_point(), r, m.truncation_radius(), cut};
}

/// ball(p, r2) minus ball(p, r1), i.e. {i : r1 < dist(p, i) <= r2} without p.
inline Region make_annulus(const DiscreteManifold& m, double r1, double r2) {
  detail::require_within_truncation(m, r1, "annulus inner");
  detail::require_within_truncation(m, r2, "annulus outer");
  std::vector<char> mask(static_cast<std::size_t>(m.size()), 0);
  const auto& d = m.node_distances();
  for (std::size_t i = 0; i < d.size(); ++i) mask[i] = d[i] > r1 && d[i] <= r2;
  mask[static_cast<std::size_t>(m.base_point())] = 0;
  const Index cut = detail::count_cut_edges(m, mask);
  return {RegionKind::Annulus, std::move(mask), m.base_point(), r1, r2, cut};
}

inline Region make_whole(const DiscreteManifold& m) {
  return {RegionKind::Whole, std::vector<char>(static_cast<std::size_t>(m.size()), 1),
          m.base_point(), 0.0, m.truncation_radius(), 0};
}

/// Generic front end: ball uses params {r} or {center, r}, exterior {r},
/// annulus {r1, r2}, whole {}.
inline Region make_region(const DiscreteManifold& m, RegionKind kind, std::span<const double> params) {
  switch (kind) {
    case RegionKind::Ball:
      detail::require(params.size() == 1 || params.size() == 2, "ball takes (r) or (center, r)");
      if (params.size() == 1) return make_ball(m, params[0]);
      return make_ball(m, static_cast<Index>(params[0]), params[1]);
    case RegionKind::Exterior:
      detail::require(params.size() == 1, "exterior takes (r)");
      return make_exterior(m, params[0]);
    case RegionKind::Annulus:
      detail::require(params.size() == 2, "annulus takes (r1, r2)");
      return make_annulus(m, params[0], params[1]);
    case RegionKind::Whole:
      return make_whole(m);
  }
  throw InvalidArgument("unknown region kind");
}

// ---------------------------------------------------------------------------
// Volume growth and cutoffs

/// V_p(R): total weight of the ball of radius R around the base point.
inline double volume_growth(const DiscreteManifold& m, double radius) {
  detail::require(radius >= 0.0, "volume_growth needs R >= 0");
  const auto& d = m.node_distances();
  const auto& w = m.volume_weights();
  double v = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d[i] <= radius || static_cast<Index>(i) == m.base_point()) v += w[i];
  return v;
}

struct GrowthFit {
  double exponent = 0.0;  // k
  double constant = 0.0;  // C
  std::vector<double> radii;
  std::vector<double> volumes;
};

/// Least-squares fit of log V_p(R) = log C + k log R over geometrically
/// spaced radii in [r_min, r_max].
inline GrowthFit fit_growth_exponent(const DiscreteManifold& m, double r_min, double r_max,
                                     int samples = 16) {
  detail::require(samples >= 4, "growth fit needs at least 4 sample radii");
  detail::require(r_min > 0.0 && r_max > r_min, "growth fit needs 0 < R_min < R_max");
  detail::require_within_truncation(m, r_max, "growth fit");
  GrowthFit fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double ratio = std::pow(r_max / r_min, 1.0 / (samples - 1));
  for (int k = 0; k < samples; ++k) {
    const double r = (k == samples - 1) ? r_max : r_min * std::pow(ratio, k);
    const double v = volume_growth(m, r);
    fit.radii.push_back(r);
    fit.volumes.push_back(v);
    const double x = std::log(r), y = std::log(v);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = samples;
  fit.exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.constant = std::exp((sy - fit.exponent * sx) / n);
  return fit;
}

/// 1 on B_R(p), 2 - dist/R on B_2R(p) \ B_R(p), 0 beyond.
inline NodeField linear_cutoff(const DiscreteManifold& m, double radius) {
  detail::require(radius > 0.0, "linear cutoff needs R > 0");
  if (2.0 * radius > m.truncation_radius() * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "linear cutoff support 2R = " << 2.0 * radius << " exceeds the truncation radius "
       << m.truncation_radius();
    throw InvalidArgument(os.str());
  }
  const auto& d = m.node_distances();
  NodeField phi(m.size());
  for (Index i = 0; i < m.size(); ++i) {
    const double r = d[static_cast<std::size_t>(i)];
    phi[i] = r <= radius ? 1.0 : (r <= 2.0 * radius ? 2.0 - r / radius : 0.0);
  }
  return phi;
}

/// 1 for dist <= sqrt(R), 2 - 2 log(dist)/log(R) up to R, 0 beyond.
inline NodeField log_cutoff(const DiscreteManifold& m, double radius) {
  if (!(radius > std::exp(2.0))) {
    std::ostringstream os;
    os << "log cutoff needs R > e^2 (got " << radius << ")";
    throw InvalidArgument(os.str());
  }
  detail::require_within_truncation(m, radius, "log cutoff");
  const double inner = std::sqrt(radius);
  const double log_r = std::log(radius);
  const auto& d = m.node_distances();
  NodeField phi(m.size());
  for (Index i = 0; i < m.size(); ++i) {
    const double r = d[static_cast<std::size_t>(i)];
    phi[i] = r <= inner ? 1.0 : (r <= radius ? 2.0 - 2.0 * std::log(r) / log_r : 0.0);
  }
  return phi;
}

// ---------------------------------------------------------------------------
// CSV dumps

inline void write_nodes_csv(std::ostream& os, const DiscreteManifold& m) {
  os.precision(17);
  os << "node,r_or_id,volume_weight,dist_from_p\n";
  for (Index i = 0; i < m.size(); ++i) {
    const auto s = static_cast<std::size_t>(i);
    os << i << ',' << m.coordinates()[s] << ',' << m.volume_weights()[s] << ','
       << m.node_distances()[s] << '\n';
  }
}

/// Ghost boundary links are written with j = -1.
inline void write_edges_csv(std::ostream& os, const DiscreteManifold& m) {
  os.precision(17);
  os << "i,j,conductance,length\n";
  for (const Edge& e : m.edges())
    os << e.i << ',' << e.j << ',' << e.conductance << ',' << e.length << '\n';
  for (const Ghost& g : m.ghosts())
    os << g.node << ",-1," << g.conductance << ',' << g.length << '\n';
}

}  // namespace lamlab
