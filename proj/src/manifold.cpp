#include "fraclab/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <queue>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace fraclab {

Vec DiscreteManifold::apply_laplacian(const Vec& u) const {
  Vec out = Vec::Zero(n_vertices);
  for (const Edge& e : edges) {
    const double d = u[e.i] - u[e.j];
    out[e.i] += e.conductance * d;
    out[e.j] -= e.conductance * d;
  }
  return out;
}

Vec DiscreteManifold::apply_minus_delta(const Vec& u) const {
  Vec out = apply_laplacian(u);
  out.array() /= mass.array();
  return out;
}

Mat DiscreteManifold::dense_laplacian() const {
  Mat L = Mat::Zero(n_vertices, n_vertices);
  for (const Edge& e : edges) {
    L(e.i, e.j) -= e.conductance;
    L(e.j, e.i) -= e.conductance;
    L(e.i, e.i) += e.conductance;
    L(e.j, e.j) += e.conductance;
  }
  return L;
}

double DiscreteManifold::mass_inner(const Vec& u, const Vec& v) const {
  return (mass.array() * u.array() * v.array()).sum();
}

double DiscreteManifold::mass_norm(const Vec& u) const {
  return std::sqrt(mass_inner(u, u));
}

double DiscreteManifold::total_mass() const { return mass.sum(); }

std::vector<std::vector<std::pair<int, double>>> DiscreteManifold::adjacency()
    const {
  std::vector<std::vector<std::pair<int, double>>> adj(n_vertices);
  for (const Edge& e : edges) {
    adj[e.i].emplace_back(e.j, e.conductance);
    adj[e.j].emplace_back(e.i, e.conductance);
  }
  for (auto& nb : adj) std::sort(nb.begin(), nb.end());
  return adj;
}

namespace {

std::vector<int> bfs_component(const DiscreteManifold& m, int start) {
  std::vector<int> dist(m.n_vertices, -1);
  std::queue<int> q;
  dist[start] = 0;
  q.push(start);
  auto adj = m.adjacency();
  while (!q.empty()) {
    int v = q.front();
    q.pop();
    for (auto [w, c] : adj[v]) {
      if (dist[w] < 0) {
        dist[w] = dist[v] + 1;
        q.push(w);
      }
    }
  }
  std::vector<int> unreachable;
  for (int v = 0; v < m.n_vertices; ++v)
    if (dist[v] < 0) unreachable.push_back(v);
  return unreachable;
}

}  // namespace

void DiscreteManifold::validate() const {
  if (n_vertices < 2) throw std::invalid_argument("manifold: need >= 2 vertices");
  if (mass.size() != n_vertices)
    throw std::invalid_argument("manifold: mass size != n_vertices");
  for (int i = 0; i < n_vertices; ++i)
    if (!(mass[i] > 0.0) || !std::isfinite(mass[i]))
      throw std::invalid_argument("manifold: nonpositive mass at vertex " +
                                  std::to_string(i));
  std::set<std::pair<int, int>> seen;
  for (const Edge& e : edges) {
    if (e.i < 0 || e.j < 0 || e.i >= n_vertices || e.j >= n_vertices ||
        e.i == e.j)
      throw std::invalid_argument("manifold: bad edge (" + std::to_string(e.i) +
                                  "," + std::to_string(e.j) + ")");
    if (!(e.conductance > 0.0) || !(e.length > 0.0))
      throw std::invalid_argument("manifold: nonpositive conductance/length on edge (" +
                                  std::to_string(e.i) + "," + std::to_string(e.j) + ")");
    auto key = std::minmax(e.i, e.j);
    if (!seen.insert(key).second)
      throw std::invalid_argument("manifold: duplicate edge (" +
                                  std::to_string(key.first) + "," +
                                  std::to_string(key.second) + ")");
  }
  auto unreachable = bfs_component(*this, 0);
  if (!unreachable.empty()) {
    std::string msg = "manifold: disconnected, unreachable vertices:";
    for (size_t k = 0; k < unreachable.size() && k < 8; ++k)
      msg += " " + std::to_string(unreachable[k]);
    if (unreachable.size() > 8) msg += " ...";
    throw std::invalid_argument(msg);
  }
}

std::string DiscreteManifold::content_hash() const {
  std::ostringstream os;
  save_manifold(os, *this);
  const std::string s = os.str();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

ObservationSet::ObservationSet(std::vector<int> idx)
    : vertex_indices(std::move(idx)) {
  std::sort(vertex_indices.begin(), vertex_indices.end());
  vertex_indices.erase(
      std::unique(vertex_indices.begin(), vertex_indices.end()),
      vertex_indices.end());
}

bool ObservationSet::contains(int v) const {
  return std::binary_search(vertex_indices.begin(), vertex_indices.end(), v);
}

std::vector<int> ObservationSet::complement(int n_vertices) const {
  std::vector<int> out;
  for (int v = 0; v < n_vertices; ++v)
    if (!contains(v)) out.push_back(v);
  return out;
}

void ObservationSet::validate(const DiscreteManifold& m) const {
  if (vertex_indices.empty())
    throw std::invalid_argument("observation set: empty");
  if (vertex_indices.front() < 0 || vertex_indices.back() >= m.n_vertices)
    throw std::invalid_argument("observation set: index out of range");
  if (static_cast<int>(vertex_indices.size()) >= m.n_vertices)
    throw std::invalid_argument("observation set: complement empty");
}

// ---- builders -------------------------------------------------------------

DiscreteManifold build_flat_torus(const std::vector<int>& side_lengths,
                                  double conductance) {
  if (side_lengths.size() < 2)
    throw std::invalid_argument("flat torus: need at least two side lengths");
  for (int s : side_lengths)
    if (s < 3)
      throw std::invalid_argument("flat torus: side length " +
                                  std::to_string(s) + " < 3 (degenerate cycle)");
  if (!(conductance > 0.0))
    throw std::invalid_argument("flat torus: conductance must be positive");

  const int dims = static_cast<int>(side_lengths.size());
  int n = 1;
  for (int s : side_lengths) n *= s;

  // index -> multi-index with the first axis fastest
  std::vector<int> stride(dims, 1);
  for (int d = 1; d < dims; ++d) stride[d] = stride[d - 1] * side_lengths[d - 1];

  DiscreteManifold m;
  m.n_vertices = n;
  m.dimension_hint = dims;
  m.mass = Vec::Ones(n);
  for (int v = 0; v < n; ++v) {
    for (int d = 0; d < dims; ++d) {
      const int coord = (v / stride[d]) % side_lengths[d];
      const int next = (coord + 1) % side_lengths[d];
      const int w = v + (next - coord) * stride[d];
      if (v < w)
        m.edges.push_back({v, w, conductance, 1.0});
      else
        m.edges.push_back({w, v, conductance, 1.0});
    }
  }
  std::sort(m.edges.begin(), m.edges.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.i, a.j) < std::tie(b.i, b.j);
  });
  m.validate();
  return m;
}

DiscreteManifold build_cycle(int n, double conductance) {
  if (n < 3) throw std::invalid_argument("cycle: need n >= 3");
  DiscreteManifold m;
  m.n_vertices = n;
  m.dimension_hint = 1;
  m.mass = Vec::Ones(n);
  for (int v = 0; v < n; ++v) {
    int w = (v + 1) % n;
    m.edges.push_back({std::min(v, w), std::max(v, w), conductance, 1.0});
  }
  std::sort(m.edges.begin(), m.edges.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.i, a.j) < std::tie(b.i, b.j);
  });
  m.validate();
  return m;
}

DiscreteManifold build_twin_limb(int ring_size, int limb_size,
                                 double conductance) {
  if (ring_size < 4 || ring_size % 2 != 0)
    throw std::invalid_argument("twin limb: ring size must be even and >= 4");
  if (limb_size < 1) throw std::invalid_argument("twin limb: limb size >= 1");
  DiscreteManifold m;
  m.n_vertices = ring_size + 2 * limb_size;
  m.dimension_hint = 2;
  m.mass = Vec::Ones(m.n_vertices);
  auto add = [&m, conductance](int a, int b) {
    m.edges.push_back({std::min(a, b), std::max(a, b), conductance, 1.0});
  };
  for (int v = 0; v < ring_size; ++v) add(v, (v + 1) % ring_size);
  const int half = ring_size / 2;
  for (int limb = 0; limb < 2; ++limb) {
    const int base = ring_size + limb * limb_size;
    add(0, base);
    for (int k = 0; k + 1 < limb_size; ++k) add(base + k, base + k + 1);
    add(base + limb_size - 1, half);
  }
  std::sort(m.edges.begin(), m.edges.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.i, a.j) < std::tie(b.i, b.j);
  });
  m.validate();
  return m;
}

DiscreteManifold perturb_metric(const DiscreteManifold& m, std::uint64_t seed,
                                double amplitude) {
  if (!(amplitude >= 0.0 && amplitude < 1.0))
    throw std::invalid_argument("perturb_metric: amplitude must be in [0,1)");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Vec raw(m.n_vertices);
  for (int v = 0; v < m.n_vertices; ++v) raw[v] = unif(rng);
  // one neighbor-averaging sweep to make the field smooth on the graph
  auto adj = m.adjacency();
  Vec field(m.n_vertices);
  for (int v = 0; v < m.n_vertices; ++v) {
    double acc = raw[v];
    for (auto [w, c] : adj[v]) acc += raw[w];
    field[v] = acc / (1.0 + static_cast<double>(adj[v].size()));
  }
  DiscreteManifold out = m;
  for (int v = 0; v < m.n_vertices; ++v)
    out.mass[v] = m.mass[v] * (1.0 + amplitude * field[v]);
  for (Edge& e : out.edges) {
    const double s = 0.5 * (field[e.i] + field[e.j]);
    e.conductance *= (1.0 + amplitude * s);
  }
  out.validate();
  return out;
}

// ---- metric structure ------------------------------------------------------

namespace {

Vec dijkstra(const DiscreteManifold& m,
             const std::vector<std::vector<std::pair<int, double>>>& adj,
             int src, const std::vector<std::vector<double>>& lengths) {
  const double inf = std::numeric_limits<double>::infinity();
  Vec dist = Vec::Constant(m.n_vertices, inf);
  dist[src] = 0.0;
  // (distance, vertex); smaller vertex index wins ties for determinism
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
  pq.push({0.0, src});
  while (!pq.empty()) {
    auto [d, v] = pq.top();
    pq.pop();
    if (d > dist[v]) continue;
    for (size_t k = 0; k < adj[v].size(); ++k) {
      const int w = adj[v][k].first;
      const double nd = d + lengths[v][k];
      if (nd < dist[w]) {
        dist[w] = nd;
        pq.push({nd, w});
      }
    }
  }
  return dist;
}

}  // namespace

Mat distance_matrix(const DiscreteManifold& m) {
  auto adj = m.adjacency();
  // per-vertex edge lengths aligned with adjacency order
  std::vector<std::vector<double>> lengths(m.n_vertices);
  {
    std::vector<std::vector<std::pair<int, double>>> len_adj(m.n_vertices);
    for (const Edge& e : m.edges) {
      len_adj[e.i].emplace_back(e.j, e.length);
      len_adj[e.j].emplace_back(e.i, e.length);
    }
    for (int v = 0; v < m.n_vertices; ++v) {
      std::sort(len_adj[v].begin(), len_adj[v].end());
      lengths[v].reserve(len_adj[v].size());
      for (size_t k = 0; k < len_adj[v].size(); ++k) {
        // adjacency() sorts by (vertex, conductance); realign by vertex
        lengths[v].push_back(len_adj[v][k].second);
        if (len_adj[v][k].first != adj[v][k].first)
          throw std::logic_error("distance_matrix: adjacency misalignment");
      }
    }
  }
  Mat D(m.n_vertices, m.n_vertices);
  for (int src = 0; src < m.n_vertices; ++src) {
    Vec d = dijkstra(m, adj, src, lengths);
    for (int v = 0; v < m.n_vertices; ++v) {
      if (!std::isfinite(d[v]))
        throw std::runtime_error("distance_matrix: vertex " +
                                 std::to_string(v) + " unreachable from " +
                                 std::to_string(src));
      D(src, v) = d[v];
    }
  }
  return D;
}

std::vector<int> antipodal_set(const Mat& dist, int p, double tie_tolerance) {
  if (p < 0 || p >= dist.rows())
    throw std::invalid_argument("antipodal_set: vertex out of range");
  if (tie_tolerance < 0.0)
    throw std::invalid_argument("antipodal_set: negative tolerance");
  const double dmax = dist.row(p).maxCoeff();
  std::vector<int> out;
  for (int q = 0; q < dist.cols(); ++q)
    if (dist(p, q) >= dmax - tie_tolerance) out.push_back(q);
  return out;
}

std::vector<int> antipodal_set(const DiscreteManifold& m, int p,
                               double tie_tolerance) {
  return antipodal_set(distance_matrix(m), p, tie_tolerance);
}

std::vector<int> enlarge(const DiscreteManifold& m, const std::vector<int>& S,
                         int hops) {
  if (hops < 0) throw std::invalid_argument("enlarge: negative hops");
  std::vector<int> level(m.n_vertices, -1);
  std::queue<int> q;
  for (int v : S) {
    if (v < 0 || v >= m.n_vertices)
      throw std::invalid_argument("enlarge: vertex out of range");
    if (level[v] < 0) {
      level[v] = 0;
      q.push(v);
    }
  }
  auto adj = m.adjacency();
  while (!q.empty()) {
    int v = q.front();
    q.pop();
    if (level[v] == hops) continue;
    for (auto [w, c] : adj[v]) {
      if (level[w] < 0) {
        level[w] = level[v] + 1;
        q.push(w);
      }
    }
  }
  std::vector<int> out;
  for (int v = 0; v < m.n_vertices; ++v)
    if (level[v] >= 0) out.push_back(v);
  return out;
}

ObservationSet ball(const DiscreteManifold& m, int center, double radius) {
  Mat D = distance_matrix(m);
  std::vector<int> idx;
  for (int v = 0; v < m.n_vertices; ++v)
    if (D(center, v) <= radius) idx.push_back(v);
  return ObservationSet(idx);
}

std::string automorphism_violation(const DiscreteManifold& m,
                                   const std::vector<int>& perm) {
  if (static_cast<int>(perm.size()) != m.n_vertices)
    return "permutation size != n_vertices";
  std::vector<int> seen(m.n_vertices, 0);
  for (int v : perm) {
    if (v < 0 || v >= m.n_vertices) return "permutation image out of range";
    if (seen[v]++) return "not a bijection (repeated image " + std::to_string(v) + ")";
  }
  for (int v = 0; v < m.n_vertices; ++v) {
    if (std::abs(m.mass[perm[v]] - m.mass[v]) > 0.0)
      return "mass mismatch at vertex " + std::to_string(v);
  }
  std::set<std::tuple<int, int>> edge_set;
  std::vector<std::tuple<int, int, double, double>> edge_data;
  for (const Edge& e : m.edges) edge_set.insert({e.i, e.j});
  auto find_edge = [&m](int a, int b) -> const Edge* {
    if (a > b) std::swap(a, b);
    for (const Edge& e : m.edges)
      if (e.i == a && e.j == b) return &e;
    return nullptr;
  };
  for (const Edge& e : m.edges) {
    const Edge* img = find_edge(perm[e.i], perm[e.j]);
    if (img == nullptr)
      return "edge (" + std::to_string(e.i) + "," + std::to_string(e.j) +
             ") maps to a non-edge";
    if (std::abs(img->conductance - e.conductance) > 0.0 ||
        std::abs(img->length - e.length) > 0.0)
      return "edge weight mismatch on (" + std::to_string(e.i) + "," +
             std::to_string(e.j) + ")";
  }
  return "";
}

// ---- serialization ---------------------------------------------------------

void save_manifold(std::ostream& os, const DiscreteManifold& m) {
  char buf[64];
  os << "vertices " << m.n_vertices << " dim " << m.dimension_hint << "\n";
  for (int v = 0; v < m.n_vertices; ++v) {
    std::snprintf(buf, sizeof(buf), "%.17g", m.mass[v]);
    os << "mass " << v << " " << buf << "\n";
  }
  for (const Edge& e : m.edges) {
    std::snprintf(buf, sizeof(buf), "%.17g", e.conductance);
    os << "edge " << e.i << " " << e.j << " " << buf;
    if (e.length != 1.0) {
      std::snprintf(buf, sizeof(buf), "%.17g", e.length);
      os << " " << buf;
    }
    os << "\n";
  }
}

DiscreteManifold load_manifold(std::istream& is) {
  DiscreteManifold m;
  std::string line;
  bool header = false;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag.empty() || tag[0] == '#') continue;
    if (tag == "vertices") {
      std::string dimword;
      if (!(ls >> m.n_vertices >> dimword >> m.dimension_hint) ||
          dimword != "dim")
        throw std::runtime_error("manifold load: bad header at line " +
                                 std::to_string(line_no));
      m.mass = Vec::Ones(m.n_vertices);
      header = true;
    } else if (tag == "mass") {
      int v;
      double w;
      if (!header || !(ls >> v >> w) || v < 0 || v >= m.n_vertices)
        throw std::runtime_error("manifold load: bad mass line " +
                                 std::to_string(line_no));
      m.mass[v] = w;
    } else if (tag == "edge") {
      Edge e;
      if (!header || !(ls >> e.i >> e.j >> e.conductance))
        throw std::runtime_error("manifold load: bad edge line " +
                                 std::to_string(line_no));
      if (!(ls >> e.length)) e.length = 1.0;
      if (e.i > e.j) std::swap(e.i, e.j);
      m.edges.push_back(e);
    } else {
      throw std::runtime_error("manifold load: unknown tag '" + tag +
                               "' at line " + std::to_string(line_no));
    }
  }
  if (!header) throw std::runtime_error("manifold load: missing header");
  m.validate();
  return m;
}

std::string format_index_list(const std::vector<int>& idx) {
  std::string out;
  for (size_t k = 0; k < idx.size(); ++k) {
    if (k) out += " ";
    out += std::to_string(idx[k]);
  }
  return out;
}

std::vector<int> parse_index_list(const std::string& text) {
  std::istringstream is(text);
  std::vector<int> out;
  int v;
  while (is >> v) out.push_back(v);
  return out;
}

}  // namespace fraclab
