#include "qc/network.hpp"

#include "qc/quadrature.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace qc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::vector<std::pair<int, int>>> adjacency(const Graph& g) {
  // node -> list of (edge index, other endpoint)
  std::vector<std::vector<std::pair<int, int>>> adj(g.num_nodes);
  for (int e = 0; e < static_cast<int>(g.edges.size()); ++e) {
    adj[g.edges[e].u].emplace_back(e, g.edges[e].v);
    adj[g.edges[e].v].emplace_back(e, g.edges[e].u);
  }
  return adj;
}

void check_node_set(const Graph& g, const std::vector<int>& s,
                    const char* name) {
  if (s.empty())
    throw std::invalid_argument(std::string(name) + " set is empty");
  for (int v : s)
    if (v < 0 || v >= g.num_nodes)
      throw std::invalid_argument(std::string(name) + " set: node out of range");
}

void check_disjoint(const std::vector<int>& a, const std::vector<int>& b) {
  for (int x : a)
    for (int y : b)
      if (x == y)
        throw std::invalid_argument("boundary sets E and F must be disjoint");
}

}  // namespace

void Graph::validate() const {
  if (num_nodes <= 0) throw std::invalid_argument("graph: no nodes");
  for (const Edge& e : edges) {
    if (e.u < 0 || e.u >= num_nodes || e.v < 0 || e.v >= num_nodes)
      throw std::invalid_argument("graph: edge endpoint out of range");
    if (e.u == e.v) throw std::invalid_argument("graph: self loop");
    if (!(e.len > 0.0) || !(e.mass > 0.0) || !(e.area > 0.0) ||
        !std::isfinite(e.len) || !std::isfinite(e.mass) || !std::isfinite(e.area))
      throw std::invalid_argument("graph: weights must be positive finite");
  }
  if (pos_dim > 0 &&
      pos.size() != static_cast<std::size_t>(num_nodes) * pos_dim)
    throw std::invalid_argument("graph: position array size mismatch");
}

bool Graph::connects(const std::vector<int>& from, const std::vector<int>& to,
                     const std::vector<char>& edge_removed) const {
  std::vector<char> seen(num_nodes, 0);
  std::queue<int> q;
  for (int v : from) {
    seen[v] = 1;
    q.push(v);
  }
  std::vector<char> target(num_nodes, 0);
  for (int v : to) target[v] = 1;
  const auto adj = adjacency(*this);
  while (!q.empty()) {
    const int v = q.front();
    q.pop();
    if (target[v]) return true;
    for (const auto& [e, w] : adj[v]) {
      if (!edge_removed.empty() && edge_removed[e]) continue;
      if (!seen[w]) {
        seen[w] = 1;
        q.push(w);
      }
    }
  }
  return false;
}

bool Graph::connected() const {
  if (num_nodes == 0) return false;
  std::vector<int> all(num_nodes);
  for (int i = 0; i < num_nodes; ++i) all[i] = i;
  std::vector<char> seen(num_nodes, 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  int count = 1;
  const auto adj = adjacency(*this);
  while (!q.empty()) {
    const int v = q.front();
    q.pop();
    for (const auto& [e, w] : adj[v])
      if (!seen[w]) {
        seen[w] = 1;
        ++count;
        q.push(w);
      }
  }
  return count == num_nodes;
}

Graph read_edge_list(std::istream& in) {
  Graph g;
  std::string line;
  int max_node = -1;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag.empty() || tag[0] == '#') continue;
    if (tag == "node") {
      int id;
      if (!(ls >> id)) throw std::invalid_argument("edge list: bad node line");
      std::vector<double> coords;
      double c;
      while (ls >> c) coords.push_back(c);
      if (g.pos_dim == 0 && !coords.empty() && g.num_nodes == 0)
        g.pos_dim = static_cast<int>(coords.size());
      max_node = std::max(max_node, id);
      if (g.pos_dim > 0) {
        if (static_cast<int>(coords.size()) != g.pos_dim)
          throw std::invalid_argument("edge list: inconsistent coordinates");
        const std::size_t need = static_cast<std::size_t>(max_node + 1) * g.pos_dim;
        if (g.pos.size() < need) g.pos.resize(need, 0.0);
        for (int i = 0; i < g.pos_dim; ++i)
          g.pos[static_cast<std::size_t>(id) * g.pos_dim + i] = coords[i];
      }
      g.num_nodes = std::max(g.num_nodes, max_node + 1);
    } else if (tag == "edge") {
      Edge e;
      if (!(ls >> e.u >> e.v >> e.len >> e.mass >> e.area))
        throw std::invalid_argument("edge list: bad edge line");
      max_node = std::max({max_node, e.u, e.v});
      g.num_nodes = std::max(g.num_nodes, max_node + 1);
      g.edges.push_back(e);
    } else {
      throw std::invalid_argument("edge list: unknown line tag '" + tag + "'");
    }
  }
  if (g.pos_dim > 0)
    g.pos.resize(static_cast<std::size_t>(g.num_nodes) * g.pos_dim, 0.0);
  g.validate();
  return g;
}

void write_edge_list(const Graph& g, std::ostream& out) {
  out.precision(17);
  out << "# nodes " << g.num_nodes << ", edges " << g.edges.size() << "\n";
  for (int v = 0; v < g.num_nodes; ++v) {
    out << "node " << v;
    for (int i = 0; i < g.pos_dim; ++i)
      out << ' ' << g.pos[static_cast<std::size_t>(v) * g.pos_dim + i];
    out << '\n';
  }
  for (const Edge& e : g.edges)
    out << "edge " << e.u << ' ' << e.v << ' ' << e.len << ' ' << e.mass
        << ' ' << e.area << '\n';
}

// ---------------------------------------------------------------------------
// Path enumeration: best-first over simple paths, ordered by len then by the
// edge sequence, so the output is deterministic.

PathFamily enumerate_paths(const Graph& g, const std::vector<int>& E,
                           const std::vector<int>& F, const PathLimits& lim) {
  g.validate();
  check_node_set(g, E, "E");
  check_node_set(g, F, "F");
  check_disjoint(E, F);

  PathFamily fam;
  if (!g.connects(E, F)) {
    fam.empty_due_to_disconnect = true;
    return fam;
  }
  const auto adj = adjacency(g);
  std::vector<char> in_f(g.num_nodes, 0);
  for (int v : F) in_f[v] = 1;

  struct Partial {
    double len;
    int node;
    std::vector<int> edges;
    std::vector<char> visited;
    bool operator>(const Partial& o) const {
      if (len != o.len) return len > o.len;
      return edges > o.edges;
    }
  };
  std::priority_queue<Partial, std::vector<Partial>, std::greater<Partial>> pq;
  for (int v : E) {
    Partial p{0.0, v, {}, std::vector<char>(g.num_nodes, 0)};
    p.visited[v] = 1;
    pq.push(std::move(p));
  }
  while (!pq.empty()) {
    Partial p = pq.top();
    pq.pop();
    if (in_f[p.node]) {
      fam.paths.push_back(p.edges);
      if (static_cast<int>(fam.paths.size()) >= lim.max_paths) {
        fam.truncated = !pq.empty();
        return fam;
      }
      continue;
    }
    if (static_cast<int>(p.edges.size()) >= lim.max_length) {
      fam.truncated = true;
      continue;
    }
    for (const auto& [e, w] : adj[p.node]) {
      if (p.visited[w]) continue;
      Partial q = p;
      q.len += g.edges[e].len;
      q.node = w;
      q.edges.push_back(e);
      q.visited[w] = 1;
      pq.push(std::move(q));
    }
  }
  return fam;
}

// ---------------------------------------------------------------------------
// Minimal-cut enumeration over node bipartitions.

CutFamily enumerate_min_cuts(const Graph& g, const std::vector<int>& E,
                             const std::vector<int>& F, int max_interior) {
  g.validate();
  check_node_set(g, E, "E");
  check_node_set(g, F, "F");
  check_disjoint(E, F);

  std::vector<int> interior;
  std::vector<char> in_e(g.num_nodes, 0), in_f(g.num_nodes, 0);
  for (int v : E) in_e[v] = 1;
  for (int v : F) in_f[v] = 1;
  for (int v = 0; v < g.num_nodes; ++v)
    if (!in_e[v] && !in_f[v]) interior.push_back(v);
  if (static_cast<int>(interior.size()) > max_interior)
    throw std::runtime_error(
        "cut enumeration: interior too large (" +
        std::to_string(interior.size()) +
        " nodes); use the capacity-duality route instead");

  std::vector<std::vector<int>> cuts;
  const std::size_t subsets = std::size_t{1} << interior.size();
  for (std::size_t mask = 0; mask < subsets; ++mask) {
    std::vector<char> side(g.num_nodes, 0);  // 1 = source side
    for (int v = 0; v < g.num_nodes; ++v) side[v] = in_e[v];
    for (std::size_t i = 0; i < interior.size(); ++i)
      if ((mask >> i) & 1u) side[interior[i]] = 1;
    std::vector<int> cut;
    for (int e = 0; e < static_cast<int>(g.edges.size()); ++e)
      if (side[g.edges[e].u] != side[g.edges[e].v]) cut.push_back(e);
    cuts.push_back(std::move(cut));
  }

  // keep inclusion-minimal, deduplicated
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::vector<char> keep(cuts.size(), 1);
  for (std::size_t i = 0; i < cuts.size(); ++i) {
    for (std::size_t j = 0; j < cuts.size() && keep[i]; ++j) {
      if (i == j || !keep[j]) continue;
      if (cuts[j].size() >= cuts[i].size()) continue;
      if (std::includes(cuts[i].begin(), cuts[i].end(), cuts[j].begin(),
                        cuts[j].end()))
        keep[i] = 0;
    }
  }
  CutFamily fam;
  for (std::size_t i = 0; i < cuts.size(); ++i)
    if (keep[i] && !cuts[i].empty()) fam.cuts.push_back(std::move(cuts[i]));
  return fam;
}

// ---------------------------------------------------------------------------
// Density problem: min sum mass_e rho_e^p  s.t.  sum coef_{je} rho_e >= 1.
// Solved through the concave dual
//   g(mu) = sum mu_j - (p-1) sum_e mass_e rho_e(mu)^p,
//   rho_e(mu) = (y_e / (p mass_e))^{1/(p-1)},  y = A^T mu,
// with projected damped Newton steps on mu >= 0. The gradient of g is the
// constraint slack 1 - A rho(mu), so primal feasibility and dual
// stationarity coincide at the optimum; the certified gap between the
// rescaled-feasible primal value and g(mu) drives termination.

namespace {

struct ConstraintMatrix {
  // rows of (edge, coef)
  std::vector<std::vector<std::pair<int, double>>> rows;
  int num_edges = 0;
};

struct DensityResult {
  double value = 0.0;
  std::vector<double> rho;
  int iterations = 0;
  double gap = 0.0;
  double max_violation = 0.0;
};

DensityResult solve_density(const Graph& g, const ConstraintMatrix& A,
                            double p, const SolverOptions& opt) {
  if (!(p > 1.0)) throw std::invalid_argument("density solve: p must be > 1");
  const int m = static_cast<int>(A.rows.size());
  const int ne = A.num_edges;
  const double pexp = 1.0 / (p - 1.0);

  Eigen::VectorXd mu = Eigen::VectorXd::Ones(m);
  Eigen::VectorXd y(ne), rho(ne);

  const auto eval = [&](const Eigen::VectorXd& mu_in, Eigen::VectorXd& y_out,
                        Eigen::VectorXd& rho_out) {
    y_out.setZero(ne);
    for (int j = 0; j < m; ++j)
      for (const auto& [e, c] : A.rows[j]) y_out[e] += mu_in[j] * c;
    double gval = mu_in.sum();
    for (int e = 0; e < ne; ++e) {
      const double me = g.edges[e].mass;
      rho_out[e] = y_out[e] > 0.0 ? std::pow(y_out[e] / (p * me), pexp) : 0.0;
      gval -= (p - 1.0) * me * std::pow(rho_out[e], p);
    }
    return gval;
  };

  double gval = eval(mu, y, rho);
  double lambda = 1e-10;
  int iter = 0;
  DensityResult out;

  const auto primal_from = [&](const Eigen::VectorXd& rho_in,
                               double& feas_value,
                               Eigen::VectorXd& rho_feas) -> bool {
    double min_row = kInf;
    for (int j = 0; j < m; ++j) {
      double s = 0.0;
      for (const auto& [e, c] : A.rows[j]) s += c * rho_in[e];
      min_row = std::min(min_row, s);
    }
    if (!(min_row > 0.0)) return false;
    rho_feas = rho_in / min_row;
    feas_value = 0.0;
    for (int e = 0; e < ne; ++e)
      feas_value += g.edges[e].mass * std::pow(rho_feas[e], p);
    return true;
  };

  for (; iter < opt.max_iterations; ++iter) {
    // gradient = slack
    Eigen::VectorXd grad(m);
    for (int j = 0; j < m; ++j) {
      double s = 0.0;
      for (const auto& [e, c] : A.rows[j]) s += c * rho[e];
      grad[j] = 1.0 - s;
    }

    double fval;
    Eigen::VectorXd rho_feas;
    if (primal_from(rho, fval, rho_feas)) {
      const double gap = fval - gval;
      if (gap <= opt.tol * std::max(1.0, std::abs(fval))) {
        out.value = fval;
        out.rho.assign(rho_feas.data(), rho_feas.data() + ne);
        out.gap = gap;
        break;
      }
    }

    // free set: active bound constraints with inward gradient stay fixed
    std::vector<int> free;
    for (int j = 0; j < m; ++j)
      if (mu[j] > 1e-14 || grad[j] > 0.0) free.push_back(j);
    if (free.empty()) {
      out.value = 0.0;
      out.rho.assign(ne, 0.0);
      break;
    }

    // curvature d rho / d y
    Eigen::VectorXd D(ne);
    for (int e = 0; e < ne; ++e) {
      if (y[e] > 0.0) {
        D[e] = rho[e] / ((p - 1.0) * y[e]);
      } else {
        const double me = g.edges[e].mass;
        D[e] = p < 2.0 ? 0.0 : (p == 2.0 ? 1.0 / (2.0 * me) : 1e12);
      }
    }

    const int nf = static_cast<int>(free.size());
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(nf, nf);
    for (int a = 0; a < nf; ++a)
      for (int b = a; b < nf; ++b) {
        double s = 0.0;
        // sparse row intersection; rows are short at desk scale
        const auto& ra = A.rows[free[a]];
        const auto& rb = A.rows[free[b]];
        std::size_t ia = 0, ib = 0;
        while (ia < ra.size() && ib < rb.size()) {
          if (ra[ia].first == rb[ib].first) {
            s += ra[ia].second * rb[ib].second * D[ra[ia].first];
            ++ia;
            ++ib;
          } else if (ra[ia].first < rb[ib].first) {
            ++ia;
          } else {
            ++ib;
          }
        }
        H(a, b) = H(b, a) = s;
      }

    bool stepped = false;
    for (int attempt = 0; attempt < 40 && !stepped; ++attempt) {
      Eigen::MatrixXd Hl = H;
      for (int a = 0; a < nf; ++a) Hl(a, a) += lambda * (1.0 + H(a, a));
      Eigen::LLT<Eigen::MatrixXd> llt(Hl);
      if (llt.info() != Eigen::Success) {
        lambda *= 10.0;
        continue;
      }
      Eigen::VectorXd gf(nf);
      for (int a = 0; a < nf; ++a) gf[a] = grad[free[a]];
      const Eigen::VectorXd dir = llt.solve(gf);

      double t = 1.0;
      for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
        Eigen::VectorXd mu_try = mu;
        for (int a = 0; a < nf; ++a)
          mu_try[free[a]] = std::max(0.0, mu[free[a]] + t * dir[a]);
        Eigen::VectorXd y_try(ne), rho_try(ne);
        const double g_try = eval(mu_try, y_try, rho_try);
        if (g_try > gval) {
          mu = std::move(mu_try);
          y = std::move(y_try);
          rho = std::move(rho_try);
          gval = g_try;
          stepped = true;
          lambda = std::max(lambda * 0.3, 1e-12);
          break;
        }
      }
      if (!stepped) lambda *= 10.0;
    }
    if (!stepped) {
      // stalled: accept the best certified value we have
      double fval2;
      Eigen::VectorXd rho_feas2;
      if (primal_from(rho, fval2, rho_feas2)) {
        out.value = fval2;
        out.rho.assign(rho_feas2.data(), rho_feas2.data() + ne);
        out.gap = fval2 - gval;
      }
      break;
    }
  }
  if (out.rho.empty()) {
    double fval;
    Eigen::VectorXd rho_feas;
    if (primal_from(rho, fval, rho_feas)) {
      out.value = fval;
      out.rho.assign(rho_feas.data(), rho_feas.data() + ne);
      out.gap = fval - gval;
    } else {
      throw std::runtime_error("density solve: no feasible density reached");
    }
  }
  out.iterations = iter;
  // report the residual feasibility of the returned density
  double min_row = kInf;
  for (int j = 0; j < m; ++j) {
    double s = 0.0;
    for (const auto& [e, c] : A.rows[j]) s += c * out.rho[e];
    min_row = std::min(min_row, s);
  }
  out.max_violation = std::max(0.0, 1.0 - min_row);
  return out;
}

ModulusSolution wrap_density(const Graph& g, const ConstraintMatrix& A,
                             double p, const SolverOptions& opt) {
  DensityResult r = solve_density(g, A, p, opt);
  ModulusSolution s;
  s.value = r.value;
  s.rho = std::move(r.rho);
  s.p = p;
  s.iterations = r.iterations;
  s.gap = r.gap;
  s.max_violation = r.max_violation;
  return s;
}

}  // namespace

ModulusSolution modulus_for_paths(const Graph& g,
                                  const std::vector<std::vector<int>>& paths,
                                  double p, const SolverOptions& opt) {
  g.validate();
  if (!(p > 1.0))
    throw std::invalid_argument("modulus: p must be > 1 (the p = 1 case is a different problem)");
  if (paths.empty()) {
    ModulusSolution s;
    s.infinite = true;
    s.p = p;
    s.note = "empty curve family: modulus reported infinite by convention";
    return s;
  }
  ConstraintMatrix A;
  A.num_edges = static_cast<int>(g.edges.size());
  for (const auto& path : paths) {
    std::vector<std::pair<int, double>> row;
    for (int e : path) {
      if (e < 0 || e >= A.num_edges)
        throw std::invalid_argument("modulus: path edge index out of range");
      row.emplace_back(e, g.edges[e].len);
    }
    std::sort(row.begin(), row.end());
    // repeated edges within a path are a family invariant violation
    for (std::size_t i = 1; i < row.size(); ++i)
      if (row[i].first == row[i - 1].first)
        throw std::invalid_argument("modulus: path repeats an edge");
    A.rows.push_back(std::move(row));
  }
  return wrap_density(g, A, p, opt);
}

namespace {

// Deterministic Dijkstra from the E set; returns the shortest rho-weighted
// path to any F node as edge indices, or empty when unreachable.
std::vector<int> shortest_path(const Graph& g, const std::vector<int>& E,
                               const std::vector<int>& F,
                               const std::vector<double>& edge_weight,
                               double* dist_out) {
  const auto adj = adjacency(g);
  std::vector<double> dist(g.num_nodes, kInf);
  std::vector<int> parent_edge(g.num_nodes, -1), parent_node(g.num_nodes, -1);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
  for (int v : E) {
    dist[v] = 0.0;
    pq.emplace(0.0, v);
  }
  std::vector<char> settled(g.num_nodes, 0);
  while (!pq.empty()) {
    const auto [d, v] = pq.top();
    pq.pop();
    if (settled[v]) continue;
    settled[v] = 1;
    for (const auto& [e, w] : adj[v]) {
      if (settled[w]) continue;
      const double nd = d + edge_weight[e];
      // ties broken toward the smaller edge index for determinism
      if (nd < dist[w] || (nd == dist[w] && e < parent_edge[w])) {
        dist[w] = nd;
        parent_edge[w] = e;
        parent_node[w] = v;
        pq.emplace(nd, w);
      }
    }
  }
  int best = -1;
  for (int v : F)
    if (dist[v] < (best < 0 ? kInf : dist[best]) ||
        (best >= 0 && dist[v] == dist[best] && v < best))
      best = v;
  if (best < 0 || !std::isfinite(dist[best])) return {};
  if (dist_out) *dist_out = dist[best];
  std::vector<int> path;
  int v = best;
  while (parent_edge[v] >= 0) {
    path.push_back(parent_edge[v]);
    v = parent_node[v];
  }
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace

ModulusSolution modulus_connecting(const Graph& g, const std::vector<int>& E,
                                   const std::vector<int>& F, double p,
                                   const SolverOptions& opt) {
  g.validate();
  check_node_set(g, E, "E");
  check_node_set(g, F, "F");
  check_disjoint(E, F);
  if (!g.connects(E, F)) {
    ModulusSolution s;
    s.infinite = true;
    s.p = p;
    s.note = "E and F are disconnected: empty family, modulus infinite by convention";
    return s;
  }

  // seed with the len-shortest path
  std::vector<double> len_w(g.edges.size());
  for (std::size_t e = 0; e < g.edges.size(); ++e) len_w[e] = g.edges[e].len;
  std::vector<std::vector<int>> active;
  active.push_back(shortest_path(g, E, F, len_w, nullptr));

  ModulusSolution sol;
  int total_iters = 0;
  for (int round = 0; round < 10000; ++round) {
    sol = modulus_for_paths(g, active, p, opt);
    total_iters += sol.iterations;
    // separation oracle: shortest path under rho-weighted length
    std::vector<double> w(g.edges.size());
    for (std::size_t e = 0; e < g.edges.size(); ++e)
      w[e] = g.edges[e].len * sol.rho[e];
    double d = kInf;
    std::vector<int> path = shortest_path(g, E, F, w, &d);
    if (path.empty() || d >= 1.0 - 1e-9) break;
    std::sort(path.begin(), path.end());
    if (std::find(active.begin(), active.end(), path) != active.end()) break;
    active.push_back(std::move(path));
  }
  sol.iterations = total_iters;
  sol.note = "constraint generation: " + std::to_string(active.size()) +
             " active paths";
  return sol;
}

ModulusSolution modulus_for_cuts(const Graph& g,
                                 const std::vector<std::vector<int>>& cuts,
                                 double p_prime, const SolverOptions& opt) {
  g.validate();
  if (cuts.empty()) {
    ModulusSolution s;
    s.infinite = true;
    s.p = p_prime;
    s.note = "empty cut family: modulus reported infinite by convention";
    return s;
  }
  ConstraintMatrix A;
  A.num_edges = static_cast<int>(g.edges.size());
  for (const auto& cut : cuts) {
    std::vector<std::pair<int, double>> row;
    for (int e : cut) row.emplace_back(e, g.edges[e].area);
    std::sort(row.begin(), row.end());
    A.rows.push_back(std::move(row));
  }
  return wrap_density(g, A, p_prime, opt);
}

ModulusSolution separating_modulus(const Graph& g, const std::vector<int>& E,
                                   const std::vector<int>& F, double p_prime,
                                   const SolverOptions& opt) {
  const CutFamily fam = enumerate_min_cuts(g, E, F);
  ModulusSolution s = modulus_for_cuts(g, fam.cuts, p_prime, opt);
  // validate the family invariant: each cut separates E from F
  for (const auto& cut : fam.cuts) {
    std::vector<char> removed(g.edges.size(), 0);
    for (int e : cut) removed[e] = 1;
    if (g.connects(E, F, removed))
      throw std::logic_error("separating modulus: enumerated set is not a cut");
  }
  s.note += (s.note.empty() ? "" : "; ") + std::to_string(fam.cuts.size()) +
            " minimal cuts";
  return s;
}

// ---------------------------------------------------------------------------
// Capacity: damped Newton on the epsilon-regularized p-energy.

CapacitySolution capacity(const Graph& g, const std::vector<int>& E,
                          const std::vector<int>& F, double p,
                          const SolverOptions& opt) {
  g.validate();
  check_node_set(g, E, "E");
  check_node_set(g, F, "F");
  check_disjoint(E, F);
  if (!(p > 1.0)) throw std::invalid_argument("capacity: p must be > 1");

  CapacitySolution out;
  out.potential.assign(g.num_nodes, 0.0);
  if (!g.connects(E, F)) {
    out.disconnected = true;
    out.note = "E and F are disconnected: capacity 0";
    for (int v : F) out.potential[v] = 1.0;
    return out;
  }

  std::vector<int> which(g.num_nodes, -1);  // interior index or -1
  std::vector<double> fixed(g.num_nodes, -1.0);
  for (int v : E) fixed[v] = 0.0;
  for (int v : F) fixed[v] = 1.0;
  int ni = 0;
  for (int v = 0; v < g.num_nodes; ++v)
    if (fixed[v] < 0.0) which[v] = ni++;

  Eigen::VectorXd u = Eigen::VectorXd::Constant(ni, 0.5);
  const auto potential_at = [&](int v) {
    return fixed[v] >= 0.0 ? fixed[v] : u[which[v]];
  };

  const auto energy = [&](double eps2) {
    double s = 0.0;
    for (const Edge& e : g.edges) {
      const double d = potential_at(e.u) - potential_at(e.v);
      s += e.mass * std::pow((d * d + eps2) / (e.len * e.len), 0.5 * p);
    }
    return s;
  };

  using Sparse = Eigen::SparseMatrix<double>;
  Eigen::SimplicialLDLT<Sparse> solver;
  bool pattern_ready = false;

  int iters = 0;
  const std::vector<double> eps_path =
      p == 2.0 ? std::vector<double>{0.0}
               : std::vector<double>{1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-13};
  for (double eps : eps_path) {
    const double eps2 = eps * eps;
    for (int it = 0; it < 60; ++it, ++iters) {
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(ni);
      std::vector<Eigen::Triplet<double>> trips;
      trips.reserve(g.edges.size() * 4);
      for (const Edge& e : g.edges) {
        const double d = potential_at(e.u) - potential_at(e.v);
        const double lp = std::pow(e.len, p);
        double gcoef, hcoef;
        if (p == 2.0) {
          gcoef = 2.0 * e.mass / lp * d;
          hcoef = 2.0 * e.mass / lp;
        } else {
          const double base = d * d + eps2;  // > 0 on the eps path
          gcoef = p * e.mass / lp * std::pow(base, 0.5 * p - 1.0) * d;
          hcoef = p * e.mass / lp *
                  (std::pow(base, 0.5 * p - 1.0) +
                   (p - 2.0) * std::pow(base, 0.5 * p - 2.0) * d * d);
        }
        hcoef = std::max(hcoef, 1e-14);
        const int iu = which[e.u], iv = which[e.v];
        if (iu >= 0) grad[iu] += gcoef;
        if (iv >= 0) grad[iv] -= gcoef;
        if (iu >= 0) trips.emplace_back(iu, iu, hcoef);
        if (iv >= 0) trips.emplace_back(iv, iv, hcoef);
        if (iu >= 0 && iv >= 0) {
          trips.emplace_back(iu, iv, -hcoef);
          trips.emplace_back(iv, iu, -hcoef);
        }
      }
      const double gn = grad.lpNorm<Eigen::Infinity>();
      out.grad_norm = gn;
      if (gn <= 1e-12 * std::max(1.0, energy(eps2))) break;

      Sparse H(ni, ni);
      H.setFromTriplets(trips.begin(), trips.end());
      if (!pattern_ready) {
        solver.analyzePattern(H);
        pattern_ready = true;
      }
      solver.factorize(H);
      if (solver.info() != Eigen::Success)
        throw std::runtime_error("capacity: Hessian factorization failed");
      const Eigen::VectorXd step = solver.solve(-grad);

      const double f0 = energy(eps2);
      double t = 1.0;
      const Eigen::VectorXd u0 = u;
      bool ok = false;
      for (int halving = 0; halving < 50; ++halving, t *= 0.5) {
        u = u0 + t * step;
        if (energy(eps2) < f0) {
          ok = true;
          break;
        }
      }
      if (!ok) {
        u = u0;
        break;
      }
    }
  }

  out.iterations = iters;
  out.value = energy(0.0);
  out.potential.resize(g.num_nodes);
  for (int v = 0; v < g.num_nodes; ++v) out.potential[v] = potential_at(v);
  (void)opt;
  return out;
}

DualityReport duality_check(const Graph& g, const std::vector<int>& E,
                            const std::vector<int>& F, double p,
                            const SolverOptions& opt) {
  DualityReport rep;
  rep.p = p;
  rep.p_prime = p / (p - 1.0);
  std::string failures;
  bool have_cap = false, have_conn = false, have_sep = false;
  try {
    rep.cap = capacity(g, E, F, p, opt).value;
    have_cap = true;
  } catch (const std::exception& e) {
    failures += std::string("capacity: ") + e.what() + "; ";
  }
  try {
    const ModulusSolution s = modulus_connecting(g, E, F, p, opt);
    if (s.infinite) failures += "connecting modulus infinite; ";
    else {
      rep.conn_mod = s.value;
      have_conn = true;
    }
  } catch (const std::exception& e) {
    failures += std::string("connecting modulus: ") + e.what() + "; ";
  }
  try {
    const ModulusSolution s = separating_modulus(g, E, F, rep.p_prime, opt);
    if (s.infinite) failures += "separating modulus infinite; ";
    else {
      rep.sep_mod = s.value;
      have_sep = true;
    }
  } catch (const std::exception& e) {
    failures += std::string("separating modulus: ") + e.what() + "; ";
  }
  if (have_cap && have_conn)
    rep.residual_connecting = std::abs(rep.conn_mod - rep.cap);
  if (have_cap && have_sep && rep.cap > 0.0)
    rep.residual_separating =
        std::abs(rep.sep_mod - std::pow(rep.cap, -1.0 / (p - 1.0)));
  rep.note = failures.empty() ? "" : "partial report: " + failures;
  return rep;
}

// ---------------------------------------------------------------------------
// Ring grid

AnnulusGrid annulus_grid(const AnnulusGridSpec& spec) {
  if (!(spec.r1 > 0.0) || !(spec.r2 > spec.r1))
    throw std::invalid_argument("annulus grid: need 0 < r1 < r2");
  if (spec.layers < 1 || spec.sectors < 2)
    throw std::invalid_argument("annulus grid: resolution too small");

  AnnulusGrid out;
  const int rings = spec.layers + 1;
  const int ns = spec.sectors;
  const double dtheta = 2.0 * std::numbers::pi / ns;
  std::vector<double> radius(rings);
  for (int i = 0; i < rings; ++i)
    radius[i] =
        spec.r1 * std::pow(spec.r2 / spec.r1,
                           static_cast<double>(i) / spec.layers);

  Graph& g = out.g;
  g.num_nodes = rings * ns;
  g.pos_dim = 2;
  g.pos.resize(static_cast<std::size_t>(g.num_nodes) * 2);
  for (int i = 0; i < rings; ++i)
    for (int j = 0; j < ns; ++j) {
      const int v = i * ns + j;
      g.pos[2 * v] = radius[i] * std::cos(j * dtheta);
      g.pos[2 * v + 1] = radius[i] * std::sin(j * dtheta);
    }

  out.ring_cuts.resize(spec.layers);
  out.ring_radii.resize(spec.layers);
  // radial edges: cell area = rbar * dr * dtheta, crossed arc = rbar * dtheta
  for (int i = 0; i < spec.layers; ++i) {
    const double dr = radius[i + 1] - radius[i];
    const double rbar = 0.5 * (radius[i] + radius[i + 1]);
    out.ring_radii[i] = rbar;
    for (int j = 0; j < ns; ++j) {
      Edge e;
      e.u = i * ns + j;
      e.v = (i + 1) * ns + j;
      e.len = dr;
      e.area = rbar * dtheta;
      e.mass = e.len * e.area;
      out.ring_cuts[i].push_back(static_cast<int>(g.edges.size()));
      g.edges.push_back(e);
    }
  }
  // angular edges: dual cell width from the half-layers on each side
  for (int i = 0; i < rings; ++i) {
    double width = 0.0;
    if (i > 0) width += 0.5 * (radius[i] - radius[i - 1]);
    if (i < rings - 1) width += 0.5 * (radius[i + 1] - radius[i]);
    for (int j = 0; j < ns; ++j) {
      Edge e;
      e.u = i * ns + j;
      e.v = i * ns + (j + 1) % ns;
      e.len = radius[i] * dtheta;
      e.area = width;
      e.mass = e.len * e.area;
      g.edges.push_back(e);
    }
  }
  for (int j = 0; j < ns; ++j) {
    out.inner.push_back(j);
    out.outer.push_back((rings - 1) * ns + j);
  }
  g.validate();
  return out;
}

SphereFamilyBound sphere_family_lower_bound(const AnnulusGrid& grid,
                                            double q_const, double p,
                                            double eps, double r0,
                                            const SolverOptions& opt) {
  SphereFamilyBound out;
  if (!(q_const > 0.0)) {
    out.applicable = false;
    out.note = "only constant positive weights have a discrete surrogate here";
    return out;
  }
  if (eps > r0) throw std::invalid_argument("sphere family bound: eps > r0");
  if (eps == r0) {
    out.rhs = 0.0;
    out.lhs = 0.0;
    out.satisfied = true;
    out.note = "empty radial interval";
    return out;
  }
  if (!(p > 1.0))
    throw std::invalid_argument("sphere family bound: p must be > 1");

  // ||Q||_s(r) for constant Q on the circle of radius r: q * (2 pi r)^{1/s},
  // s = 1/(p-1) in the plane.
  const double s = 1.0 / (p - 1.0);
  const auto norm = [&](double r) {
    return q_const * std::pow(2.0 * std::numbers::pi * r, 1.0 / s);
  };
  out.rhs = radial_integral(RadialRule{64, 8}, eps, r0,
                            [&](double r) { return 1.0 / norm(r); });

  // circle-family surrogate: ring-layer cuts with mid radius inside (eps, r0)
  std::vector<std::vector<int>> cuts;
  for (std::size_t i = 0; i < grid.ring_cuts.size(); ++i)
    if (grid.ring_radii[i] > eps && grid.ring_radii[i] < r0)
      cuts.push_back(grid.ring_cuts[i]);
  if (cuts.empty()) {
    out.lhs = 0.0;
    out.satisfied = out.rhs <= 0.0;
    out.note = "no grid layers inside the radial interval";
    return out;
  }
  const ModulusSolution sol = modulus_for_cuts(grid.g, cuts, p, opt);
  out.lhs = sol.value;
  out.margin = out.lhs - 0.95 * out.rhs;
  out.satisfied = out.lhs >= 0.95 * out.rhs;
  out.note = "surface family rendered as ring-layer cuts (surrogate, not the "
             "full continuum family)";
  return out;
}

std::string solution_csv(const Graph& g, const ModulusSolution& s) {
  std::ostringstream os;
  os.precision(17);
  os << "edge,u,v,rho\n";
  for (std::size_t e = 0; e < s.rho.size(); ++e)
    os << e << ',' << g.edges[e].u << ',' << g.edges[e].v << ',' << s.rho[e]
       << '\n';
  return os.str();
}

std::string potential_csv(const CapacitySolution& s) {
  std::ostringstream os;
  os.precision(17);
  os << "node,u\n";
  for (std::size_t v = 0; v < s.potential.size(); ++v)
    os << v << ',' << s.potential[v] << '\n';
  return os.str();
}

}  // namespace qc
