#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <sstream>

#include "qc/network.hpp"
#include "qc/numeric.hpp"

using namespace qc;

namespace {

constexpr double kPi = std::numbers::pi;

Graph single_edge(double len = 1.0, double mass = 1.0, double area = 1.0) {
  Graph g;
  g.num_nodes = 2;
  g.edges.push_back({0, 1, len, mass, area});
  return g;
}

Graph series_pair() {
  Graph g;
  g.num_nodes = 3;
  g.edges.push_back({0, 1, 1.0, 1.0, 1.0});
  g.edges.push_back({1, 2, 1.0, 1.0, 1.0});
  return g;
}

Graph parallel_pair() {
  Graph g;
  g.num_nodes = 2;
  g.edges.push_back({0, 1, 1.0, 1.0, 1.0});
  g.edges.push_back({0, 1, 1.0, 1.0, 1.0});
  return g;
}

Graph grid_graph(int rows, int cols) {
  Graph g;
  g.num_nodes = rows * cols;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols)
        g.edges.push_back({r * cols + c, r * cols + c + 1, 1.0, 1.0, 1.0});
      if (r + 1 < rows)
        g.edges.push_back({r * cols + c, (r + 1) * cols + c, 1.0, 1.0, 1.0});
    }
  return g;
}

// test-side oracle: capacity by plain projected gradient descent with
// backtracking, independent of the solver's Newton path
double brute_capacity(const Graph& g, const std::vector<int>& E,
                      const std::vector<int>& F, double p) {
  std::vector<double> fixed(g.num_nodes, -1.0);
  for (int v : E) fixed[v] = 0.0;
  for (int v : F) fixed[v] = 1.0;
  std::vector<int> interior;
  for (int v = 0; v < g.num_nodes; ++v)
    if (fixed[v] < 0.0) interior.push_back(v);
  std::vector<double> u(g.num_nodes, 0.5);
  for (int v = 0; v < g.num_nodes; ++v)
    if (fixed[v] >= 0.0) u[v] = fixed[v];

  const auto energy = [&] {
    double s = 0.0;
    for (const Edge& e : g.edges)
      s += e.mass * std::pow(std::abs(u[e.u] - u[e.v]) / e.len, p);
    return s;
  };
  double f = energy();
  double step = 0.1;
  for (int it = 0; it < 200000; ++it) {
    std::vector<double> grad(g.num_nodes, 0.0);
    for (const Edge& e : g.edges) {
      const double d = u[e.u] - u[e.v];
      const double gcoef = p * e.mass / std::pow(e.len, p) *
                           std::pow(std::abs(d), p - 1.0) *
                           (d >= 0.0 ? 1.0 : -1.0);
      grad[e.u] += gcoef;
      grad[e.v] -= gcoef;
    }
    double gn = 0.0;
    for (int v : interior) gn = std::max(gn, std::abs(grad[v]));
    if (gn < 1e-12) break;
    const std::vector<double> u0 = u;
    bool moved = false;
    for (int h = 0; h < 40; ++h) {
      for (int v : interior) u[v] = u0[v] - step * grad[v];
      const double f2 = energy();
      if (f2 < f) {
        f = f2;
        step *= 1.2;
        moved = true;
        break;
      }
      step *= 0.5;
      u = u0;
    }
    if (!moved) break;
  }
  return f;
}

// dense linear-solve conductance oracle for p = 2
double conductance_oracle(const Graph& g, const std::vector<int>& E,
                          const std::vector<int>& F) {
  std::vector<double> fixed(g.num_nodes, -1.0);
  for (int v : E) fixed[v] = 0.0;
  for (int v : F) fixed[v] = 1.0;
  std::vector<int> idx(g.num_nodes, -1);
  int ni = 0;
  for (int v = 0; v < g.num_nodes; ++v)
    if (fixed[v] < 0.0) idx[v] = ni++;
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(ni, ni);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(ni);
  for (const Edge& e : g.edges) {
    const double c = e.mass / (e.len * e.len);
    const int iu = idx[e.u], iv = idx[e.v];
    if (iu >= 0) L(iu, iu) += c;
    if (iv >= 0) L(iv, iv) += c;
    if (iu >= 0 && iv >= 0) {
      L(iu, iv) -= c;
      L(iv, iu) -= c;
    } else if (iu >= 0) {
      b(iu) += c * fixed[e.v];
    } else if (iv >= 0) {
      b(iv) += c * fixed[e.u];
    }
  }
  Eigen::VectorXd x(ni);
  if (ni > 0) x = L.partialPivLu().solve(b);
  double energy = 0.0;
  const auto pot = [&](int v) { return fixed[v] >= 0.0 ? fixed[v] : x(idx[v]); };
  for (const Edge& e : g.edges) {
    const double d = pot(e.u) - pot(e.v);
    energy += e.mass / (e.len * e.len) * d * d;
  }
  return energy;
}

// random series-parallel graphs with the closed-form capacity kept alongside
struct SpPart {
  Graph g;
  int s = 0, t = 1;
  // closed-form conductance-like coefficient tree
  struct Node {
    bool leaf = true;
    double len = 1.0, mass = 1.0;
    bool series = false;
    std::vector<Node> kids;
    double cap(double p) const {
      if (leaf) return mass / std::pow(len, p);
      double acc = 0.0;
      if (series) {
        for (const Node& k : kids)
          acc += std::pow(k.cap(p), -1.0 / (p - 1.0));
        return std::pow(acc, -(p - 1.0));
      }
      for (const Node& k : kids) acc += k.cap(p);
      return acc;
    }
  };
  Node tree;
};

SpPart random_sp(Rng& rng, int max_edges) {
  using Node = SpPart::Node;
  // build a random tree with <= max_edges leaves
  int budget = 1 + static_cast<int>(rng.next_u64() % max_edges);
  std::function<Node(int&)> build = [&](int& left) -> Node {
    Node n;
    if (left <= 1 || rng.uniform() < 0.35) {
      n.leaf = true;
      n.len = 0.5 + 1.5 * rng.uniform();
      const double area = 0.5 + 1.5 * rng.uniform();
      n.mass = n.len * area;  // keep mass = len * area
      left -= 1;
      return n;
    }
    n.leaf = false;
    n.series = rng.uniform() < 0.5;
    int kids = 2;
    for (int i = 0; i < kids && left > 0; ++i) n.kids.push_back(build(left));
    if (n.kids.size() == 1) return n.kids[0];
    return n;
  };
  Node tree = build(budget);

  // materialize the graph
  SpPart out;
  out.tree = tree;
  Graph& g = out.g;
  g.num_nodes = 2;
  std::function<void(const Node&, int, int)> emit = [&](const Node& n, int s,
                                                        int t) {
    if (n.leaf) {
      g.edges.push_back({s, t, n.len, n.mass, n.mass / n.len});
      return;
    }
    if (n.series) {
      int prev = s;
      for (std::size_t i = 0; i < n.kids.size(); ++i) {
        const int next =
            (i + 1 == n.kids.size()) ? t : (g.num_nodes++, g.num_nodes - 1);
        emit(n.kids[i], prev, next);
        prev = next;
      }
    } else {
      for (const Node& k : n.kids) emit(k, s, t);
    }
  };
  emit(tree, 0, 1);
  return out;
}

}  // namespace

TEST_CASE("path enumeration on tiny graphs") {
  const PathFamily one =
      enumerate_paths(single_edge(), {0}, {1}, PathLimits{});
  REQUIRE(one.paths.size() == 1);
  CHECK(one.paths[0] == std::vector<int>{0});

  const PathFamily two =
      enumerate_paths(parallel_pair(), {0}, {1}, PathLimits{});
  CHECK(two.paths.size() == 2);

  // 2 x 2 grid, corner to corner, hop bound 2: exactly the two L-paths
  const Graph grid = grid_graph(2, 2);
  const PathFamily lpaths =
      enumerate_paths(grid, {0}, {3}, PathLimits{64, 2});
  CHECK(lpaths.paths.size() == 2);

  Graph disconnected;
  disconnected.num_nodes = 4;
  disconnected.edges.push_back({0, 1, 1.0, 1.0, 1.0});
  disconnected.edges.push_back({2, 3, 1.0, 1.0, 1.0});
  const PathFamily none =
      enumerate_paths(disconnected, {0}, {3}, PathLimits{});
  CHECK(none.paths.empty());
  CHECK(none.empty_due_to_disconnect);
}

TEST_CASE("connecting modulus closed forms") {
  for (double p : {1.5, 2.0, 3.0}) {
    const ModulusSolution one =
        modulus_connecting(single_edge(), {0}, {1}, p);
    CHECK(one.value == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(one.max_violation <= 1e-8);

    const ModulusSolution ser = modulus_connecting(series_pair(), {0}, {2}, p);
    CHECK(ser.value == doctest::Approx(std::pow(2.0, 1.0 - p)).epsilon(1e-8));

    const ModulusSolution par =
        modulus_connecting(parallel_pair(), {0}, {1}, p);
    CHECK(par.value == doctest::Approx(2.0).epsilon(1e-8));
  }
  CHECK_THROWS_AS(modulus_connecting(single_edge(), {0}, {1}, 1.0),
                  std::invalid_argument);

  Graph disconnected;
  disconnected.num_nodes = 4;
  disconnected.edges.push_back({0, 1, 1.0, 1.0, 1.0});
  disconnected.edges.push_back({2, 3, 1.0, 1.0, 1.0});
  const ModulusSolution inf = modulus_connecting(disconnected, {0}, {3}, 2.0);
  CHECK(inf.infinite);
}

TEST_CASE("series modulus matches a 1-d parameter scan oracle") {
  // two unit edges in series: rho = (t, 1-t); scan the objective directly
  const double p = 2.7;
  double best = 1e9;
  for (int i = 0; i <= 100000; ++i) {
    const double t = i / 100000.0;
    best = std::min(best, std::pow(t, p) + std::pow(1.0 - t, p));
  }
  const ModulusSolution ser = modulus_connecting(series_pair(), {0}, {2}, p);
  CHECK(ser.value == doctest::Approx(best).epsilon(1e-7));
}

TEST_CASE("explicit path families: solver respects the given constraints") {
  const Graph grid = grid_graph(2, 2);
  const PathFamily fam = enumerate_paths(grid, {0}, {3}, PathLimits{64, 4});
  const ModulusSolution full = modulus_for_paths(grid, fam.paths, 2.0);
  const ModulusSolution gen = modulus_connecting(grid, {0}, {3}, 2.0);
  CHECK(full.value == doctest::Approx(gen.value).epsilon(1e-8));

  // sub-family: modulus can only drop
  std::vector<std::vector<int>> sub(fam.paths.begin(), fam.paths.begin() + 1);
  const ModulusSolution part = modulus_for_paths(grid, sub, 2.0);
  CHECK(part.value <= full.value + 1e-10);

  // empty family: infinite by convention
  const ModulusSolution empty = modulus_for_paths(grid, {}, 2.0);
  CHECK(empty.infinite);

  // feasibility of the returned density, rechecked by hand
  for (const auto& path : fam.paths) {
    double len = 0.0;
    for (int e : path) len += grid.edges[e].len * full.rho[e];
    CHECK(len >= 1.0 - 1e-8);
  }
}

TEST_CASE("capacity closed forms and boundary handling") {
  for (double p : {1.5, 2.0, 3.0}) {
    const CapacitySolution one = capacity(single_edge(), {0}, {1}, p);
    CHECK(one.value == doctest::Approx(1.0).epsilon(1e-9));

    const CapacitySolution ser = capacity(series_pair(), {0}, {2}, p);
    CHECK(ser.value == doctest::Approx(std::pow(2.0, 1.0 - p)).epsilon(1e-9));
    CHECK(ser.potential[1] == doctest::Approx(0.5).epsilon(1e-7));

    const CapacitySolution par = capacity(parallel_pair(), {0}, {1}, p);
    CHECK(par.value == doctest::Approx(2.0).epsilon(1e-9));
  }

  Graph disconnected;
  disconnected.num_nodes = 4;
  disconnected.edges.push_back({0, 1, 1.0, 1.0, 1.0});
  disconnected.edges.push_back({2, 3, 1.0, 1.0, 1.0});
  const CapacitySolution zero = capacity(disconnected, {0}, {3}, 2.0);
  CHECK(zero.disconnected);
  CHECK(zero.value == 0.0);

  CHECK_THROWS_AS(capacity(single_edge(), {0}, {0}, 2.0),
                  std::invalid_argument);
}

TEST_CASE("separating modulus closed forms") {
  for (double pp : {1.5, 2.0, 3.0}) {
    const ModulusSolution one = separating_modulus(single_edge(), {0}, {1}, pp);
    CHECK(one.value == doctest::Approx(1.0).epsilon(1e-8));

    // series pair: two singleton cuts force rho = 1 on both edges
    const ModulusSolution ser = separating_modulus(series_pair(), {0}, {2}, pp);
    CHECK(ser.value == doctest::Approx(2.0).epsilon(1e-8));

    // parallel pair: one cut with two edges, symmetric split
    const ModulusSolution par =
        separating_modulus(parallel_pair(), {0}, {1}, pp);
    CHECK(par.value == doctest::Approx(std::pow(2.0, 1.0 - pp)).epsilon(1e-8));
  }
}

TEST_CASE("cut enumeration rejects a large interior with advice") {
  const Graph grid = grid_graph(5, 6);
  CHECK_THROWS_WITH_AS(enumerate_min_cuts(grid, {0}, {29}, 20),
                       doctest::Contains("capacity-duality"),
                       std::runtime_error);
}

TEST_CASE("duality identities on the canonical tiny graphs") {
  for (double p : {1.5, 2.0, 3.0}) {
    const DualityReport one = duality_check(single_edge(), {0}, {1}, p);
    CHECK(one.cap == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(one.residual_connecting <= 1e-6);
    CHECK(one.residual_separating <= 1e-6);
  }
  const DualityReport ser = duality_check(series_pair(), {0}, {2}, 2.0);
  CHECK(ser.cap == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(ser.conn_mod == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(ser.sep_mod == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(ser.p_prime == doctest::Approx(2.0));
}

TEST_CASE("duality on random series-parallel graphs vs closed forms") {
  Rng rng(4242);
  int tested = 0;
  while (tested < 12) {
    const SpPart sp = random_sp(rng, 8);
    if (sp.g.edges.size() < 2 || sp.g.edges.size() > 8) continue;
    ++tested;
    for (double p : {1.5, 2.0, 3.0}) {
      CAPTURE(tested);
      CAPTURE(p);
      const double closed = sp.tree.cap(p);
      const DualityReport rep = duality_check(sp.g, {0}, {1}, p);
      CHECK(rep.cap == doctest::Approx(closed).epsilon(1e-7));
      CHECK(rep.residual_connecting <= 1e-6);
      CHECK(rep.residual_separating <= 1e-6);
      // independent brute-force minimization agrees
      const double brute = brute_capacity(sp.g, {0}, {1}, p);
      CHECK(brute == doctest::Approx(closed).epsilon(1e-4));
    }
  }
}

TEST_CASE("p = 2 capacity equals the conductance from a dense linear solve") {
  const Graph grid = grid_graph(3, 3);
  const double cond = conductance_oracle(grid, {0}, {8});
  const CapacitySolution cap = capacity(grid, {0}, {8}, 2.0);
  CHECK(cap.value == doctest::Approx(cond).epsilon(1e-8));

  const DualityReport rep = duality_check(grid, {0}, {8}, 2.0);
  CHECK(rep.conn_mod == doctest::Approx(cond).epsilon(1e-6));
  CHECK(rep.residual_connecting <= 1e-6);
}

TEST_CASE("capacity monotonicity under extra edges") {
  // the energy gains a nonnegative term per added edge, so capacity between
  // fixed boundary sets can only grow
  Rng rng(777);
  for (int trial = 0; trial < 6; ++trial) {
    Graph g = grid_graph(2, 3);
    const std::vector<int> E{0}, F{5};
    const double base = capacity(g, E, F, 2.5).value;
    Graph extended = g;
    const int u = static_cast<int>(rng.next_u64() % 6);
    int v = static_cast<int>(rng.next_u64() % 6);
    if (v == u) v = (v + 1) % 6;
    extended.edges.push_back({u, v, 1.0, 1.0, 1.0});
    const double more = capacity(extended, E, F, 2.5).value;
    CHECK(more >= base - 1e-10);
  }
}

TEST_CASE("edge list round trips") {
  AnnulusGridSpec spec;
  spec.layers = 2;
  spec.sectors = 4;
  const AnnulusGrid grid = annulus_grid(spec);
  std::ostringstream os;
  write_edge_list(grid.g, os);
  std::istringstream is(os.str());
  const Graph back = read_edge_list(is);
  REQUIRE(back.num_nodes == grid.g.num_nodes);
  REQUIRE(back.edges.size() == grid.g.edges.size());
  for (std::size_t i = 0; i < back.edges.size(); ++i) {
    CHECK(back.edges[i].u == grid.g.edges[i].u);
    CHECK(back.edges[i].len == grid.g.edges[i].len);
    CHECK(back.edges[i].mass == grid.g.edges[i].mass);
    CHECK(back.edges[i].area == grid.g.edges[i].area);
  }
  CHECK(back.pos_dim == 2);
}

TEST_CASE("annulus grid geometry") {
  AnnulusGridSpec one;
  one.layers = 1;
  one.sectors = 8;
  const AnnulusGrid grid = annulus_grid(one);
  // single layer: all radial edges share the same length
  const double len = grid.g.edges[grid.ring_cuts[0][0]].len;
  for (int e : grid.ring_cuts[0])
    CHECK(grid.g.edges[e].len == doctest::Approx(len));
  // mass = len * area everywhere by construction
  for (const Edge& e : grid.g.edges)
    CHECK(e.mass == doctest::Approx(e.len * e.area).epsilon(1e-12));

  AnnulusGridSpec bad;
  bad.sectors = 1;
  CHECK_THROWS_AS(annulus_grid(bad), std::invalid_argument);
}

TEST_CASE("ring capacity approaches 2 pi / log(r2/r1) under refinement") {
  AnnulusGridSpec coarse;
  coarse.layers = 32;
  coarse.sectors = 128;
  const AnnulusGrid g1 = annulus_grid(coarse);
  const double c1 = capacity(g1.g, g1.inner, g1.outer, 2.0).value;
  const double target = 2.0 * kPi;  // log(r2/r1) = 1
  CHECK(std::abs(c1 - target) / target < 0.05);

  AnnulusGridSpec fine = coarse;
  fine.layers = 64;
  fine.sectors = 256;
  const AnnulusGrid g2 = annulus_grid(fine);
  const double c2 = capacity(g2.g, g2.inner, g2.outer, 2.0).value;
  CHECK(std::abs(c2 - target) <= std::abs(c1 - target) + 1e-12);

  // widening the ring lowers the capacity
  AnnulusGridSpec wide = coarse;
  wide.r2 = std::exp(2.0);
  const AnnulusGrid g3 = annulus_grid(wide);
  const double c3 = capacity(g3.g, g3.inner, g3.outer, 2.0).value;
  CHECK(c3 < c1);
  CHECK(c3 == doctest::Approx(kPi).epsilon(0.05));
}

TEST_CASE("circle-family surrogate bound on the ring") {
  AnnulusGridSpec spec;
  spec.layers = 32;
  spec.sectors = 128;
  const AnnulusGrid grid = annulus_grid(spec);

  const SphereFamilyBound b =
      sphere_family_lower_bound(grid, 1.0, 2.0, 1.0, std::exp(1.0));
  CHECK(b.applicable);
  CHECK(b.rhs == doctest::Approx(1.0 / (2.0 * kPi)).epsilon(1e-10));
  CHECK(b.satisfied);
  CHECK(b.lhs >= 0.95 * b.rhs);
  CHECK(b.lhs == doctest::Approx(b.rhs).epsilon(0.01));

  // constants scale the right side inversely
  const SphereFamilyBound b2 =
      sphere_family_lower_bound(grid, 2.0, 2.0, 1.0, std::exp(1.0));
  CHECK(b2.rhs == doctest::Approx(0.5 * b.rhs).epsilon(1e-10));

  // empty interval is trivially satisfied
  const SphereFamilyBound b3 =
      sphere_family_lower_bound(grid, 1.0, 2.0, 1.5, 1.5);
  CHECK(b3.satisfied);
  CHECK(b3.rhs == 0.0);

  const SphereFamilyBound na =
      sphere_family_lower_bound(grid, -1.0, 2.0, 1.0, 2.0);
  CHECK_FALSE(na.applicable);
}
