#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qc {

// Edge with the three discrete measures: len for line integrals along
// curves, area for cut integrals across separating sets, mass for the
// volume objective. The continuum-consistent choice is mass = len * area;
// the duality identity between the separating modulus and capacity holds
// exactly under it.
struct Edge {
  int u = 0, v = 0;
  double len = 1.0;
  double mass = 1.0;
  double area = 1.0;
};

struct Graph {
  int num_nodes = 0;
  std::vector<Edge> edges;
  int pos_dim = 0;
  std::vector<double> pos;  // num_nodes x pos_dim when pos_dim > 0

  void validate() const;
  bool connected() const;
  // connectivity of the subgraph that avoids the given edges
  bool connects(const std::vector<int>& from, const std::vector<int>& to,
                const std::vector<char>& edge_removed = {}) const;
};

// Edge-list text format:
//   node <id> [coords...]
//   edge <u> <v> <len> <mass> <area>
Graph read_edge_list(std::istream& in);
void write_edge_list(const Graph& g, std::ostream& out);

// Paths are edge-index sequences; no edge repeats within a path.
struct PathFamily {
  std::vector<std::vector<int>> paths;
  bool truncated = false;
  bool empty_due_to_disconnect = false;
};

struct PathLimits {
  int max_paths = 64;
  int max_length = 16;  // hop bound
};

// Deterministic shortest-first enumeration of simple E-F paths.
PathFamily enumerate_paths(const Graph& g, const std::vector<int>& E,
                           const std::vector<int>& F, const PathLimits& lim);

struct CutFamily {
  std::vector<std::vector<int>> cuts;  // edge-index sets
};

// All inclusion-minimal E-F edge cuts, by enumeration over node subsets.
// Throws std::runtime_error when the interior is too large, advising the
// capacity-duality route instead.
CutFamily enumerate_min_cuts(const Graph& g, const std::vector<int>& E,
                             const std::vector<int>& F, int max_interior = 20);

struct SolverOptions {
  double tol = 1e-10;       // primal-dual gap, relative
  int max_iterations = 100000;
};

struct ModulusSolution {
  double value = 0.0;
  bool infinite = false;     // empty family convention, flagged
  std::vector<double> rho;   // per-edge density
  double p = 0.0;
  double max_violation = 0.0;
  int iterations = 0;
  double gap = 0.0;          // primal-dual gap at exit
  std::string note;
};

// min sum_e mass_e rho_e^p subject to sum_{e in gamma} len_e rho_e >= 1 for
// every path of the family. Solved through the concave dual with projected
// damped Newton steps; the returned rho is rescaled to exact feasibility.
ModulusSolution modulus_for_paths(const Graph& g,
                                  const std::vector<std::vector<int>>& paths,
                                  double p, const SolverOptions& opt = {});

// Same objective over the implicit family of all E-F paths: constraint
// generation with a shortest-path separation oracle.
ModulusSolution modulus_connecting(const Graph& g, const std::vector<int>& E,
                                   const std::vector<int>& F, double p,
                                   const SolverOptions& opt = {});

// Separating-set modulus: min sum mass_e rho_e^{p'} subject to
// sum_{e in cut} area_e rho_e >= 1 over every minimal cut.
ModulusSolution separating_modulus(const Graph& g, const std::vector<int>& E,
                                   const std::vector<int>& F, double p_prime,
                                   const SolverOptions& opt = {});
ModulusSolution modulus_for_cuts(const Graph& g,
                                 const std::vector<std::vector<int>>& cuts,
                                 double p_prime,
                                 const SolverOptions& opt = {});

struct CapacitySolution {
  double value = 0.0;
  std::vector<double> potential;  // 0 on E, 1 on F
  int iterations = 0;
  double grad_norm = 0.0;
  bool disconnected = false;
  std::string note;
};

// min sum_e mass_e (|u_a - u_b| / len_e)^p over potentials with the given
// boundary data. Damped Newton on an epsilon-regularized energy, sparse
// Cholesky inner solves; p = 2 reduces to one linear solve.
CapacitySolution capacity(const Graph& g, const std::vector<int>& E,
                          const std::vector<int>& F, double p,
                          const SolverOptions& opt = {});

struct DualityReport {
  double p = 0.0, p_prime = 0.0;
  double cap = 0.0;
  double conn_mod = 0.0;
  double sep_mod = 0.0;
  double residual_connecting = 0.0;  // |conn_mod - cap|
  double residual_separating = 0.0;  // |sep_mod - cap^{-1/(p-1)}|
  std::string note;
};

DualityReport duality_check(const Graph& g, const std::vector<int>& E,
                            const std::vector<int>& F, double p,
                            const SolverOptions& opt = {});

// Polar grid on the annulus r1 < |x| < r2 (n = 2). Radii are log-spaced;
// lengths from geometry, masses from cell areas, areas from dual-cell
// crossings (mass = len * area holds by construction). ring_cuts[i] is the
// set of radial edges crossing the i-th circle layer.
struct AnnulusGridSpec {
  double r1 = 1.0, r2 = 2.718281828459045;
  int layers = 32;
  int sectors = 128;
};

struct AnnulusGrid {
  Graph g;
  std::vector<int> inner, outer;           // boundary node sets E, F
  std::vector<std::vector<int>> ring_cuts; // one per layer
  std::vector<double> ring_radii;          // mid radius per layer
};

AnnulusGrid annulus_grid(const AnnulusGridSpec& spec);

// Lemma-4 style surrogate on the ring: the modulus of the circle family
// (ring-layer cuts, exponent p) against the radial integral of
// 1/||Q||_s(r) for constant Q. Only the constant-weight identity surrogate
// is in scope.
struct SphereFamilyBound {
  double lhs = 0.0;   // discrete modulus of the layer-cut family
  double rhs = 0.0;   // integral of dr / ||Q||_s(r)
  double margin = 0.0;
  bool satisfied = false;
  bool applicable = true;
  std::string note;
};

SphereFamilyBound sphere_family_lower_bound(const AnnulusGrid& grid,
                                            double q_const, double p,
                                            double eps, double r0,
                                            const SolverOptions& opt = {});

std::string solution_csv(const Graph& g, const ModulusSolution& s);
std::string potential_csv(const CapacitySolution& s);

}  // namespace qc
