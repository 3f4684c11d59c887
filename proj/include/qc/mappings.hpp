#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <vector>

#include "qc/dilatation.hpp"
#include "qc/quadrature.hpp"

namespace qc {

// How to compute a differential: exact closed form, or central differences
// (Richardson-extrapolated by default). h = 0 picks 1e-5 * max(1, |x|).
struct DiffMethod {
  enum class Kind { analytic, central_difference };
  Kind kind = Kind::analytic;
  double h = 0.0;
  bool richardson = true;

  static DiffMethod analytic() { return {}; }
  static DiffMethod fd(double h = 0.0, bool richardson = true) {
    return {Kind::central_difference, h, richardson};
  }
};

// Closed-form test mappings: identity, linear, the radial stretch
// x -> |x|^{c-1} x, translation, and compositions. All built-ins are
// orientation preserving with J > 0 away from singular points.
class Mapping {
 public:
  static Mapping identity(int n);
  static Mapping linear(Eigen::MatrixXd a);
  static Mapping radial_stretch(int n, double c);  // c > 0
  static Mapping translate(Eigen::VectorXd v);
  // compose({f, g, h})(x) = f(g(h(x)))
  static Mapping compose(std::vector<Mapping> chain);

  int dim() const;
  // User-asserted maximal multiplicity N(f, D); 1 for every built-in.
  int multiplicity() const;
  Mapping with_multiplicity(int n_fd) const;

  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const;
  // Throws std::domain_error at points where the closed form is singular
  // (radial stretch at the origin when c != 1).
  Eigen::MatrixXd differential(const Eigen::VectorXd& x,
                               const DiffMethod& m = {}) const;

  std::string describe() const;

 private:
  struct Node;
  explicit Mapping(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

// Log-radial x angular sampling lattice on the annulus r_in < |x-x0| < r_out.
struct AnnulusSampling {
  int radial = 16;
  SphereResolution angular;
};

struct FieldSummary {
  std::vector<DilatationSample> samples;
  ExtReal max_k;
  double mean_finite_k = 0.0;  // mean over finite samples
  bool any_infinite = false;
};

// Samples K_{I,p} over the annulus lattice.
FieldSummary dilatation_field(const Mapping& f, std::span<const double> x0,
                              double r_in, double r_out, double p,
                              const AnnulusSampling& sampling,
                              const DiffMethod& method = {});

// Sampled majorant field Q = N(f,D) * K_{I,alpha}^{(p-n+1)/(n-1)} with
// alpha = p/(p-n+1), for p in (n-1, n]. Sphere means of the samples reuse
// the angular rule weights.
struct MajorantField {
  double alpha = 0.0;
  double exponent = 0.0;       // (p-n+1)/(n-1)
  std::vector<double> x0;
  std::vector<double> radii;
  SphereRule angular;
  std::vector<double> values;  // radii.size() x angular.size()
  bool any_infinite = false;

  RadialProfile profile() const;  // sphere means per lattice radius
  double max_value() const;
};

MajorantField lower_q_majorant(const Mapping& f, std::span<const double> x0,
                               double r_in, double r_out, double p,
                               const AnnulusSampling& sampling,
                               const DiffMethod& method = {});

}  // namespace qc
