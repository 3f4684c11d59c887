#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qc/weight.hpp"

namespace qc {

// Quadrature nodes on the unit sphere S^{n-1}. Weights sum to omega(n).
//   n = 2 : uniform-angle trapezoid, m nodes (exact for trig degree m-1)
//   n = 3 : Gauss-Legendre in cos(polar) x uniform azimuth
//   n >= 4: Monte Carlo directions from the recorded seed
struct SphereRule {
  int n = 0;
  std::vector<double> dirs;   // node count x n, row-major unit vectors
  std::vector<double> w;      // per-node weights on the unit sphere
  bool monte_carlo = false;
  std::uint64_t seed = 0;
  std::size_t size() const { return w.size(); }
};

struct SphereResolution {
  int m = 256;                 // n = 2
  int m1 = 24, m2 = 48;        // n = 3: polar x azimuth
  int mc_samples = 4096;       // n >= 4
  std::uint64_t seed = 0;      // required for n >= 4
  SphereResolution scaled(int factor) const;
  SphereResolution halved() const;  // clamped to the rule minima
};

SphereRule make_sphere_rule(int n, const SphereResolution& res);

// Gauss-Legendre panels on log-spaced subintervals of [a, b], 0 < a < b.
// Criteria integrands blow up at 0 like powers of 1/t and 1/log(1/t);
// log spacing resolves the endpoint without adaptivity.
struct RadialRule {
  int panels = 32;
  int gauss = 8;
};

struct RadialGrid {
  std::vector<double> r;
  std::vector<double> w;
};
RadialGrid radial_nodes(const RadialRule& rule, double a, double b);

// Innermost radius ever used when a caller asks for integrals down to 0.
inline constexpr double kMinRadius = 1e-12;

// 1-D integral of f over [a, b] with the log-spaced panel rule.
double radial_integral(const RadialRule& rule, double a, double b,
                       const std::function<double(double)>& f);

struct QuadResult {
  double value = 0.0;
  double std_error = 0.0;  // nonzero only on Monte Carlo paths
};

// Integral of Q over the sphere |x - x0| = r (d H^{n-1}).
QuadResult sphere_integral(const Weight& Q, std::span<const double> x0,
                           double r, const SphereRule& rule);

// Spherical mean q_{x0}(r): sphere integral divided by omega * r^{n-1}.
QuadResult sphere_mean(const Weight& Q, std::span<const double> x0, double r,
                       const SphereRule& rule);

// L_s norm over the full sphere: (integral of Q^s dH^{n-1})^{1/s}, s > 0.
double sphere_ls_norm(const Weight& Q, std::span<const double> x0, double r,
                      double s, const SphereRule& rule);

struct BallRule {
  RadialRule radial;
  SphereRule sphere;
};

// Mean oscillation of Q over B(x0, eps): mean |Q - mean(Q)| with both passes
// on the same node set. Normalization uses the quadrature mass so a constant
// weight gives exactly zero. Non-finite node values surface as a non-finite
// result, not an exception.
double ball_mean_oscillation(const Weight& Q, std::span<const double> x0,
                             double eps, const BallRule& rule);

struct AnnulusRule {
  RadialRule radial;
  SphereRule sphere;
};

// Integral over the annulus r1 < |x - x0| < r2 of Q(x)^q_exp * radial(|x-x0|)
// by product quadrature (radial x sphere). radial may be empty (factor 1).
QuadResult annulus_integral(const Weight& Q, double q_exp,
                            const std::function<double(double)>& radial,
                            std::span<const double> x0, double r1, double r2,
                            const AnnulusRule& rule);

// Sampled radial profile r -> value with deterministic interpolation:
// log-log linear where the bracketing values are positive, linear in log r
// otherwise. Queries outside [r.front(), r.back()] are a domain error.
struct RadialProfile {
  enum class Kind { mean, ls_norm };
  Kind kind = Kind::mean;
  double s = 0.0;  // ls_norm exponent
  std::vector<double> x0;
  std::vector<double> r;       // strictly ascending, positive
  std::vector<double> value;
  std::vector<double> err;     // per-sample error estimate (may be empty)

  double operator()(double rr) const;
  void validate() const;
};

// Profile of sphere means (or L_s norms) on a log-spaced grid over
// [r_lo, r_hi] with `per_octave` samples per octave. q_exp != 1 profiles the
// means of Q^{q_exp}.
RadialProfile mean_profile(const Weight& Q, std::span<const double> x0,
                           double r_lo, double r_hi, int per_octave,
                           const SphereRule& rule, double q_exp = 1.0);
RadialProfile ls_norm_profile(const Weight& Q, std::span<const double> x0,
                              double r_lo, double r_hi, int per_octave,
                              double s, const SphereRule& rule);

// Builds an exact profile from a closed-form radial function.
RadialProfile profile_from_function(const std::function<double(double)>& q,
                                    double r_lo, double r_hi, int per_octave);

std::string profile_csv(const RadialProfile& p);

}  // namespace qc
