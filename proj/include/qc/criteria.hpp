#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qc/mappings.hpp"
#include "qc/quadrature.hpp"
#include "qc/weight.hpp"

namespace qc {

// ---------------------------------------------------------------------------
// Orlicz gauge functions phi: [0, inf) -> [0, inf), nondecreasing.

class Orlicz {
 public:
  static Orlicz power(double q);                   // t^q
  static Orlicz power_log(double q, double a);     // t^q (log(e+t))^a
  static Orlicz table(std::vector<double> t, std::vector<double> v);

  double operator()(double t) const;
  std::string describe() const;
  // Monotonicity check on a log-spaced sample grid; throws on violation.
  void validate(double t_max) const;

 private:
  enum class Kind { power, power_log, table };
  Kind kind_ = Kind::power;
  double q_ = 1.0, a_ = 0.0;
  std::vector<double> t_, v_;
};

// ---------------------------------------------------------------------------
// Parameter bundle. alpha and s are derived from (n, p) when p is supplied;
// supplying alpha (or s) alongside p requires consistency with the derivation.

struct CriterionParams {
  int n = 0;
  double p = 0.0;      // 0 = not supplied
  double alpha = 0.0;  // p/(p-n+1)
  double s = 0.0;      // (n-1)/(p-n+1)

  static CriterionParams from_p(int n, double p);
  static CriterionParams from_alpha(int n, double alpha);
  void validate() const;
};

// ---------------------------------------------------------------------------
// Improper-integral classification on dyadic ladders.

enum class Classification { convergent, divergent, inconclusive, not_applicable };
const char* to_string(Classification c);

enum class Boundedness { bounded, unbounded, inconclusive };
const char* to_string(Boundedness b);

struct LadderRung {
  double endpoint = 0.0;   // eps_k (toward 0) or T_k (toward infinity)
  double increment = 0.0;  // integral over the k-th dyadic interval
  double partial = 0.0;    // accumulated value
  bool finite = true;
};

// Classifier constants. Increment ratios are extrapolated to their limit by a
// least-squares fit rho_k ~ rho_inf + c/k before thresholding; raw trailing
// ratios misclassify boundary integrands like 1/(t log(1/t)) at desk depth.
struct ClassifierConfig {
  double theta_div = 0.95;
  double theta_conv = 0.90;
  double tail_rel_tol = 0.1;
  double fit_residual_max = 0.02;
  int min_rungs = 4;
  int fit_window = 12;
};

struct CriterionVerdict {
  Classification cls = Classification::inconclusive;
  std::vector<LadderRung> ladder;
  double value = 0.0;        // total over the resolved ladder
  double limit_ratio = 0.0;  // extrapolated increment ratio
  double fit_residual = 0.0;
  std::string note;
};

// Classifies sum(increments) as convergent/divergent from the dyadic ladder.
// Rungs must be ordered toward the limit.
CriterionVerdict classify_increments(std::vector<LadderRung> ladder,
                                     const ClassifierConfig& cfg = {});

// Ladder of T = 2^k, k = 1..depth, for integrals toward infinity.
struct TailLadder {
  int depth = 48;
  RadialRule rung_rule{1, 16};
};

// Ladder of eps_k = eps0 * 2^-k, k = 1..depth, for integrals toward 0.
struct ZeroLadder {
  double eps0 = 0.5;
  int depth = 24;
  RadialRule rung_rule{1, 12};
};

// ---------------------------------------------------------------------------
// Calderon condition: integral_1^inf (t/phi(t))^{1/(n-2)} dt < infinity.
// n = 2 is outside the condition's range and yields not_applicable.
CriterionVerdict calderon_test(const Orlicz& phi, int n,
                               const TailLadder& ladder = {},
                               const ClassifierConfig& cfg = {});

// ---------------------------------------------------------------------------
// Twin criterion on the profile q = q_{x0}: the integrand
// t^{-(n-1)/(alpha-1)} q(t)^{-1/(alpha-1)} must integrate finitely on
// [eps, eps0] and diverge as eps -> 0.
struct PairVerdict {
  CriterionVerdict finite_part;      // fixed-eps integral
  CriterionVerdict divergence_part;  // behavior toward 0
  bool satisfied = false;
};

PairVerdict divergence_pair_test(const RadialProfile& q,
                                 const CriterionParams& params,
                                 const ZeroLadder& ladder = {},
                                 const ClassifierConfig& cfg = {});

// ---------------------------------------------------------------------------
// Boundedness of q(r) / (log(1/r))^{n-1} over the ladder radii (all < 1).
struct RatioVerdict {
  std::vector<double> r;
  std::vector<double> ratio;
  double sup = 0.0;
  Boundedness cls = Boundedness::inconclusive;
  double slope = 0.0;  // least-squares slope vs log log(1/r)
  std::string note;
};

RatioVerdict loglog_majorant_check(const RadialProfile& q, int n,
                                   const ZeroLadder& ladder = {});

// ---------------------------------------------------------------------------
// Finite mean oscillation diagnostics.
struct FmoDiagnostic {
  std::vector<double> eps;
  std::vector<double> osc;
  double limsup_estimate = 0.0;
  double slope = 0.0;
  Boundedness cls = Boundedness::inconclusive;
  std::string note;
};

// Slope thresholds: oscillation vs log log(1/eps); growth at slope >= 0.2
// is FMO-negative, slope <= 0.05 (including decay) is FMO-positive.
FmoDiagnostic fmo_diagnostic(const Weight& Q, std::span<const double> x0,
                             const ZeroLadder& ladder, const BallRule& rule);

// Annulus mass integral(eps < |x-x0| < e0) Q / (|x-x0| log(1/|x-x0|))^n dm
// against log log(1/eps). Bounded ratios are the FMO signature.
struct LogLogBound {
  std::vector<double> eps;
  std::vector<double> lhs;
  std::vector<double> ratio;
  double band_factor = 0.0;  // max/min of the trailing ratio window
  Boundedness cls = Boundedness::inconclusive;
  std::string note;
};

LogLogBound fmo_loglog_bound(const Weight& Q, std::span<const double> x0,
                             double e0, const ZeroLadder& ladder, int n,
                             const AnnulusRule& rule);

// ---------------------------------------------------------------------------
// Little-o test: R(eps) = integral Q^s psi^alpha dm / I^alpha(eps, eps0)
// with I(eps, eps0) = integral_eps^eps0 psi. Requires I finite positive per
// rung and I -> infinity toward 0.
struct TestWeightSpec {
  std::function<double(double)> psi;  // empty = default 1/(t log(1/t))^{n/alpha}
  std::string name = "default";
};

enum class Vanishing { vanishes, does_not, inconclusive, not_applicable };
const char* to_string(Vanishing v);

struct LittleOResult {
  std::vector<double> eps;
  std::vector<double> numer;
  std::vector<double> ival;
  std::vector<double> ratio;
  Vanishing cls = Vanishing::inconclusive;
  std::string note;
};

LittleOResult little_o_test(const Weight& Q, std::span<const double> x0,
                            const TestWeightSpec& psi,
                            const CriterionParams& params, double eps0,
                            const ZeroLadder& ladder, const AnnulusRule& rule);

// ---------------------------------------------------------------------------
// Extremal radial weight eta0(r) = 1 / (I r^{(n-1)/(p-1)} q(r)^{1/(p-1)});
// I normalizes the integral of eta0 over [r1, r2] to 1.
struct ExtremalWeight {
  double I = 0.0;
  double p = 0.0;
  int n = 0;
  double r1 = 0.0, r2 = 0.0;
  double exp_r = 0.0;  // (n-1)/(p-1)
  double exp_q = 0.0;  // 1/(p-1)
  RadialProfile q;
  std::vector<double> r, eta0;  // samples on the radial grid

  double operator()(double rr) const;
};

ExtremalWeight extremal_weight(const RadialProfile& q, int n, double p,
                               double r1, double r2,
                               const RadialRule& rule = {});

// ---------------------------------------------------------------------------
// Equality/optimality check of the extremal identity:
//   omega/I^{p-1} = integral_A Q eta0^p dm <= integral_A Q eta^p dm
// for every admissible eta with unit radial integral.
struct RadialCandidate {
  std::function<double(double)> eta;
  std::string name;
};

struct IdentityCheck {
  double lhs = 0.0;
  double rhs0 = 0.0;
  double rel_err = 0.0;
  std::vector<double> rhs_alt;
  std::vector<double> alt_margin;  // rhs_alt - rhs0
  ExtremalWeight eta0;
};

// Alternatives failing the unit-integral validation raise
// std::invalid_argument naming the defect.
IdentityCheck lower_bound_identity_check(
    const Weight& Q, std::span<const double> x0, int n, double p, double r1,
    double r2, const std::vector<RadialCandidate>& alternatives,
    const AnnulusRule& rule, int profile_per_octave = 16);

// ---------------------------------------------------------------------------
// Ring upper bound: integral over A(x0, eps, eps1) of
// Q^{(n-1)/(p-n+1)} eta^alpha dm for normalized eta. When eta is not given,
// the extremal weight of the Q^{(n-1)/(p-n+1)} profile is used and the bound
// equals omega / I^{alpha-1}.
struct RingBound {
  double value = 0.0;
  double alpha = 0.0;
  double closed_form = 0.0;  // omega/I^{alpha-1}, extremal path only
  bool used_extremal = false;
};

RingBound ring_upper_bound(const Weight& Q, std::span<const double> x0, int n,
                           double p, double eps, double eps1,
                           const std::optional<RadialCandidate>& eta,
                           const AnnulusRule& rule,
                           int profile_per_octave = 16);

// ---------------------------------------------------------------------------
// Composite hypothesis checklist for the boundary-extension criteria.

enum class Route { divergence_pair, fmo, loglog_majorant };

struct ExtensionScenario {
  int n = 0;
  double p = 0.0;  // either p or alpha; see CriterionParams
  double alpha = 0.0;
  std::optional<Orlicz> phi;
  std::optional<Mapping> mapping;
  Weight majorant;  // Q
  std::vector<double> x0;
  double r_in = 0.0, r_out = 0.0;  // domination sampling annulus
  double eps0 = 0.5;
  std::vector<Route> routes;
  // declared, never verified: openness/discreteness/closedness and strong
  // accessibility of the image boundary
  bool declared_open = false, declared_discrete = false,
       declared_closed = false, declared_accessible = false;
  int ladder_depth = 20;
  SphereResolution sphere;
  RadialRule radial{32, 8};
  AnnulusSampling domination_sampling;
};

struct ExtensionItem {
  std::string name;
  std::string verdict;
  std::string detail;
  bool ok = false;           // counts toward the overall line
  bool informational = false;
};

struct ExtensionReport {
  std::vector<ExtensionItem> items;
  std::string overall;  // "satisfied" / "not satisfied" / "inconclusive"
  std::optional<PairVerdict> pair;
  std::optional<FmoDiagnostic> fmo;
  std::optional<RatioVerdict> loglog;
  std::optional<CriterionVerdict> calderon;
};

ExtensionReport extension_report(const ExtensionScenario& sc);

// Shared helper: boundedness by the signed least-squares slope of values
// against log log(1/eps).
Boundedness classify_slope(double slope, double bounded_at = 0.05,
                           double unbounded_at = 0.2);

}  // namespace qc
