#include "qc/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "qc/numeric.hpp"

namespace qc {

// ---------------------------------------------------------------------------
// Orlicz

Orlicz Orlicz::power(double q) {
  if (!(q > 0.0)) throw std::invalid_argument("orlicz power: q must be > 0");
  Orlicz o;
  o.kind_ = Kind::power;
  o.q_ = q;
  return o;
}

Orlicz Orlicz::power_log(double q, double a) {
  if (!(q > 0.0)) throw std::invalid_argument("orlicz power_log: q must be > 0");
  Orlicz o;
  o.kind_ = Kind::power_log;
  o.q_ = q;
  o.a_ = a;
  return o;
}

Orlicz Orlicz::table(std::vector<double> t, std::vector<double> v) {
  if (t.size() != v.size() || t.size() < 2)
    throw std::invalid_argument("orlicz table: need >= 2 samples");
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i > 0 && !(t[i] > t[i - 1]))
      throw std::invalid_argument("orlicz table: abscissae not ascending");
    if (v[i] < 0.0) throw std::invalid_argument("orlicz table: negative value");
    if (i > 0 && v[i] < v[i - 1])
      throw std::invalid_argument("orlicz table: not nondecreasing");
  }
  Orlicz o;
  o.kind_ = Kind::table;
  o.t_ = std::move(t);
  o.v_ = std::move(v);
  return o;
}

double Orlicz::operator()(double t) const {
  if (t < 0.0) throw std::domain_error("orlicz: t < 0");
  switch (kind_) {
    case Kind::power:
      return std::pow(t, q_);
    case Kind::power_log:
      return std::pow(t, q_) * std::pow(std::log(std::exp(1.0) + t), a_);
    case Kind::table: {
      if (t < t_.front() || t > t_.back())
        throw std::domain_error("orlicz table: query outside table range");
      auto it = std::upper_bound(t_.begin(), t_.end(), t);
      std::size_t i1 = static_cast<std::size_t>(it - t_.begin());
      if (i1 == 0) i1 = 1;
      if (i1 >= t_.size()) i1 = t_.size() - 1;
      const std::size_t i0 = i1 - 1;
      const double w = (t - t_[i0]) / (t_[i1] - t_[i0]);
      return (1.0 - w) * v_[i0] + w * v_[i1];
    }
  }
  return 0.0;
}

void Orlicz::validate(double t_max) const {
  double prev = -1.0;
  const int steps = 256;
  for (int i = 0; i <= steps; ++i) {
    const double t = std::pow(t_max, static_cast<double>(i) / steps);
    double v;
    try {
      v = (*this)(t);
    } catch (const std::domain_error&) {
      break;  // table shorter than t_max: checked up to its end
    }
    if (v < prev * (1.0 - 1e-12))
      throw std::invalid_argument("orlicz gauge is not nondecreasing");
    prev = v;
  }
}

std::string Orlicz::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::power:
      os << "t^" << q_;
      break;
    case Kind::power_log:
      os << "t^" << q_ << " (log(e+t))^" << a_;
      break;
    case Kind::table:
      os << "table[" << t_.size() << "]";
      break;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Parameters

CriterionParams CriterionParams::from_p(int n, double p) {
  if (n < 2 || n > kMaxDim)
    throw std::invalid_argument("criterion params: n must be in [2, 6]");
  if (!(p > n - 1.0) || !(p <= static_cast<double>(n)))
    throw std::invalid_argument("criterion params: p must be in (n-1, n]");
  CriterionParams c;
  c.n = n;
  c.p = p;
  c.alpha = p / (p - n + 1.0);
  c.s = (n - 1.0) / (p - n + 1.0);
  return c;
}

CriterionParams CriterionParams::from_alpha(int n, double alpha) {
  if (n < 2 || n > kMaxDim)
    throw std::invalid_argument("criterion params: n must be in [2, 6]");
  if (!(alpha >= static_cast<double>(n)))
    throw std::invalid_argument(
        "criterion params: alpha must satisfy alpha >= n");
  // invert alpha = p/(p-n+1)
  const double p = alpha * (n - 1.0) / (alpha - 1.0);
  CriterionParams c = from_p(n, p);
  c.alpha = alpha;  // keep the supplied value bit-exactly
  return c;
}

void CriterionParams::validate() const {
  if (n < 2 || n > kMaxDim)
    throw std::invalid_argument("criterion params: n must be in [2, 6]");
  if (!(alpha > 1.0)) throw std::invalid_argument("criterion params: alpha <= 1");
  if (p > 0.0) {
    const double want = p / (p - n + 1.0);
    if (std::abs(alpha - want) > 1e-9 * std::max(1.0, std::abs(want)))
      throw std::invalid_argument(
          "criterion params: alpha does not match p/(p-n+1)");
    const double s_want = (n - 1.0) / (p - n + 1.0);
    if (s != 0.0 && std::abs(s - s_want) > 1e-9 * std::max(1.0, s_want))
      throw std::invalid_argument(
          "criterion params: s does not match (n-1)/(p-n+1)");
  }
  if (s < 0.0) throw std::invalid_argument("criterion params: s < 0");
}

// ---------------------------------------------------------------------------
// Classifier

const char* to_string(Classification c) {
  switch (c) {
    case Classification::convergent:
      return "convergent";
    case Classification::divergent:
      return "divergent";
    case Classification::inconclusive:
      return "inconclusive";
    case Classification::not_applicable:
      return "not_applicable";
  }
  return "?";
}

const char* to_string(Boundedness b) {
  switch (b) {
    case Boundedness::bounded:
      return "bounded";
    case Boundedness::unbounded:
      return "unbounded";
    case Boundedness::inconclusive:
      return "inconclusive";
  }
  return "?";
}

const char* to_string(Vanishing v) {
  switch (v) {
    case Vanishing::vanishes:
      return "vanishes";
    case Vanishing::does_not:
      return "does_not_vanish";
    case Vanishing::inconclusive:
      return "inconclusive";
    case Vanishing::not_applicable:
      return "not_applicable";
  }
  return "?";
}

CriterionVerdict classify_increments(std::vector<LadderRung> ladder,
                                     const ClassifierConfig& cfg) {
  CriterionVerdict v;
  v.ladder = std::move(ladder);

  bool any_infinite = false;
  double total = 0.0;
  for (LadderRung& r : v.ladder) {
    if (!r.finite || !std::isfinite(r.increment)) {
      r.finite = false;
      any_infinite = true;
    } else {
      total += r.increment;
    }
    r.partial = total;
  }
  v.value = total;

  if (any_infinite) {
    v.cls = Classification::divergent;
    v.note = "divergent: infinite rung";
    return v;
  }
  const int K = static_cast<int>(v.ladder.size());
  if (K < cfg.min_rungs) {
    v.cls = Classification::inconclusive;
    v.note = "fewer than " + std::to_string(cfg.min_rungs) + " resolved rungs";
    return v;
  }

  // Trailing increments that underflowed to zero mean the tail vanished.
  int end = K;
  while (end > 0 && v.ladder[end - 1].increment <= 0.0) --end;
  if (end <= K - 2) {
    v.cls = Classification::convergent;
    v.limit_ratio = 0.0;
    v.note = "tail increments vanished";
    return v;
  }

  // Increment ratios over the trailing window, extrapolated to the limit by
  // a least-squares fit rho_k = rho_inf + c/k.
  std::vector<double> xs, ys;
  const int last_den = end - 2;  // ratio uses rungs (i, i+1)
  const int first_den = std::max(0, last_den - cfg.fit_window + 1);
  for (int i = first_den; i <= last_den; ++i) {
    const double a = v.ladder[i].increment, b = v.ladder[i + 1].increment;
    if (a > 0.0 && b > 0.0) {
      xs.push_back(1.0 / static_cast<double>(i + 1));
      ys.push_back(b / a);
    }
  }
  if (xs.size() < 3) {
    v.cls = Classification::inconclusive;
    v.note = "too few usable increment ratios";
    return v;
  }
  const LineFit fit = fit_line(xs, ys);
  v.limit_ratio = fit.intercept;
  v.fit_residual = fit.rms_residual;

  if (fit.rms_residual > cfg.fit_residual_max) {
    v.cls = Classification::inconclusive;
    v.note = "increment ratios are not geometric (fit residual " +
             std::to_string(fit.rms_residual) + ")";
    return v;
  }
  if (v.limit_ratio >= cfg.theta_div) {
    v.cls = Classification::divergent;
    v.note = "limit increment ratio " + std::to_string(v.limit_ratio);
    return v;
  }
  if (v.limit_ratio <= cfg.theta_conv) {
    const double rho = std::min(std::max(v.limit_ratio, ys.back()), 0.999);
    const double tail =
        v.ladder[end - 1].increment * rho / std::max(1.0 - rho, 1e-6);
    if (tail <= cfg.tail_rel_tol * std::max(total, 1e-300)) {
      v.cls = Classification::convergent;
      v.note = "geometric tail bound " + std::to_string(tail);
      return v;
    }
    v.cls = Classification::inconclusive;
    v.note = "ratios small but tail bound not met";
    return v;
  }
  v.cls = Classification::inconclusive;
  v.note = "limit increment ratio " + std::to_string(v.limit_ratio) +
           " between thresholds";
  return v;
}

// ---------------------------------------------------------------------------
// Calderon

CriterionVerdict calderon_test(const Orlicz& phi, int n,
                               const TailLadder& ladder,
                               const ClassifierConfig& cfg) {
  if (n < 2 || n > kMaxDim)
    throw std::invalid_argument("calderon: n must be in [2, 6]");
  if (n == 2) {
    CriterionVerdict v;
    v.cls = Classification::not_applicable;
    v.note = "gauge condition is void in the plane";
    return v;
  }
  phi.validate(std::pow(2.0, std::min(ladder.depth, 50)));

  const double expo = 1.0 / (n - 2.0);
  std::vector<LadderRung> rungs;
  for (int k = 1; k <= ladder.depth; ++k) {
    const double lo = std::pow(2.0, k - 1.0);
    const double hi = std::pow(2.0, static_cast<double>(k));
    LadderRung rung;
    rung.endpoint = hi;
    try {
      rung.increment =
          radial_integral(ladder.rung_rule, lo, hi, [&](double t) {
            const double ph = phi(t);
            if (!(ph > 0.0)) return std::numeric_limits<double>::infinity();
            return std::pow(t / ph, expo);
          });
      rung.finite = std::isfinite(rung.increment);
    } catch (const std::domain_error&) {
      // table gauge exhausted: classify on the rungs we have
      break;
    }
    rungs.push_back(rung);
  }
  CriterionVerdict v = classify_increments(std::move(rungs), cfg);
  if (static_cast<int>(v.ladder.size()) < ladder.depth)
    v.note += " [ladder truncated at gauge table end]";
  return v;
}

// ---------------------------------------------------------------------------
// Twin criterion

PairVerdict divergence_pair_test(const RadialProfile& q,
                                 const CriterionParams& params,
                                 const ZeroLadder& ladder,
                                 const ClassifierConfig& cfg) {
  params.validate();
  if (!(ladder.eps0 > 0.0))
    throw std::invalid_argument("divergence pair: eps0 <= 0");
  const double er = (params.n - 1.0) / (params.alpha - 1.0);
  const double eq = 1.0 / (params.alpha - 1.0);
  const auto integrand = [&](double t) {
    const double qv = q(t);
    if (!(qv > 0.0)) return std::numeric_limits<double>::infinity();
    return std::pow(t, -er) * std::pow(qv, -eq);
  };

  std::vector<LadderRung> rungs;
  for (int k = 1; k <= ladder.depth; ++k) {
    const double hi = ladder.eps0 * std::pow(2.0, 1.0 - k);
    const double lo = 0.5 * hi;
    LadderRung rung;
    rung.endpoint = lo;
    rung.increment = radial_integral(ladder.rung_rule, lo, hi, integrand);
    rung.finite = std::isfinite(rung.increment);
    rungs.push_back(rung);
  }

  PairVerdict out;
  out.divergence_part = classify_increments(rungs, cfg);

  // Fixed-eps integral over [eps_depth, eps0]: finite iff every rung is.
  CriterionVerdict fin;
  fin.ladder = rungs;
  bool all_finite = true;
  double total = 0.0;
  for (const LadderRung& r : rungs) {
    if (!r.finite) all_finite = false;
    else total += r.increment;
  }
  fin.value = total;
  fin.cls = all_finite ? Classification::convergent : Classification::divergent;
  fin.note = all_finite ? "finite on [eps, eps0]"
                        : "integrand not integrable on [eps, eps0]";
  out.finite_part = fin;

  out.satisfied = all_finite &&
                  out.divergence_part.cls == Classification::divergent;
  return out;
}

// ---------------------------------------------------------------------------
// Boundedness helpers

Boundedness classify_slope(double slope, double bounded_at,
                           double unbounded_at) {
  if (slope <= bounded_at) return Boundedness::bounded;
  if (slope >= unbounded_at) return Boundedness::unbounded;
  return Boundedness::inconclusive;
}

RatioVerdict loglog_majorant_check(const RadialProfile& q, int n,
                                   const ZeroLadder& ladder) {
  if (!(ladder.eps0 < 1.0))
    throw std::invalid_argument("loglog majorant: radii must be < 1");
  RatioVerdict out;
  std::vector<double> xs;
  for (int k = 1; k <= ladder.depth; ++k) {
    const double r = ladder.eps0 * std::pow(2.0, -static_cast<double>(k));
    const double lg = std::log(1.0 / r);
    out.r.push_back(r);
    out.ratio.push_back(q(r) / std::pow(lg, n - 1.0));
    xs.push_back(std::log(lg));
  }
  out.sup = *std::max_element(out.ratio.begin(), out.ratio.end());
  const LineFit fit = fit_line(xs, out.ratio);
  out.slope = fit.slope;
  out.cls = classify_slope(fit.slope);
  return out;
}

FmoDiagnostic fmo_diagnostic(const Weight& Q, std::span<const double> x0,
                             const ZeroLadder& ladder, const BallRule& rule) {
  FmoDiagnostic out;
  std::vector<double> xs, ys;
  for (int k = 1; k <= ladder.depth; ++k) {
    const double eps = ladder.eps0 * std::pow(2.0, -static_cast<double>(k));
    double osc;
    try {
      osc = ball_mean_oscillation(Q, x0, eps, rule);
    } catch (const std::domain_error& e) {
      out.cls = Boundedness::unbounded;
      out.note = std::string("integrability failure: ") + e.what();
      return out;
    }
    out.eps.push_back(eps);
    out.osc.push_back(osc);
    if (!std::isfinite(osc)) {
      out.cls = Boundedness::unbounded;
      out.note = "integrability failure: non-finite oscillation at eps = " +
                 std::to_string(eps);
      return out;
    }
    const double lg = std::log(1.0 / eps);
    if (lg > 1.0) {
      xs.push_back(std::log(lg));
      ys.push_back(osc);
    }
  }
  if (xs.size() < 4) {
    out.note = "too few rungs below eps = 1/e";
    return out;
  }
  const LineFit fit = fit_line(xs, ys);
  out.slope = fit.slope;
  out.cls = classify_slope(fit.slope);
  const std::size_t half = ys.size() / 2;
  out.limsup_estimate =
      *std::max_element(ys.begin() + static_cast<std::ptrdiff_t>(half), ys.end());
  return out;
}

LogLogBound fmo_loglog_bound(const Weight& Q, std::span<const double> x0,
                             double e0, const ZeroLadder& ladder, int n,
                             const AnnulusRule& rule) {
  if (!(e0 > 0.0) || !(e0 < 1.0))
    throw std::invalid_argument("loglog bound: need 0 < e0 < 1");
  LogLogBound out;
  const auto radial = [n](double r) {
    return std::pow(r * std::log(1.0 / r), -static_cast<double>(n));
  };
  double lhs = 0.0;
  double hi = e0;
  for (int k = 1; k <= ladder.depth; ++k) {
    const double eps = e0 * std::pow(2.0, -static_cast<double>(k));
    lhs += annulus_integral(Q, 1.0, radial, x0, eps, hi, rule).value;
    hi = eps;
    const double lg = std::log(1.0 / eps);
    if (lg <= 1.05) continue;  // log log not yet positive
    out.eps.push_back(eps);
    out.lhs.push_back(lhs);
    out.ratio.push_back(lhs / std::log(lg));
  }
  if (out.ratio.size() < 4) {
    out.note = "too few usable rungs";
    return out;
  }
  // trailing window: skip the first 4 usable rungs
  const std::size_t start = std::min<std::size_t>(4, out.ratio.size() - 2);
  double lo = std::numeric_limits<double>::infinity(), hi_ratio = 0.0;
  for (std::size_t i = start; i < out.ratio.size(); ++i) {
    if (!std::isfinite(out.ratio[i])) {
      out.cls = Boundedness::unbounded;
      out.note = "non-finite mass";
      return out;
    }
    lo = std::min(lo, out.ratio[i]);
    hi_ratio = std::max(hi_ratio, out.ratio[i]);
  }
  out.band_factor = lo > 0.0 ? hi_ratio / lo
                             : std::numeric_limits<double>::infinity();
  if (out.band_factor <= 2.0) {
    out.cls = Boundedness::bounded;
  } else if (out.ratio.back() <= out.ratio[start]) {
    // mass converged and the ratio decays toward 0
    out.cls = Boundedness::bounded;
    out.note = "ratio decays; band factor reflects the decay";
  } else {
    out.cls = Boundedness::unbounded;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Little-o test

LittleOResult little_o_test(const Weight& Q, std::span<const double> x0,
                            const TestWeightSpec& psi,
                            const CriterionParams& params, double eps0,
                            const ZeroLadder& ladder, const AnnulusRule& rule) {
  params.validate();
  std::function<double(double)> psi_fn = psi.psi;
  if (!psi_fn) {
    if (!(eps0 < 1.0))
      throw std::invalid_argument("little-o: default psi needs eps0 < 1");
    const double expo = params.n / params.alpha;
    psi_fn = [expo](double t) {
      return std::pow(t * std::log(1.0 / t), -expo);
    };
  }
  const double alpha = params.alpha;
  const auto psi_alpha = [&](double r) { return std::pow(psi_fn(r), alpha); };

  LittleOResult out;
  std::vector<LadderRung> i_rungs;
  double numer = 0.0, ival = 0.0;
  double hi = eps0;
  for (int k = 1; k <= ladder.depth; ++k) {
    const double eps = eps0 * std::pow(2.0, -static_cast<double>(k));
    const double di = radial_integral(ladder.rung_rule, eps, hi, psi_fn);
    if (!std::isfinite(di) || di < 0.0) {
      out.note += "rung " + std::to_string(k) + " skipped (I not finite); ";
      hi = eps;
      continue;
    }
    const double dn =
        annulus_integral(Q, params.s, psi_alpha, x0, eps, hi, rule).value;
    hi = eps;
    ival += di;
    numer += dn;
    LadderRung rung;
    rung.endpoint = eps;
    rung.increment = di;
    rung.finite = true;
    i_rungs.push_back(rung);
    if (!(ival > 0.0)) {
      out.note += "rung " + std::to_string(k) + " skipped (I = 0); ";
      continue;
    }
    out.eps.push_back(eps);
    out.ival.push_back(ival);
    out.numer.push_back(numer);
    out.ratio.push_back(numer / std::pow(ival, alpha));
  }

  // The test is vacuous unless I(eps, eps0) -> infinity.
  const CriterionVerdict iverdict = classify_increments(std::move(i_rungs));
  if (iverdict.cls != Classification::divergent) {
    out.cls = Vanishing::not_applicable;
    out.note += "I(eps, eps0) does not diverge as eps -> 0";
    return out;
  }
  if (out.ratio.size() < 4) {
    out.cls = Vanishing::inconclusive;
    out.note += "too few resolved rungs";
    return out;
  }
  bool monotone = true;
  for (std::size_t i = 1; i < out.ratio.size(); ++i)
    if (out.ratio[i] > out.ratio[i - 1] * (1.0 + 1e-12)) monotone = false;
  const double first = out.ratio.front(), last = out.ratio.back();
  if (monotone && last < 0.1 * first) {
    out.cls = Vanishing::vanishes;
  } else if (last >= 0.9 * first) {
    out.cls = Vanishing::does_not;
  } else {
    out.cls = Vanishing::inconclusive;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Extremal weight and the lower-bound identity

ExtremalWeight extremal_weight(const RadialProfile& q, int n, double p,
                               double r1, double r2, const RadialRule& rule) {
  if (!(p > 1.0)) throw std::invalid_argument("extremal weight: p must be > 1");
  if (!(r1 > 0.0) || !(r2 > r1))
    throw std::invalid_argument("extremal weight: need 0 < r1 < r2");
  ExtremalWeight ew;
  ew.n = n;
  ew.p = p;
  ew.r1 = r1;
  ew.r2 = r2;
  ew.exp_r = (n - 1.0) / (p - 1.0);
  ew.exp_q = 1.0 / (p - 1.0);
  ew.q = q;

  const RadialGrid grid = radial_nodes(rule, r1, r2);
  std::vector<double> g(grid.r.size());
  for (std::size_t i = 0; i < grid.r.size(); ++i) {
    const double qv = q(grid.r[i]);
    if (!(qv > 0.0))
      throw std::invalid_argument(
          "extremal weight: profile must be positive on [r1, r2]");
    g[i] = std::pow(grid.r[i], -ew.exp_r) * std::pow(qv, -ew.exp_q);
  }
  std::vector<double> weighted(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) weighted[i] = grid.w[i] * g[i];
  ew.I = pairwise_sum(weighted);
  if (!(ew.I > 0.0) || !std::isfinite(ew.I))
    throw std::invalid_argument("extremal weight: normalizing integral not positive");

  ew.r = grid.r;
  ew.eta0.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) ew.eta0[i] = g[i] / ew.I;
  return ew;
}

double ExtremalWeight::operator()(double rr) const {
  const double qv = q(rr);
  if (!(qv > 0.0))
    throw std::domain_error("extremal weight: profile not positive");
  return std::pow(rr, -exp_r) * std::pow(qv, -exp_q) / I;
}

IdentityCheck lower_bound_identity_check(
    const Weight& Q, std::span<const double> x0, int n, double p, double r1,
    double r2, const std::vector<RadialCandidate>& alternatives,
    const AnnulusRule& rule, int profile_per_octave) {
  const RadialProfile q = mean_profile(Q, x0, r1 * (1.0 - 1e-3),
                                       r2 * (1.0 + 1e-3), profile_per_octave,
                                       rule.sphere);
  IdentityCheck out;
  out.eta0 = extremal_weight(q, n, p, r1, r2, rule.radial);
  const double omega = DimensionConstants::make(n).omega;
  out.lhs = omega / std::pow(out.eta0.I, p - 1.0);

  const ExtremalWeight& ew = out.eta0;
  out.rhs0 = annulus_integral(
                 Q, 1.0, [&](double r) { return std::pow(ew(r), p); }, x0, r1,
                 r2, rule)
                 .value;
  out.rel_err = std::abs(out.lhs - out.rhs0) / std::max(std::abs(out.lhs), 1e-300);

  for (const RadialCandidate& cand : alternatives) {
    const double norm = radial_integral(rule.radial, r1, r2, cand.eta);
    if (std::abs(norm - 1.0) > 1e-6) {
      std::ostringstream os;
      os << "candidate '" << cand.name
         << "' is not admissible: integral over (r1, r2) = " << norm
         << " (must be 1)";
      throw std::invalid_argument(os.str());
    }
    const double rhs =
        annulus_integral(
            Q, 1.0, [&](double r) { return std::pow(cand.eta(r), p); }, x0, r1,
            r2, rule)
            .value;
    out.rhs_alt.push_back(rhs);
    out.alt_margin.push_back(rhs - out.rhs0);
  }
  return out;
}

RingBound ring_upper_bound(const Weight& Q, std::span<const double> x0, int n,
                           double p, double eps, double eps1,
                           const std::optional<RadialCandidate>& eta,
                           const AnnulusRule& rule, int profile_per_octave) {
  if (!(p > n - 1.0) || !(p <= static_cast<double>(n)))
    throw std::invalid_argument("ring bound: p must be in (n-1, n]");
  if (!(eps > 0.0) || !(eps1 > eps))
    throw std::invalid_argument("ring bound: need 0 < eps < eps1");
  const double expo = (n - 1.0) / (p - n + 1.0);
  const double alpha = p / (p - n + 1.0);
  RingBound out;
  out.alpha = alpha;

  if (eta.has_value()) {
    const double norm = radial_integral(rule.radial, eps, eps1, eta->eta);
    if (std::abs(norm - 1.0) > 1e-6) {
      std::ostringstream os;
      os << "ring bound: eta '" << eta->name
         << "' violates the unit-integral normalization (integral = " << norm
         << ")";
      throw std::invalid_argument(os.str());
    }
    out.value = annulus_integral(
                    Q, expo,
                    [&](double r) { return std::pow(eta->eta(r), alpha); }, x0,
                    eps, eps1, rule)
                    .value;
    return out;
  }

  // extremal path: eta0 built from the Q^{(n-1)/(p-n+1)} profile
  const RadialProfile qt =
      mean_profile(Q, x0, eps * (1.0 - 1e-3), eps1 * (1.0 + 1e-3),
                   profile_per_octave, rule.sphere, expo);
  const ExtremalWeight ew = extremal_weight(qt, n, alpha, eps, eps1, rule.radial);
  out.used_extremal = true;
  out.value = annulus_integral(
                  Q, expo, [&](double r) { return std::pow(ew(r), alpha); },
                  x0, eps, eps1, rule)
                  .value;
  out.closed_form =
      DimensionConstants::make(n).omega / std::pow(ew.I, alpha - 1.0);
  return out;
}

// ---------------------------------------------------------------------------
// Extension report

namespace {

ExtensionItem declared_item(const std::string& name, bool declared) {
  ExtensionItem it;
  it.name = name;
  it.verdict = declared ? "declared by user" : "not declared";
  it.ok = declared;
  it.informational = true;
  return it;
}

}  // namespace

ExtensionReport extension_report(const ExtensionScenario& sc) {
  if (!sc.majorant.valid())
    throw std::invalid_argument("extension report: majorant weight missing");
  if (sc.routes.empty())
    throw std::invalid_argument("extension report: no criteria selected");
  CriterionParams params = sc.p > 0.0
                               ? CriterionParams::from_p(sc.n, sc.p)
                               : CriterionParams::from_alpha(sc.n, sc.alpha);
  if (sc.p > 0.0 && sc.alpha > 0.0 &&
      std::abs(sc.alpha - params.alpha) > 1e-9 * params.alpha)
    throw std::invalid_argument(
        "extension report: alpha does not match p/(p-n+1)");

  ExtensionReport rep;
  rep.items.push_back(declared_item("mapping open", sc.declared_open));
  rep.items.push_back(declared_item("mapping discrete", sc.declared_discrete));
  rep.items.push_back(declared_item("mapping closed", sc.declared_closed));
  rep.items.push_back(declared_item("image boundary strongly accessible",
                                    sc.declared_accessible));

  ZeroLadder ladder;
  ladder.eps0 = sc.eps0;
  ladder.depth = sc.ladder_depth;
  const SphereRule sphere = make_sphere_rule(sc.n, sc.sphere);

  // Gauge condition on the Sobolev class.
  {
    ExtensionItem it;
    it.name = "gauge integral";
    if (sc.n == 2) {
      it.verdict = "not_applicable";
      it.detail = "no gauge condition in the plane";
      it.ok = true;
    } else if (!sc.phi.has_value()) {
      it.verdict = "missing";
      it.detail = "no gauge supplied for n >= 3";
      it.ok = false;
    } else {
      rep.calderon = calderon_test(*sc.phi, sc.n);
      it.verdict = to_string(rep.calderon->cls);
      it.ok = rep.calderon->cls == Classification::convergent;
      it.detail = rep.calderon->note;
    }
    rep.items.push_back(it);
  }

  // Sampled domination K_{I,alpha} <= Q over the annulus lattice.
  if (sc.mapping.has_value()) {
    ExtensionItem it;
    it.name = "majorant domination (sampled)";
    AnnulusSampling sampling = sc.domination_sampling;
    sampling.angular = sc.sphere;
    const FieldSummary field =
        dilatation_field(*sc.mapping, sc.x0, sc.r_in, sc.r_out, params.alpha,
                         sampling);
    std::size_t violations = 0;
    double min_q = std::numeric_limits<double>::infinity();
    for (const DilatationSample& smp : field.samples) {
      const double qv = sc.majorant(smp.point);
      min_q = std::min(min_q, qv);
      const bool dominated =
          !smp.k_inner.infinite &&
          smp.k_inner.value <= qv * (1.0 + 1e-9) + 1e-12;
      if (!dominated) ++violations;
    }
    it.ok = violations == 0 && min_q >= 0.0;
    std::ostringstream os;
    os << violations << " of " << field.samples.size()
       << " lattice samples violate K <= Q";
    if (min_q < 0.0) os << "; majorant negative on lattice";
    it.detail = os.str();
    it.verdict = it.ok ? "holds on samples" : "violated";
    rep.items.push_back(it);
  } else {
    ExtensionItem it;
    it.name = "majorant domination (sampled)";
    it.verdict = "skipped";
    it.detail = "no mapping supplied; majorant taken as given";
    it.informational = true;
    it.ok = true;
    rep.items.push_back(it);
  }

  // Sufficient-condition routes; one passing route suffices.
  bool any_route_ok = false, any_route_inconclusive = false;
  for (Route route : sc.routes) {
    ExtensionItem it;
    switch (route) {
      case Route::divergence_pair: {
        it.name = "twin integral criterion";
        const double r_lo = sc.eps0 * std::pow(2.0, -ladder.depth - 2.0);
        const RadialProfile prof =
            mean_profile(sc.majorant, sc.x0, r_lo, sc.eps0 * 1.0001, 8, sphere);
        rep.pair = divergence_pair_test(prof, params, ladder);
        it.ok = rep.pair->satisfied;
        it.verdict = it.ok ? "satisfied" : "not satisfied";
        it.detail = "finite part: " +
                    std::string(to_string(rep.pair->finite_part.cls)) +
                    ", behavior toward 0: " +
                    std::string(to_string(rep.pair->divergence_part.cls));
        if (rep.pair->divergence_part.cls == Classification::inconclusive)
          it.verdict = "inconclusive";
        break;
      }
      case Route::fmo: {
        it.name = "finite mean oscillation";
        BallRule ball{sc.radial, sphere};
        rep.fmo = fmo_diagnostic(sc.majorant, sc.x0, ladder, ball);
        it.ok = rep.fmo->cls == Boundedness::bounded;
        it.verdict = rep.fmo->cls == Boundedness::bounded
                         ? "FMO-positive"
                         : (rep.fmo->cls == Boundedness::unbounded
                                ? "FMO-negative"
                                : "inconclusive");
        std::ostringstream os;
        os << "slope " << rep.fmo->slope << " vs log log(1/eps)";
        it.detail = os.str();
        break;
      }
      case Route::loglog_majorant: {
        it.name = "log-log growth of the spherical mean";
        const double r_lo = sc.eps0 * std::pow(2.0, -ladder.depth - 2.0);
        const RadialProfile prof =
            mean_profile(sc.majorant, sc.x0, r_lo, sc.eps0 * 1.0001, 8, sphere);
        rep.loglog = loglog_majorant_check(prof, sc.n, ladder);
        it.ok = rep.loglog->cls == Boundedness::bounded;
        it.verdict = to_string(rep.loglog->cls);
        std::ostringstream os;
        os << "sup ratio " << rep.loglog->sup << ", slope " << rep.loglog->slope;
        it.detail = os.str();
        break;
      }
    }
    if (it.ok) any_route_ok = true;
    else if (it.verdict == "inconclusive") any_route_inconclusive = true;
    rep.items.push_back(it);
  }

  bool prerequisites_ok = true, prerequisites_inconclusive = false;
  for (const ExtensionItem& it : rep.items) {
    if (it.informational) continue;
    if (it.name == "gauge integral" || it.name == "majorant domination (sampled)") {
      if (!it.ok) {
        if (it.verdict == "inconclusive") prerequisites_inconclusive = true;
        else prerequisites_ok = false;
      }
    }
  }
  if (!prerequisites_ok) {
    rep.overall = "not satisfied";
  } else if (any_route_ok && !prerequisites_inconclusive) {
    rep.overall = "satisfied";
  } else if (any_route_inconclusive || prerequisites_inconclusive) {
    rep.overall = "inconclusive";
  } else {
    rep.overall = "not satisfied";
  }
  return rep;
}

}  // namespace qc
