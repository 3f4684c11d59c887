#include "qc/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "qc/dilatation.hpp"
#include "qc/numeric.hpp"

namespace qc {

SphereResolution SphereResolution::scaled(int factor) const {
  SphereResolution s = *this;
  s.m *= factor;
  s.m1 *= factor;
  s.m2 *= factor;
  s.mc_samples *= factor;
  return s;
}

SphereResolution SphereResolution::halved() const {
  SphereResolution s = *this;
  s.m = std::max(4, s.m / 2);
  s.m1 = std::max(2, s.m1 / 2);
  s.m2 = std::max(4, s.m2 / 2);
  s.mc_samples = std::max(16, s.mc_samples / 2);
  return s;
}

SphereRule make_sphere_rule(int n, const SphereResolution& res) {
  if (n < 2 || n > kMaxDim)
    throw std::invalid_argument("sphere rule: n must be in [2, 6]");
  SphereRule rule;
  rule.n = n;
  const double omega = DimensionConstants::make(n).omega;

  if (n == 2) {
    if (res.m < 4) throw std::invalid_argument("sphere rule: m < 4");
    rule.dirs.resize(2 * res.m);
    rule.w.assign(res.m, omega / res.m);
    for (int i = 0; i < res.m; ++i) {
      const double t = 2.0 * std::numbers::pi * i / res.m;
      rule.dirs[2 * i] = std::cos(t);
      rule.dirs[2 * i + 1] = std::sin(t);
    }
    return rule;
  }

  if (n == 3) {
    if (res.m1 < 2 || res.m2 < 4)
      throw std::invalid_argument("sphere rule: m1 < 2 or m2 < 4");
    const GaussRule& gl = gauss_legendre(res.m1);
    rule.dirs.resize(3 * res.m1 * res.m2);
    rule.w.resize(res.m1 * res.m2);
    std::size_t k = 0;
    for (int i = 0; i < res.m1; ++i) {
      const double u = gl.x[i];  // cos(polar)
      const double su = std::sqrt(std::max(0.0, 1.0 - u * u));
      for (int j = 0; j < res.m2; ++j) {
        const double phi = 2.0 * std::numbers::pi * j / res.m2;
        rule.dirs[3 * k] = su * std::cos(phi);
        rule.dirs[3 * k + 1] = su * std::sin(phi);
        rule.dirs[3 * k + 2] = u;
        rule.w[k] = gl.w[i] * (2.0 * std::numbers::pi / res.m2);
        ++k;
      }
    }
    return rule;
  }

  // n >= 4: normalized Gaussian directions, fixed seed recorded in reports.
  if (res.mc_samples < 16)
    throw std::invalid_argument("sphere rule: mc_samples < 16");
  if (res.seed == 0)
    throw std::invalid_argument("sphere rule: seed required for n >= 4");
  rule.monte_carlo = true;
  rule.seed = res.seed;
  rule.dirs.resize(static_cast<std::size_t>(n) * res.mc_samples);
  rule.w.assign(res.mc_samples, omega / res.mc_samples);
  Rng rng(res.seed);
  for (int i = 0; i < res.mc_samples; ++i) {
    double norm2 = 0.0;
    do {
      norm2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double g = rng.normal();
        rule.dirs[static_cast<std::size_t>(i) * n + j] = g;
        norm2 += g * g;
      }
    } while (norm2 < 1e-24);
    const double inv = 1.0 / std::sqrt(norm2);
    for (int j = 0; j < n; ++j)
      rule.dirs[static_cast<std::size_t>(i) * n + j] *= inv;
  }
  return rule;
}

RadialGrid radial_nodes(const RadialRule& rule, double a, double b) {
  if (!(a > 0.0) || !(b > a))
    throw std::invalid_argument("radial rule: need 0 < a < b");
  if (rule.panels < 1 || rule.gauss < 1)
    throw std::invalid_argument("radial rule: bad resolution");
  const GaussRule& gl = gauss_legendre(rule.gauss);
  RadialGrid grid;
  grid.r.reserve(static_cast<std::size_t>(rule.panels) * rule.gauss);
  grid.w.reserve(grid.r.capacity());
  const double lr = std::log(b / a);
  for (int p = 0; p < rule.panels; ++p) {
    const double lo = a * std::exp(lr * p / rule.panels);
    const double hi = a * std::exp(lr * (p + 1) / rule.panels);
    const double mid = 0.5 * (hi + lo), half = 0.5 * (hi - lo);
    for (int i = 0; i < rule.gauss; ++i) {
      grid.r.push_back(mid + half * gl.x[i]);
      grid.w.push_back(half * gl.w[i]);
    }
  }
  return grid;
}

double radial_integral(const RadialRule& rule, double a, double b,
                       const std::function<double(double)>& f) {
  const RadialGrid g = radial_nodes(rule, a, b);
  return map_sum(g.r.size(),
                 [&](std::size_t i) { return g.w[i] * f(g.r[i]); });
}

namespace {

// Per-node values of fn(node point) with weights applied; the caller reduces.
template <class Fn>
QuadResult sphere_reduce(const SphereRule& rule, std::span<const double> x0,
                         double r, Fn&& fn) {
  const int n = rule.n;
  if (!x0.empty() && static_cast<int>(x0.size()) != n)
    throw std::invalid_argument("sphere quadrature: center dimension mismatch");
  if (!(r > 0.0)) throw std::invalid_argument("sphere quadrature: r <= 0");
  const double rpow = std::pow(r, n - 1);
  std::vector<double> vals = map_values(rule.size(), [&](std::size_t i) {
    double pt[kMaxDim];
    for (int j = 0; j < n; ++j)
      pt[j] = (x0.empty() ? 0.0 : x0[j]) + r * rule.dirs[i * n + j];
    return fn(std::span<const double>(pt, n));
  });
  std::vector<double> weighted(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i)
    weighted[i] = rule.w[i] * rpow * vals[i];
  QuadResult res;
  res.value = pairwise_sum(weighted);
  if (rule.monte_carlo) {
    // equal weights: SE of the integral = omega r^{n-1} std(vals)/sqrt(N)
    const double N = static_cast<double>(vals.size());
    const double mean = pairwise_sum(vals) / N;
    std::vector<double> sq(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double d = vals[i] - mean;
      sq[i] = d * d;
    }
    const double var = pairwise_sum(sq) / (N - 1.0);
    const double omega = pairwise_sum(rule.w);
    res.std_error = omega * rpow * std::sqrt(var / N);
  }
  return res;
}

}  // namespace

QuadResult sphere_integral(const Weight& Q, std::span<const double> x0,
                           double r, const SphereRule& rule) {
  return sphere_reduce(rule, x0, r,
                       [&](std::span<const double> x) { return Q(x); });
}

QuadResult sphere_mean(const Weight& Q, std::span<const double> x0, double r,
                       const SphereRule& rule) {
  QuadResult res = sphere_integral(Q, x0, r, rule);
  const double denom =
      DimensionConstants::make(rule.n).omega * std::pow(r, rule.n - 1);
  res.value /= denom;
  res.std_error /= denom;
  return res;
}

double sphere_ls_norm(const Weight& Q, std::span<const double> x0, double r,
                      double s, const SphereRule& rule) {
  if (!(s > 0.0)) throw std::invalid_argument("sphere_ls_norm: s <= 0");
  const QuadResult res = sphere_reduce(
      rule, x0, r,
      [&](std::span<const double> x) { return std::pow(Q(x), s); });
  return std::pow(res.value, 1.0 / s);
}

double ball_mean_oscillation(const Weight& Q, std::span<const double> x0,
                             double eps, const BallRule& rule) {
  if (!(eps > 0.0)) throw std::invalid_argument("ball oscillation: eps <= 0");
  const int n = rule.sphere.n;
  const RadialGrid rad = radial_nodes(rule.radial, kMinRadius, eps);
  const std::size_t ns = rule.sphere.size();
  const std::size_t total = rad.r.size() * ns;

  std::vector<double> vals = map_values(total, [&](std::size_t k) {
    const std::size_t ir = k / ns, is = k % ns;
    double pt[kMaxDim];
    for (int j = 0; j < n; ++j)
      pt[j] = (x0.empty() ? 0.0 : x0[j]) +
              rad.r[ir] * rule.sphere.dirs[is * n + j];
    return Q(std::span<const double>(pt, n));
  });
  std::vector<double> wts(total);
  for (std::size_t k = 0; k < total; ++k) {
    const std::size_t ir = k / ns, is = k % ns;
    wts[k] = rad.w[ir] * std::pow(rad.r[ir], n - 1) * rule.sphere.w[is];
  }
  const double mass = pairwise_sum(wts);
  // deviations are taken against the first node value, so a constant field
  // yields exactly zero at every step
  const double ref = vals[0];
  std::vector<double> prod(total);
  for (std::size_t k = 0; k < total; ++k) prod[k] = wts[k] * (vals[k] - ref);
  const double mean_dev = pairwise_sum(prod) / mass;
  for (std::size_t k = 0; k < total; ++k)
    prod[k] = wts[k] * std::abs(vals[k] - ref - mean_dev);
  return pairwise_sum(prod) / mass;
}

QuadResult annulus_integral(const Weight& Q, double q_exp,
                            const std::function<double(double)>& radial,
                            std::span<const double> x0, double r1, double r2,
                            const AnnulusRule& rule) {
  if (!(r1 < r2)) throw std::invalid_argument("annulus_integral: r1 >= r2");
  const double a = std::max(r1, kMinRadius);
  const int n = rule.sphere.n;
  const RadialGrid rad = radial_nodes(rule.radial, a, r2);
  const std::size_t ns = rule.sphere.size();
  const std::size_t total = rad.r.size() * ns;

  std::vector<double> vals = map_values(total, [&](std::size_t k) {
    const std::size_t ir = k / ns, is = k % ns;
    double pt[kMaxDim];
    for (int j = 0; j < n; ++j)
      pt[j] = (x0.empty() ? 0.0 : x0[j]) +
              rad.r[ir] * rule.sphere.dirs[is * n + j];
    const double q = Q(std::span<const double>(pt, n));
    return q_exp == 1.0 ? q : std::pow(q, q_exp);
  });
  std::vector<double> weighted(total);
  for (std::size_t k = 0; k < total; ++k) {
    const std::size_t ir = k / ns, is = k % ns;
    const double rfac = radial ? radial(rad.r[ir]) : 1.0;
    weighted[k] = rad.w[ir] * std::pow(rad.r[ir], n - 1) * rfac *
                  rule.sphere.w[is] * vals[k];
  }
  QuadResult res;
  res.value = pairwise_sum(weighted);
  if (rule.sphere.monte_carlo) {
    // per-radius standard errors combined in quadrature
    std::vector<double> sq(total);
    const double N = static_cast<double>(ns);
    for (std::size_t ir = 0; ir < rad.r.size(); ++ir) {
      double mean = 0.0;
      for (std::size_t is = 0; is < ns; ++is) mean += vals[ir * ns + is];
      mean /= N;
      double var = 0.0;
      for (std::size_t is = 0; is < ns; ++is) {
        const double d = vals[ir * ns + is] - mean;
        var += d * d;
      }
      var /= (N - 1.0);
      const double rfac = radial ? radial(rad.r[ir]) : 1.0;
      const double coef = rad.w[ir] * std::pow(rad.r[ir], n - 1) * rfac *
                          pairwise_sum(rule.sphere.w);
      const double se = coef * std::sqrt(var / N);
      sq[ir] = se * se;
    }
    res.std_error = std::sqrt(pairwise_sum(
        std::span<const double>(sq.data(), rad.r.size())));
  }
  return res;
}

void RadialProfile::validate() const {
  if (r.size() != value.size() || r.size() < 2)
    throw std::invalid_argument("radial profile: need >= 2 samples");
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!(r[i] > 0.0)) throw std::invalid_argument("radial profile: r <= 0");
    if (i > 0 && !(r[i] > r[i - 1]))
      throw std::invalid_argument("radial profile: radii not ascending");
    if (value[i] < 0.0)
      throw std::invalid_argument("radial profile: negative value");
  }
}

double RadialProfile::operator()(double rr) const {
  if (r.empty()) throw std::logic_error("empty profile");
  const double lo = r.front(), hi = r.back();
  if (rr < lo * (1.0 - 1e-12) || rr > hi * (1.0 + 1e-12))
    throw std::domain_error("radial profile: query outside sampled range");
  rr = std::min(std::max(rr, lo), hi);
  const auto it = std::upper_bound(r.begin(), r.end(), rr);
  std::size_t i1 = static_cast<std::size_t>(it - r.begin());
  if (i1 == 0) i1 = 1;
  if (i1 >= r.size()) i1 = r.size() - 1;
  const std::size_t i0 = i1 - 1;
  const double t = std::log(rr / r[i0]) / std::log(r[i1] / r[i0]);
  const double v0 = value[i0], v1 = value[i1];
  if (v0 > 0.0 && v1 > 0.0)
    return std::exp((1.0 - t) * std::log(v0) + t * std::log(v1));
  return (1.0 - t) * v0 + t * v1;
}

namespace {

std::vector<double> log_grid(double r_lo, double r_hi, int per_octave) {
  if (!(r_lo > 0.0) || !(r_hi > r_lo))
    throw std::invalid_argument("profile grid: need 0 < r_lo < r_hi");
  if (per_octave < 1) throw std::invalid_argument("profile grid: per_octave < 1");
  const double octaves = std::log2(r_hi / r_lo);
  const int count = std::max(2, static_cast<int>(std::ceil(octaves * per_octave)) + 1);
  std::vector<double> r(count);
  for (int i = 0; i < count; ++i)
    r[i] = r_lo * std::pow(r_hi / r_lo, static_cast<double>(i) / (count - 1));
  r.back() = r_hi;
  return r;
}

}  // namespace

RadialProfile mean_profile(const Weight& Q, std::span<const double> x0,
                           double r_lo, double r_hi, int per_octave,
                           const SphereRule& rule, double q_exp) {
  RadialProfile p;
  p.kind = RadialProfile::Kind::mean;
  p.x0.assign(x0.begin(), x0.end());
  p.r = log_grid(r_lo, r_hi, per_octave);
  p.value.resize(p.r.size());
  p.err.resize(p.r.size());
  const double omega = DimensionConstants::make(rule.n).omega;
  for (std::size_t i = 0; i < p.r.size(); ++i) {
    if (q_exp == 1.0) {
      const QuadResult q = sphere_mean(Q, x0, p.r[i], rule);
      p.value[i] = q.value;
      p.err[i] = q.std_error;
    } else {
      const double norm = sphere_ls_norm(Q, x0, p.r[i], q_exp, rule);
      p.value[i] =
          std::pow(norm, q_exp) / (omega * std::pow(p.r[i], rule.n - 1));
      p.err[i] = 0.0;
    }
  }
  p.validate();
  return p;
}

RadialProfile ls_norm_profile(const Weight& Q, std::span<const double> x0,
                              double r_lo, double r_hi, int per_octave,
                              double s, const SphereRule& rule) {
  RadialProfile p;
  p.kind = RadialProfile::Kind::ls_norm;
  p.s = s;
  p.x0.assign(x0.begin(), x0.end());
  p.r = log_grid(r_lo, r_hi, per_octave);
  p.value.resize(p.r.size());
  p.err.assign(p.r.size(), 0.0);
  for (std::size_t i = 0; i < p.r.size(); ++i)
    p.value[i] = sphere_ls_norm(Q, x0, p.r[i], s, rule);
  p.validate();
  return p;
}

RadialProfile profile_from_function(const std::function<double(double)>& q,
                                    double r_lo, double r_hi, int per_octave) {
  RadialProfile p;
  p.r = log_grid(r_lo, r_hi, per_octave);
  p.value.resize(p.r.size());
  p.err.assign(p.r.size(), 0.0);
  for (std::size_t i = 0; i < p.r.size(); ++i) p.value[i] = q(p.r[i]);
  p.validate();
  return p;
}

std::string profile_csv(const RadialProfile& p) {
  std::ostringstream os;
  os.precision(17);
  os << "r,value,error_estimate\n";
  for (std::size_t i = 0; i < p.r.size(); ++i)
    os << p.r[i] << ',' << p.value[i] << ','
       << (i < p.err.size() ? p.err[i] : 0.0) << '\n';
  return os.str();
}

}  // namespace qc
