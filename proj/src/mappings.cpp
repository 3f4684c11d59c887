#include "qc/mappings.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "qc/numeric.hpp"

namespace qc {

namespace {
enum class MapKind { identity, linear, radial_stretch, translate, compose };
}

struct Mapping::Node {
  MapKind kind;
  int n = 0;
  double c = 1.0;
  Eigen::MatrixXd a;
  Eigen::VectorXd v;
  std::vector<Mapping> chain;
  int multiplicity = 1;
};

Mapping Mapping::identity(int n) {
  if (n < 2 || n > kMaxDim) throw std::invalid_argument("mapping: bad dimension");
  auto node = std::make_shared<Node>();
  node->kind = MapKind::identity;
  node->n = n;
  return Mapping(std::move(node));
}

Mapping Mapping::linear(Eigen::MatrixXd a) {
  if (a.rows() != a.cols() || a.rows() < 2 || a.rows() > kMaxDim)
    throw std::invalid_argument("mapping: linear matrix must be square, n in [2,6]");
  auto node = std::make_shared<Node>();
  node->kind = MapKind::linear;
  node->n = static_cast<int>(a.rows());
  node->a = std::move(a);
  return Mapping(std::move(node));
}

Mapping Mapping::radial_stretch(int n, double c) {
  if (n < 2 || n > kMaxDim) throw std::invalid_argument("mapping: bad dimension");
  if (!(c > 0.0)) throw std::invalid_argument("radial stretch: c must be > 0");
  auto node = std::make_shared<Node>();
  node->kind = MapKind::radial_stretch;
  node->n = n;
  node->c = c;
  return Mapping(std::move(node));
}

Mapping Mapping::translate(Eigen::VectorXd v) {
  if (v.size() < 2 || v.size() > kMaxDim)
    throw std::invalid_argument("mapping: bad dimension");
  auto node = std::make_shared<Node>();
  node->kind = MapKind::translate;
  node->n = static_cast<int>(v.size());
  node->v = std::move(v);
  return Mapping(std::move(node));
}

Mapping Mapping::compose(std::vector<Mapping> chain) {
  if (chain.empty()) throw std::invalid_argument("compose: empty chain");
  const int n = chain.front().dim();
  for (const Mapping& m : chain)
    if (m.dim() != n) throw std::invalid_argument("compose: dimension mismatch");
  auto node = std::make_shared<Node>();
  node->kind = MapKind::compose;
  node->n = n;
  node->chain = std::move(chain);
  return Mapping(std::move(node));
}

int Mapping::dim() const { return node_->n; }
int Mapping::multiplicity() const { return node_->multiplicity; }

Mapping Mapping::with_multiplicity(int n_fd) const {
  if (n_fd < 1) throw std::invalid_argument("multiplicity must be >= 1");
  auto node = std::make_shared<Node>(*node_);
  node->multiplicity = n_fd;
  return Mapping(std::move(node));
}

Eigen::VectorXd Mapping::operator()(const Eigen::VectorXd& x) const {
  const Node& nd = *node_;
  if (x.size() != nd.n) throw std::invalid_argument("mapping: point dimension");
  switch (nd.kind) {
    case MapKind::identity:
      return x;
    case MapKind::linear:
      return nd.a * x;
    case MapKind::radial_stretch: {
      const double r = x.norm();
      if (r == 0.0) return Eigen::VectorXd::Zero(nd.n);
      return std::pow(r, nd.c - 1.0) * x;
    }
    case MapKind::translate:
      return x + nd.v;
    case MapKind::compose: {
      Eigen::VectorXd y = x;
      for (auto it = nd.chain.rbegin(); it != nd.chain.rend(); ++it)
        y = (*it)(y);
      return y;
    }
  }
  return x;
}

namespace {

Eigen::MatrixXd central_diff(const Mapping& f, const Eigen::VectorXd& x,
                             double h) {
  const int n = static_cast<int>(x.size());
  Eigen::MatrixXd jac(n, n);
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    jac.col(j) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return jac;
}

}  // namespace

Eigen::MatrixXd Mapping::differential(const Eigen::VectorXd& x,
                                      const DiffMethod& m) const {
  const Node& nd = *node_;
  if (x.size() != nd.n) throw std::invalid_argument("mapping: point dimension");

  if (m.kind == DiffMethod::Kind::central_difference) {
    const double h = m.h > 0.0 ? m.h : 1e-5 * std::max(1.0, x.norm());
    if (!m.richardson) return central_diff(*this, x, h);
    // one Richardson step on the O(h^2) central difference
    const Eigen::MatrixXd d1 = central_diff(*this, x, h);
    const Eigen::MatrixXd d2 = central_diff(*this, x, 0.5 * h);
    return (4.0 * d2 - d1) / 3.0;
  }

  switch (nd.kind) {
    case MapKind::identity:
    case MapKind::translate:
      return Eigen::MatrixXd::Identity(nd.n, nd.n);
    case MapKind::linear:
      return nd.a;
    case MapKind::radial_stretch: {
      const double r = x.norm();
      if (nd.c == 1.0) return Eigen::MatrixXd::Identity(nd.n, nd.n);
      if (r == 0.0)
        throw std::domain_error("radial stretch: differential singular at 0");
      // |x|^{c-1} (I + (c-1) u u^T), u = x/|x|
      const Eigen::VectorXd u = x / r;
      Eigen::MatrixXd jac = Eigen::MatrixXd::Identity(nd.n, nd.n);
      jac += (nd.c - 1.0) * (u * u.transpose());
      jac *= std::pow(r, nd.c - 1.0);
      return jac;
    }
    case MapKind::compose: {
      Eigen::VectorXd y = x;
      Eigen::MatrixXd jac = Eigen::MatrixXd::Identity(nd.n, nd.n);
      for (auto it = nd.chain.rbegin(); it != nd.chain.rend(); ++it) {
        jac = it->differential(y, DiffMethod::analytic()) * jac;
        y = (*it)(y);
      }
      return jac;
    }
  }
  return Eigen::MatrixXd::Identity(nd.n, nd.n);
}

std::string Mapping::describe() const {
  switch (node_->kind) {
    case MapKind::identity:
      return "identity";
    case MapKind::linear:
      return "linear";
    case MapKind::radial_stretch:
      return "radial_stretch(c=" + std::to_string(node_->c) + ")";
    case MapKind::translate:
      return "translate";
    case MapKind::compose:
      return "compose";
  }
  return "?";
}

namespace {

struct Lattice {
  std::vector<double> radii;
  SphereRule angular;
};

Lattice make_lattice(int n, std::span<const double> x0, double r_in,
                     double r_out, const AnnulusSampling& s) {
  if (!x0.empty() && static_cast<int>(x0.size()) != n)
    throw std::invalid_argument("annulus sampling: center dimension");
  if (!(r_in > 0.0) || !(r_out > r_in))
    throw std::invalid_argument("annulus sampling: need 0 < r_in < r_out");
  if (s.radial < 1) throw std::invalid_argument("annulus sampling: radial < 1");
  Lattice lat;
  lat.angular = make_sphere_rule(n, s.angular);
  lat.radii.resize(s.radial);
  for (int i = 0; i < s.radial; ++i)
    lat.radii[i] =
        r_in * std::pow(r_out / r_in,
                        (i + 0.5) / static_cast<double>(s.radial));
  return lat;
}

Eigen::VectorXd lattice_point(const Lattice& lat, std::span<const double> x0,
                              int n, std::size_t ir, std::size_t is) {
  Eigen::VectorXd x(n);
  for (int j = 0; j < n; ++j)
    x[j] = (x0.empty() ? 0.0 : x0[j]) +
           lat.radii[ir] * lat.angular.dirs[is * n + j];
  return x;
}

}  // namespace

FieldSummary dilatation_field(const Mapping& f, std::span<const double> x0,
                              double r_in, double r_out, double p,
                              const AnnulusSampling& sampling,
                              const DiffMethod& method) {
  const int n = f.dim();
  const Lattice lat = make_lattice(n, x0, r_in, r_out, sampling);
  const std::size_t ns = lat.angular.size();
  const std::size_t total = lat.radii.size() * ns;

  FieldSummary out;
  out.samples.resize(total);
  std::vector<double> kvals = map_values(total, [&](std::size_t k) {
    const std::size_t ir = k / ns, is = k % ns;
    const Eigen::VectorXd x = lattice_point(lat, x0, n, ir, is);
    const Eigen::MatrixXd d = f.differential(x, method);
    DilatationSample smp =
        dilatation_sample(d, p, std::vector<double>(x.data(), x.data() + n));
    out.samples[k] = std::move(smp);
    return out.samples[k].k_inner.infinite
               ? std::numeric_limits<double>::quiet_NaN()
               : out.samples[k].k_inner.value;
  });

  double maxv = 0.0;
  double sum = 0.0;
  std::size_t finite = 0;
  for (double v : kvals) {
    if (std::isnan(v)) {
      out.any_infinite = true;
      continue;
    }
    maxv = std::max(maxv, v);
    sum += v;
    ++finite;
  }
  out.max_k = out.any_infinite ? ExtReal::inf() : ExtReal::finite(maxv);
  out.mean_finite_k = finite ? sum / static_cast<double>(finite) : 0.0;
  return out;
}

MajorantField lower_q_majorant(const Mapping& f, std::span<const double> x0,
                               double r_in, double r_out, double p,
                               const AnnulusSampling& sampling,
                               const DiffMethod& method) {
  const int n = f.dim();
  if (!(p > n - 1.0) || !(p <= static_cast<double>(n)))
    throw std::invalid_argument("lower_q_majorant: p must be in (n-1, n]");
  const double alpha = p / (p - n + 1.0);
  const double expo = (p - n + 1.0) / (n - 1.0);

  const Lattice lat = make_lattice(n, x0, r_in, r_out, sampling);
  const std::size_t ns = lat.angular.size();
  const std::size_t total = lat.radii.size() * ns;
  const double mult = static_cast<double>(f.multiplicity());

  MajorantField field;
  field.alpha = alpha;
  field.exponent = expo;
  field.x0.assign(x0.begin(), x0.end());
  field.radii = lat.radii;
  field.angular = lat.angular;
  field.values = map_values(total, [&](std::size_t k) {
    const std::size_t ir = k / ns, is = k % ns;
    const Eigen::VectorXd x = lattice_point(lat, x0, n, ir, is);
    const ExtReal ki = inner_dilatation(f.differential(x, method), alpha);
    if (ki.infinite) return std::numeric_limits<double>::quiet_NaN();
    return mult * std::pow(ki.value, expo);
  });
  for (double v : field.values)
    if (std::isnan(v)) field.any_infinite = true;
  return field;
}

RadialProfile MajorantField::profile() const {
  RadialProfile p;
  p.kind = RadialProfile::Kind::mean;
  p.x0 = x0;
  p.r = radii;
  p.value.resize(radii.size());
  p.err.assign(radii.size(), 0.0);
  const std::size_t ns = angular.size();
  const double omega = pairwise_sum(angular.w);
  for (std::size_t ir = 0; ir < radii.size(); ++ir) {
    std::vector<double> weighted(ns);
    for (std::size_t is = 0; is < ns; ++is)
      weighted[is] = angular.w[is] * values[ir * ns + is];
    p.value[ir] = pairwise_sum(weighted) / omega;
  }
  p.validate();
  return p;
}

double MajorantField::max_value() const {
  double m = 0.0;
  for (double v : values)
    if (!std::isnan(v)) m = std::max(m, v);
  return m;
}

}  // namespace qc
