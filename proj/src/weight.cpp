#include "qc/weight.hpp"

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>

namespace qc {

namespace {

enum class Kind { constant, power, log_power, linear, grid, product, sum };

double radius(std::span<const double> x, const std::vector<double>& x0) {
  if (!x0.empty() && x.size() != x0.size())
    throw std::invalid_argument("weight: point dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x0.empty() ? x[i] : x[i] - x0[i];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace

struct Weight::Node {
  Kind kind;
  double c = 0.0;              // constant value / exponent / linear offset
  std::vector<double> vec;     // center x0 or linear coefficients
  GridSpec grid;
  std::vector<Weight> children;
};

Weight Weight::constant(double c) {
  if (c < 0.0) throw std::invalid_argument("constant weight must be >= 0");
  auto n = std::make_shared<Node>();
  n->kind = Kind::constant;
  n->c = c;
  return Weight(std::move(n));
}

Weight Weight::power(double beta, std::vector<double> x0) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::power;
  n->c = beta;
  n->vec = std::move(x0);
  return Weight(std::move(n));
}

Weight Weight::log_power(double gamma, std::vector<double> x0) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::log_power;
  n->c = gamma;
  n->vec = std::move(x0);
  return Weight(std::move(n));
}

Weight Weight::linear(std::vector<double> a, double b) {
  if (a.empty()) throw std::invalid_argument("linear weight: empty coefficients");
  auto n = std::make_shared<Node>();
  n->kind = Kind::linear;
  n->c = b;
  n->vec = std::move(a);
  return Weight(std::move(n));
}

Weight Weight::grid(GridSpec spec) {
  const std::size_t d = spec.shape.size();
  if (d == 0 || spec.origin.size() != d || spec.spacing.size() != d)
    throw std::invalid_argument("grid weight: inconsistent axes");
  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) {
    if (spec.shape[i] < 2) throw std::invalid_argument("grid weight: shape < 2");
    if (!(spec.spacing[i] > 0.0))
      throw std::invalid_argument("grid weight: spacing must be > 0");
    total *= static_cast<std::size_t>(spec.shape[i]);
  }
  if (spec.values.size() != total)
    throw std::invalid_argument("grid weight: value count mismatch");
  auto n = std::make_shared<Node>();
  n->kind = Kind::grid;
  n->grid = std::move(spec);
  return Weight(std::move(n));
}

Weight Weight::product(std::vector<Weight> factors) {
  if (factors.empty()) throw std::invalid_argument("product weight: empty");
  auto n = std::make_shared<Node>();
  n->kind = Kind::product;
  n->children = std::move(factors);
  return Weight(std::move(n));
}

Weight Weight::sum(std::vector<Weight> terms) {
  if (terms.empty()) throw std::invalid_argument("sum weight: empty");
  auto n = std::make_shared<Node>();
  n->kind = Kind::sum;
  n->children = std::move(terms);
  return Weight(std::move(n));
}

double Weight::operator()(std::span<const double> x) const {
  if (!node_) throw std::logic_error("empty weight");
  const Node& n = *node_;
  switch (n.kind) {
    case Kind::constant:
      return n.c;
    case Kind::power: {
      const double r = radius(x, n.vec);
      if (r == 0.0 && n.c < 0.0)
        throw std::domain_error("power weight: singular at center");
      return std::pow(r, n.c);
    }
    case Kind::log_power: {
      const double r = radius(x, n.vec);
      if (r <= 0.0 || r >= 1.0)
        throw std::domain_error("log_power weight: needs 0 < |x-x0| < 1");
      return std::pow(std::log(1.0 / r), n.c);
    }
    case Kind::linear: {
      if (x.size() != n.vec.size())
        throw std::invalid_argument("weight: point dimension mismatch");
      double s = n.c;
      for (std::size_t i = 0; i < x.size(); ++i) s += n.vec[i] * x[i];
      return s;
    }
    case Kind::grid: {
      const GridSpec& g = n.grid;
      const std::size_t d = g.shape.size();
      if (x.size() != d)
        throw std::invalid_argument("grid weight: point dimension mismatch");
      // locate the cell; reject points outside the lattice
      std::vector<std::size_t> idx(d);
      std::vector<double> frac(d);
      for (std::size_t i = 0; i < d; ++i) {
        const double t = (x[i] - g.origin[i]) / g.spacing[i];
        if (t < -1e-12 || t > g.shape[i] - 1 + 1e-12)
          throw std::domain_error("grid weight: point outside lattice");
        double tc = std::min(std::max(t, 0.0),
                             static_cast<double>(g.shape[i] - 1));
        std::size_t i0 = static_cast<std::size_t>(tc);
        if (i0 >= static_cast<std::size_t>(g.shape[i] - 1)) i0 = g.shape[i] - 2;
        idx[i] = i0;
        frac[i] = tc - static_cast<double>(i0);
      }
      // multilinear blend over the 2^d cell corners
      double acc = 0.0;
      const std::size_t corners = std::size_t{1} << d;
      for (std::size_t mask = 0; mask < corners; ++mask) {
        double w = 1.0;
        std::size_t flat = 0;
        for (std::size_t i = 0; i < d; ++i) {
          const bool hi = (mask >> i) & 1u;
          w *= hi ? frac[i] : 1.0 - frac[i];
          flat = flat * static_cast<std::size_t>(g.shape[i]) + idx[i] + (hi ? 1 : 0);
        }
        acc += w * g.values[flat];
      }
      return acc;
    }
    case Kind::product: {
      double s = 1.0;
      for (const Weight& w : n.children) s *= w(x);
      return s;
    }
    case Kind::sum: {
      double s = 0.0;
      for (const Weight& w : n.children) s += w(x);
      return s;
    }
  }
  return 0.0;
}

int Weight::dim() const {
  if (!node_) return 0;
  const Node& n = *node_;
  switch (n.kind) {
    case Kind::constant:
      return 0;
    case Kind::power:
    case Kind::log_power:
      return static_cast<int>(n.vec.size());  // 0 when centered at origin
    case Kind::linear:
      return static_cast<int>(n.vec.size());
    case Kind::grid:
      return static_cast<int>(n.grid.shape.size());
    case Kind::product:
    case Kind::sum:
      for (const Weight& w : n.children)
        if (int d = w.dim(); d > 0) return d;
      return 0;
  }
  return 0;
}

std::string Weight::describe() const {
  if (!node_) return "<empty>";
  const Node& n = *node_;
  switch (n.kind) {
    case Kind::constant:
      return "constant(" + std::to_string(n.c) + ")";
    case Kind::power:
      return "|x-x0|^" + std::to_string(n.c);
    case Kind::log_power:
      return "(log 1/|x-x0|)^" + std::to_string(n.c);
    case Kind::linear:
      return "linear";
    case Kind::grid:
      return "grid";
    case Kind::product:
      return "product";
    case Kind::sum:
      return "sum";
  }
  return "?";
}

double Weight::sampled_min(std::span<const double> lo,
                           std::span<const double> hi, int per_axis) const {
  if (lo.size() != hi.size() || lo.empty())
    throw std::invalid_argument("sampled_min: bad box");
  if (per_axis < 2) throw std::invalid_argument("sampled_min: per_axis < 2");
  const std::size_t d = lo.size();
  std::vector<double> x(d);
  std::vector<int> idx(d, 0);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    for (std::size_t i = 0; i < d; ++i)
      x[i] = lo[i] + (hi[i] - lo[i]) * idx[i] / (per_axis - 1);
    try {
      best = std::min(best, (*this)(x));
    } catch (const std::domain_error&) {
      // singular lattice point: skip
    }
    std::size_t axis = 0;
    while (axis < d && ++idx[axis] == per_axis) idx[axis++] = 0;
    if (axis == d) break;
  }
  return best;
}

}  // namespace qc
