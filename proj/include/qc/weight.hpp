#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace qc {

// Rectangular sample lattice with multilinear interpolation. Queries outside
// the lattice are a domain error.
struct GridSpec {
  std::vector<double> origin;       // lowest corner
  std::vector<double> spacing;      // per-axis step, > 0
  std::vector<int> shape;           // per-axis sample count, >= 2
  std::vector<double> values;       // row-major, size = prod(shape)
};

// Nonnegative weight Q on R^n (nonnegativity required only for majorant use;
// linear kinds may go negative and are validated by the caller when needed).
// Value semantics: copies share immutable nodes.
class Weight {
 public:
  Weight() = default;

  static Weight constant(double c);
  // |x - x0|^beta
  static Weight power(double beta, std::vector<double> x0);
  // (log(1/|x - x0|))^gamma, defined for 0 < |x - x0| < 1
  static Weight log_power(double gamma, std::vector<double> x0);
  // a . x + b
  static Weight linear(std::vector<double> a, double b);
  static Weight grid(GridSpec spec);
  static Weight product(std::vector<Weight> factors);
  static Weight sum(std::vector<Weight> terms);

  double operator()(std::span<const double> x) const;

  // 0 when the kind is dimension-agnostic (constant).
  int dim() const;
  bool valid() const { return node_ != nullptr; }
  std::string describe() const;

  // Samples min value over a small deterministic lattice in [lo, hi]^n;
  // used to validate nonnegativity of majorants.
  double sampled_min(std::span<const double> lo, std::span<const double> hi,
                     int per_axis) const;

 private:
  struct Node;
  explicit Weight(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

}  // namespace qc
