#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <type_traits>
#include <utility>
#include <vector>

namespace qc {

// Toggles the OpenMP path of the evaluation kernels. The serial path is the
// reference implementation; both fill the same buffer and reduce with
// pairwise_sum in a fixed order, so results are bitwise identical.
void set_parallel(bool on);
bool parallel_enabled();

// Pairwise (cascade) summation. Fixed association order independent of
// thread count; error growth O(log n) in ulps.
double pairwise_sum(std::span<const double> v);

// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
  std::vector<double> x;
  std::vector<double> w;
};
const GaussRule& gauss_legendre(int order);

// Deterministic RNG: splitmix64 stream with hand-rolled uniform and normal
// variates. Unlike std::normal_distribution, the byte stream does not depend
// on the standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next_u64();
  double uniform();             // [0, 1)
  double normal();              // Box-Muller, one value per call
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b);

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

namespace detail {
void fill_indexed(std::size_t n, double* out, const void* ctx,
                  double (*fn)(const void*, std::size_t));
}

// Same kernel, but keeps the per-index values (profiles, field samples).
template <class F>
std::vector<double> map_values(std::size_t n, F&& f) {
  using Fn = std::remove_reference_t<F>;
  std::vector<double> buf(n);
  detail::fill_indexed(n, buf.data(), &f, [](const void* c, std::size_t i) {
    return (*static_cast<const Fn*>(c))(i);
  });
  return buf;
}

// Evaluates f(0..n-1) into a buffer (in parallel when enabled) and reduces
// with pairwise_sum. The reduction order never depends on the thread count.
template <class F>
double map_sum(std::size_t n, F&& f) {
  return pairwise_sum(map_values(n, std::forward<F>(f)));
}

// Least-squares line fit y = a + b*x. Returns {a, b, rms_residual}.
struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double rms_residual = 0.0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace qc
