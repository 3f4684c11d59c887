#pragma once

#include <Eigen/Dense>
#include <vector>

namespace qc {

// Extended real carried as value + flag; report serializers never emit raw
// floating-point infinities.
struct ExtReal {
  double value = 0.0;
  bool infinite = false;

  static ExtReal finite(double v) { return {v, false}; }
  static ExtReal inf() { return {0.0, true}; }
};

// Surface area of the unit sphere S^{n-1} and volume of the unit ball in R^n.
struct DimensionConstants {
  int n = 0;
  double omega = 0.0;        // area of S^{n-1}; 2*pi for n=2, 4*pi for n=3
  double ball_volume = 0.0;  // omega / n
  static DimensionConstants make(int n);
};

// n x n matrix of partials at a point, row i = gradient of component i.
using Differential = Eigen::MatrixXd;

struct SingularSpectrum {
  std::vector<double> values;  // ascending: values.front() = l(f'), back() = op norm
  double min_stretch() const { return values.front(); }
  double op_norm() const { return values.back(); }
};

struct DilatationSample {
  std::vector<double> point;
  double p = 0.0;
  double jacobian = 0.0;
  double min_stretch = 0.0;
  double op_norm = 0.0;
  ExtReal k_inner;
};

// Singular values of M in ascending order. Throws std::invalid_argument for
// non-square or non-finite input.
SingularSpectrum singular_spectrum(const Differential& M);

// Inner dilatation of order p. Three branches: |J|/l^p when J != 0, exactly 1
// for the zero matrix, infinite for singular nonzero matrices. Zero-matrix
// and zero-Jacobian detection uses the thresholds below.
// Throws std::invalid_argument when p < 1.
ExtReal inner_dilatation(const Differential& M, double p);

// Thresholds for the floating-point rendering of the exact branch conditions.
inline constexpr double kZeroMatrixTol = 1e-13;
inline constexpr double kZeroJacobianTol = 1e-13;

// Full sample (jacobian, stretch bounds, dilatation) at a point.
DilatationSample dilatation_sample(const Differential& M, double p,
                                   std::vector<double> point = {});

inline constexpr int kMaxDim = 6;

}  // namespace qc
