#include "qc/dilatation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qc {

DimensionConstants DimensionConstants::make(int n) {
  if (n < 2 || n > kMaxDim)
    throw std::invalid_argument("DimensionConstants: n must be in [2, 6]");
  DimensionConstants c;
  c.n = n;
  c.ball_volume =
      std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
  c.omega = n * c.ball_volume;
  return c;
}

namespace {

void check_input(const Differential& M) {
  if (M.rows() != M.cols())
    throw std::invalid_argument("differential must be square");
  if (M.rows() < 2 || M.rows() > kMaxDim)
    throw std::invalid_argument("differential dimension must be in [2, 6]");
  if (!M.allFinite())
    throw std::invalid_argument("differential has non-finite entries");
}

}  // namespace

SingularSpectrum singular_spectrum(const Differential& M) {
  check_input(M);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  SingularSpectrum s;
  s.values.assign(svd.singularValues().data(),
                  svd.singularValues().data() + M.rows());
  std::sort(s.values.begin(), s.values.end());
  return s;
}

ExtReal inner_dilatation(const Differential& M, double p) {
  if (p < 1.0) throw std::invalid_argument("inner_dilatation: p must be >= 1");
  check_input(M);
  const int n = static_cast<int>(M.rows());
  const double max_abs = M.cwiseAbs().maxCoeff();
  if (max_abs < kZeroMatrixTol) return ExtReal::finite(1.0);

  const SingularSpectrum s = singular_spectrum(M);
  const double jac = std::abs(M.determinant());
  if (jac < kZeroJacobianTol * std::pow(s.op_norm(), n)) return ExtReal::inf();
  return ExtReal::finite(jac / std::pow(s.min_stretch(), p));
}

DilatationSample dilatation_sample(const Differential& M, double p,
                                   std::vector<double> point) {
  DilatationSample out;
  out.point = std::move(point);
  out.p = p;
  out.k_inner = inner_dilatation(M, p);
  const SingularSpectrum s = singular_spectrum(M);
  out.jacobian = M.determinant();
  out.min_stretch = s.min_stretch();
  out.op_norm = s.op_norm();
  return out;
}

}  // namespace qc
