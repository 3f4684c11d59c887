#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "qc/mappings.hpp"
#include "qc/numeric.hpp"

using namespace qc;

namespace {

Eigen::VectorXd v2(double x, double y) {
  Eigen::VectorXd v(2);
  v << x, y;
  return v;
}

Eigen::VectorXd v3(double x, double y, double z) {
  Eigen::VectorXd v(3);
  v << x, y, z;
  return v;
}

}  // namespace

TEST_CASE("built-in mappings evaluate their closed forms") {
  const Mapping id2 = Mapping::identity(2);
  CHECK((id2(v2(1.0, 2.0)) - v2(1.0, 2.0)).norm() == 0.0);

  const Mapping rs = Mapping::radial_stretch(2, 2.0);
  CHECK((rs(v2(1.0, 0.0)) - v2(1.0, 0.0)).norm() < 1e-15);
  CHECK((rs(v2(2.0, 0.0)) - v2(4.0, 0.0)).norm() < 1e-14);
  CHECK(rs(v2(0.0, 0.0)).norm() == 0.0);

  const Mapping tr = Mapping::translate(v2(3.0, -1.0));
  CHECK((tr(v2(1.0, 1.0)) - v2(4.0, 0.0)).norm() == 0.0);
}

TEST_CASE("radial stretch differential has the closed-form spectrum") {
  // singular values {|x|^{c-1} (tangential, n-1 times), c |x|^{c-1}}
  const Mapping rs = Mapping::radial_stretch(3, 0.5);
  const Eigen::VectorXd x = v3(1.0, 0.0, 0.0);
  const SingularSpectrum s = singular_spectrum(rs.differential(x));
  REQUIRE(s.values.size() == 3);
  CHECK(s.values[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.values[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.values[2] == doctest::Approx(1.0).epsilon(1e-12));

  // at radius r the scale factor is r^{c-1}
  const double r = 0.3;
  const Eigen::VectorXd y = v3(0.0, r, 0.0);
  const SingularSpectrum sy = singular_spectrum(rs.differential(y));
  const double scale = std::pow(r, -0.5);
  CHECK(sy.values[0] == doctest::Approx(0.5 * scale).epsilon(1e-12));
  CHECK(sy.values[2] == doctest::Approx(scale).epsilon(1e-12));

  CHECK_THROWS_AS(rs.differential(v3(0.0, 0.0, 0.0)), std::domain_error);
}

TEST_CASE("finite differences agree with the analytic differential") {
  const Mapping rs = Mapping::radial_stretch(2, 2.0);
  const Eigen::VectorXd x = v2(1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0));
  const Eigen::MatrixXd exact = rs.differential(x);
  const Eigen::MatrixXd fd = rs.differential(x, DiffMethod::fd(1e-4, true));
  CHECK((fd - exact).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("central differences converge at order 2, order 4 with richardson") {
  const Mapping rs = Mapping::radial_stretch(3, 0.5);
  const Eigen::VectorXd x = v3(0.6, 0.3, -0.2);
  const Eigen::MatrixXd exact = rs.differential(x);
  const auto err = [&](double h, bool rich) {
    return (rs.differential(x, DiffMethod::fd(h, rich)) - exact)
        .cwiseAbs()
        .maxCoeff();
  };
  const double slope_plain = std::log2(err(4e-2, false) / err(2e-2, false));
  CHECK(slope_plain == doctest::Approx(2.0).epsilon(0.15));
  const double slope_rich = std::log2(err(8e-2, true) / err(4e-2, true));
  CHECK(slope_rich == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("composition matches the chain rule and identity is neutral") {
  const Mapping rs = Mapping::radial_stretch(2, 0.7);
  const Mapping composed = Mapping::compose({Mapping::identity(2), rs});
  const Eigen::VectorXd x = v2(0.4, -1.1);
  CHECK((composed(x) - rs(x)).norm() == 0.0);
  CHECK((composed.differential(x) - rs.differential(x)).norm() == 0.0);

  // translate then stretch: differential picks up the moved base point
  const Mapping tr = Mapping::translate(v2(1.0, 0.0));
  const Mapping chain = Mapping::compose({rs, tr});
  const Eigen::MatrixXd got = chain.differential(x);
  const Eigen::MatrixXd want = rs.differential(tr(x));
  CHECK((got - want).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("dilatation of the radial stretch is constant over the annulus") {
  // K_{I,n} = c^{1-n} for c < 1, = c for c > 1
  AnnulusSampling sampling;
  sampling.radial = 6;
  sampling.angular.m1 = 6;
  sampling.angular.m2 = 12;
  const std::vector<double> x0;

  const FieldSummary half =
      dilatation_field(Mapping::radial_stretch(3, 0.5), x0, 0.2, 2.0, 3.0,
                       sampling);
  REQUIRE_FALSE(half.any_infinite);
  for (const DilatationSample& s : half.samples)
    CHECK(s.k_inner.value == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(half.max_k.value == doctest::Approx(4.0).epsilon(1e-9));

  const FieldSummary twice =
      dilatation_field(Mapping::radial_stretch(3, 2.0), x0, 0.2, 2.0, 3.0,
                       sampling);
  for (const DilatationSample& s : twice.samples)
    CHECK(s.k_inner.value == doctest::Approx(2.0).epsilon(1e-9));

  const FieldSummary ident =
      dilatation_field(Mapping::identity(3), x0, 0.2, 2.0, 2.5, sampling);
  for (const DilatationSample& s : ident.samples)
    CHECK(s.k_inner.value == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("dilatation field is bitwise stable across execution modes") {
  AnnulusSampling sampling;
  sampling.radial = 8;
  sampling.angular.m1 = 8;
  sampling.angular.m2 = 16;
  const std::vector<double> x0;
  const Mapping f = Mapping::radial_stretch(3, 0.5);
  set_parallel(false);
  const FieldSummary a = dilatation_field(f, x0, 0.5, 2.0, 3.0, sampling,
                                          DiffMethod::fd());
  set_parallel(true);
  const FieldSummary b = dilatation_field(f, x0, 0.5, 2.0, 3.0, sampling,
                                          DiffMethod::fd());
  REQUIRE(a.samples.size() == b.samples.size());
  CHECK(a.mean_finite_k == b.mean_finite_k);
  for (std::size_t i = 0; i < a.samples.size(); ++i)
    CHECK(a.samples[i].k_inner.value == b.samples[i].k_inner.value);
}

TEST_CASE("lower majorant field: closed forms") {
  AnnulusSampling sampling;
  sampling.radial = 5;
  sampling.angular.m1 = 6;
  sampling.angular.m2 = 12;
  const std::vector<double> x0;

  // identity: K = 1, N = 1 -> Q = 1
  const MajorantField ident =
      lower_q_majorant(Mapping::identity(3), x0, 0.5, 2.0, 3.0, sampling);
  CHECK(ident.alpha == doctest::Approx(3.0));
  for (double v : ident.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));

  // radial stretch c = 1/2, n = 3, p = 3: K_{I,3} = 4, exponent 1/2 -> Q = 2
  const MajorantField half = lower_q_majorant(
      Mapping::radial_stretch(3, 0.5), x0, 0.5, 2.0, 3.0, sampling);
  for (double v : half.values) CHECK(v == doctest::Approx(2.0).epsilon(1e-9));
  const RadialProfile prof = half.profile();
  for (double v : prof.value) CHECK(v == doctest::Approx(2.0).epsilon(1e-9));

  // linear diag(1,1,2), p = 3: K_{I,3} = 2 -> Q = sqrt(2)
  Eigen::MatrixXd d = Eigen::Vector3d(1.0, 1.0, 2.0).asDiagonal();
  const MajorantField lin =
      lower_q_majorant(Mapping::linear(d), x0, 0.5, 2.0, 3.0, sampling);
  for (double v : lin.values)
    CHECK(v == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

  CHECK_THROWS_AS(lower_q_majorant(Mapping::identity(3), x0, 0.5, 2.0, 2.0,
                                   sampling),
                  std::invalid_argument);

  // declared multiplicity scales the majorant
  const MajorantField mult = lower_q_majorant(
      Mapping::identity(3).with_multiplicity(3), x0, 0.5, 2.0, 3.0, sampling);
  for (double v : mult.values) CHECK(v == doctest::Approx(3.0).epsilon(1e-12));
}
