// Compares the OpenMP kernels against the serial reference on the chunky
// workloads: sphere/annulus quadrature and dilatation field sampling.
// Results must agree bitwise; timings are printed for both paths.

#include <chrono>
#include <cstdio>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "qc/criteria.hpp"
#include "qc/mappings.hpp"
#include "qc/numeric.hpp"
#include "qc/quadrature.hpp"
#include "qc/weight.hpp"

namespace {

template <class F>
double timed(const char* name, bool parallel, F&& fn, double* value) {
  qc::set_parallel(parallel);
  const auto t0 = std::chrono::steady_clock::now();
  *value = fn();
  const auto dt = std::chrono::duration<double, std::milli>(
      std::chrono::steady_clock::now() - t0);
  std::printf("  %-28s %8.1f ms   value %.17g\n", name, dt.count(), *value);
  return dt.count();
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
  std::printf("built without OpenMP\n");
#endif

  const qc::Weight q = qc::Weight::log_power(2.0, {});
  const std::vector<double> x0;
  qc::SphereResolution res;
  res.m1 = 96;
  res.m2 = 192;
  const qc::SphereRule sphere = qc::make_sphere_rule(3, res);
  const qc::AnnulusRule rule{{256, 12}, sphere};

  int mismatches = 0;
  const auto compare = [&](const char* name, auto&& fn) {
    double serial_value = 0.0, parallel_value = 0.0;
    std::printf("%s\n", name);
    const double ts = timed("serial reference", false, fn, &serial_value);
    const double tp = timed("openmp", true, fn, &parallel_value);
    const bool same = serial_value == parallel_value;
    if (!same) ++mismatches;
    std::printf("  speedup %.2fx, bitwise %s\n", ts / tp,
                same ? "identical" : "MISMATCH");
  };

  compare("annulus mass of (log 1/|x|)^2 / (r log 1/r)^3", [&] {
    const auto radial = [](double r) {
      return std::pow(r * std::log(1.0 / r), -3.0);
    };
    return qc::annulus_integral(q, 1.0, radial, x0, 1e-6, 0.5, rule).value;
  });

  compare("ball mean oscillation of log(1/|x|)", [&] {
    return qc::ball_mean_oscillation(q, x0, 0.25, qc::BallRule{{256, 12}, sphere});
  });

  compare("dilatation field of the radial stretch", [&] {
    const qc::Mapping f = qc::Mapping::radial_stretch(3, 0.5);
    qc::AnnulusSampling sampling;
    sampling.radial = 64;
    sampling.angular = res;
    const qc::FieldSummary field =
        qc::dilatation_field(f, x0, 0.5, 2.0, 3.0, sampling);
    return field.mean_finite_k;
  });

  qc::set_parallel(true);
  return mismatches == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
