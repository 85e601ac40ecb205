#include <doctest.h>

#include <cmath>
#include <random>

#include "cavqed/error.hpp"
#include "cavqed/metrics.hpp"
#include "cavqed/spectrum.hpp"

using namespace cavqed;

TEST_CASE("cooperativity for the four devices") {
  struct Row {
    double g, kappa, gamma, c, tol;
  };
  for (const Row& r : {Row{1.37, 16.04, 0.26, 1.8, 0.2}, Row{1.83, 13.5, 0.4, 2.5, 0.6},
                       Row{1.82, 28.7, 0.2, 2.8, 0.5}, Row{1.0, 13.6, 0.60, 0.5, 0.1}}) {
    const double c = cooperativity(r.g, r.kappa, r.gamma);
    CHECK(c == doctest::Approx(4 * r.g * r.g / (r.kappa * r.gamma)).epsilon(1e-15));
    CHECK(std::abs(c - r.c) <= r.tol);
  }
  CHECK(cooperativity(1.37, 16.04, 0.26) == doctest::Approx(1.80).epsilon(1e-3));
  CHECK(cooperativity(1.83, 13.5, 0.4) == doctest::Approx(2.48).epsilon(1e-3));
  CHECK(cooperativity(0.0, 3.0, 7.0) == 0.0);
  CHECK_THROWS_AS(cooperativity(1.0, 0.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(cooperativity(1.0, 1.0, -0.1), InvalidArgument);
}

TEST_CASE("total decay") {
  CHECK(total_decay(0.16, 0.05) == 0.26);
  CHECK(total_decay(0.16, 0.17) == 0.50);
  CHECK(total_decay(0.3, 0.0) == 0.3);
}

TEST_CASE("quality factors") {
  CHECK(std::abs(quality_factor(309017.7, 16.04) - 19200) <= 200);
  CHECK(std::abs(quality_factor(309054.0, 18.04) - 17100) <= 200);
  CHECK(std::round(quality_factor(309017.7, 16.04)) == 19265);
  CHECK(std::round(quality_factor(309054.0, 18.04)) == 17132);
  CHECK(quality_factor(4.2, 4.2) == 1.0);
}

TEST_CASE("free spectral range and finesse") {
  const double fsr = fsr_from_length(7.36);
  CHECK(std::round(fsr) == 20366);
  CHECK(fsr == doctest::Approx(299792458.0 / (2 * 7.36e-6) * 1e-9).epsilon(1e-14));
  CHECK(std::round(finesse(fsr, 18.04)) == 1129);
  CHECK(std::round(finesse(fsr, 16.04)) == 1270);
  CHECK(finesse(fsr, 18.04) >= 1100);
  CHECK(finesse(fsr, 18.04) < 1200);
  CHECK(finesse(fsr, 16.04) >= 1200);
  CHECK(finesse(fsr, 16.04) < 1300);
  CHECK(finesse(13.0, 13.0) == 1.0);
}

TEST_CASE("cavity length bound") {
  CHECK(fsr_length_bound(1000, 500) == 0.5);
  CHECK(fsr_length_bound(1001.5, 938.5) == doctest::Approx(7.4596).epsilon(1e-5));
  // The FSR fed in is reproduced by the pair.
  const double lq = 1001.5, lq1 = lq - 63.0;
  CHECK(lq - lq1 == doctest::Approx(63.0));
  CHECK(fsr_length_bound(lq, lq1) == doctest::Approx(lq * lq1 / 126.0 * 1e-3).epsilon(1e-14));
  CHECK_THROWS_AS(fsr_length_bound(900, 950), InvalidArgument);
  CHECK_THROWS_AS(fsr_length_bound(900, 900), InvalidArgument);
  CHECK_THROWS_AS(fsr_length_bound(900, 0), InvalidArgument);
}

TEST_CASE("cavity length bound is homogeneous of degree one") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> wl(300.0, 2000.0), frac(0.5, 0.99), sc(0.1, 10.0);
  for (int k = 0; k < 100; ++k) {
    const double a = wl(rng), b = a * frac(rng), s = sc(rng);
    const double base = fsr_length_bound(a, b);
    CHECK(std::abs(fsr_length_bound(s * a, s * b) - s * base) <= 1e-12 * s * base);
  }
}

TEST_CASE("length bound agrees with the mode-order picture") {
  // Adjacent orders of a lossless etalon satisfy 2 nL = q lambda_q.
  const double nl = 7.36;  // um
  for (int q : {10, 15, 23}) {
    const double lq = 2 * nl * 1e3 / q, lq1 = 2 * nl * 1e3 / (q + 1);
    CHECK(fsr_length_bound(lq, lq1) == doctest::Approx(nl).epsilon(1e-12));
  }
}

TEST_CASE("wavelength and frequency conversion") {
  CHECK(wavelength_to_frequency(1000.0) == doctest::Approx(299792.458).epsilon(1e-15));
  CHECK(frequency_to_wavelength(wavelength_to_frequency(970.123)) == doctest::Approx(970.123).epsilon(1e-15));
  CHECK(frequency_to_wavelength(309017.7) == doctest::Approx(970.15).epsilon(1e-4));
}

namespace {

double lorentz(double x, double x0, double w) { return 1.0 / (1.0 + 4.0 * (x - x0) * (x - x0) / (w * w)); }

// Cosine bump with support [-r, r] and unit height.
double bump(double x, double r) {
  return std::abs(x) < r ? 0.5 * (1.0 + std::cos(3.141592653589793 * x / r)) : 0.0;
}

}  // namespace

TEST_CASE("dip contrast of a flat spectrum is zero") {
  const auto x = linear_grid(-10, 10, 41);
  const Spectrum sp(x, std::vector<double>(x.size(), 0.4), AxisKind::FrequencyOffset);
  const DipContrast d = dip_contrast(sp, -1, 1);
  CHECK(d.contrast == 0.0);
}

TEST_CASE("dip contrast of a synthetic dipole-induced dip") {
  SystemParams p = SystemParams::device1();
  SystemParams bare = p;
  bare.g_h = 0.0;
  const double suppression = std::norm(linear_response(p, 0.0, Mode::H)) / std::norm(linear_response(bare, 0.0, Mode::H));
  const double expect = 1.0 - suppression;
  CHECK(expect == doctest::Approx(0.8724).epsilon(1e-3));

  // Bare Lorentzian with a dip of exactly that depth confined to the window.
  const auto x = linear_grid(-40, 40, 401);
  std::vector<double> y;
  for (double xi : x) y.push_back(2.5 * lorentz(xi, 0.0, 16.04) * (1.0 - expect * bump(xi, 1.0)));
  const DipContrast d = dip_contrast(Spectrum(x, y, AxisKind::FrequencyOffset), -1.0, 1.0);
  CHECK(d.contrast == doctest::Approx(expect).epsilon(1e-6));
  CHECK(d.baseline == doctest::Approx(2.5).epsilon(1e-6));
  CHECK(std::abs(d.offset) < 1e-6);
  CHECK(d.fit_converged);
  CHECK(is_coupled(d.contrast));

  // The weak-drive spectrum itself, with a wider window.
  std::vector<double> y2;
  for (double xi : x) y2.push_back(std::norm(linear_response(p, xi, Mode::H)));
  const DipContrast d2 = dip_contrast(Spectrum(x, y2, AxisKind::FrequencyOffset), -4.0, 4.0);
  CHECK(d2.contrast == doctest::Approx(expect).epsilon(0.05));
}

TEST_CASE("dip contrast with an offset and a shallow dip") {
  const auto x = linear_grid(-30, 30, 301);
  std::vector<double> y;
  for (double xi : x) y.push_back(0.3 + 1.0 * lorentz(xi, 2.0, 15.0) * (1.0 - 0.2 * bump(xi - 2.0, 1.5)));
  const DipContrast d = dip_contrast(Spectrum(x, y, AxisKind::FrequencyOffset), 0.0, 4.0);
  CHECK(d.offset == doctest::Approx(0.3).epsilon(1e-6));
  CHECK(d.contrast == doctest::Approx(0.2).epsilon(1e-6));
  CHECK_FALSE(is_coupled(d.contrast));
  CHECK(is_coupled(0.25));
  CHECK_FALSE(is_coupled(0.2499));
}

TEST_CASE("dip contrast errors") {
  const auto x = linear_grid(-10, 10, 21);
  std::vector<double> y;
  for (double xi : x) y.push_back(lorentz(xi, 0, 5));
  const Spectrum sp(x, y, AxisKind::FrequencyOffset);
  CHECK_THROWS_AS(dip_contrast(sp, 0.1, 0.9), InvalidArgument);    // no samples inside
  CHECK_THROWS_AS(dip_contrast(sp, 2.0, -2.0), InvalidArgument);   // reversed
  CHECK_THROWS_AS(dip_contrast(sp, -9.5, 9.5), InvalidArgument);   // too few outside
  CHECK_THROWS_AS(dip_contrast(sp, 20.0, 30.0), InvalidArgument);  // outside the data
}
