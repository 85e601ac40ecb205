#include "cavqed/metrics.hpp"

#include <cmath>
#include <string>

#include "cavqed/error.hpp"

namespace cavqed {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw InvalidArgument(std::string(name) + " must be finite and > 0");
  }
}

}  // namespace

double cooperativity(double g, double kappa, double gamma_total) {
  require_positive(kappa, "kappa");
  require_positive(gamma_total, "total decay rate");
  return 4.0 * g * g / (kappa * gamma_total);
}

double total_decay(double gamma, double gamma_d) {
  if (!(gamma >= 0.0) || !(gamma_d >= 0.0)) {
    throw InvalidArgument("decay rates must be >= 0");
  }
  return gamma + 2.0 * gamma_d;
}

double quality_factor(double nu0, double kappa) {
  require_positive(nu0, "resonance frequency");
  require_positive(kappa, "linewidth");
  return nu0 / kappa;
}

double fsr_length_bound(double lambda_q_nm, double lambda_q1_nm) {
  require_positive(lambda_q1_nm, "lambda_{q+1}");
  require_positive(lambda_q_nm, "lambda_q");
  const double fsr = lambda_q_nm - lambda_q1_nm;
  if (!(fsr > 0.0)) throw InvalidArgument("free spectral range must be > 0 (lambda_q > lambda_{q+1})");
  return lambda_q1_nm * lambda_q_nm / (2.0 * fsr) * 1e-3;
}

double fsr_from_length(double optical_length_um) {
  require_positive(optical_length_um, "optical length");
  return kSpeedOfLight / (2.0 * optical_length_um * 1e-6) * 1e-9;
}

double finesse(double fsr, double kappa) {
  require_positive(fsr, "free spectral range");
  require_positive(kappa, "linewidth");
  return fsr / kappa;
}

double wavelength_to_frequency(double wavelength_nm) {
  require_positive(wavelength_nm, "wavelength");
  return kSpeedOfLight / wavelength_nm;  // m/s / nm = GHz
}

double frequency_to_wavelength(double frequency_ghz) {
  require_positive(frequency_ghz, "frequency");
  return kSpeedOfLight / frequency_ghz;
}

}  // namespace cavqed
