#pragma once

// Scalar figures of merit for cavity and emitter characterization.

#include "cavqed/spectrum_data.hpp"

namespace cavqed {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s, exact

// Dip contrast above which a device counts as coupled in the yield study.
inline constexpr double kCoupledContrastThreshold = 0.25;

// C = 4 g^2 / (kappa Gamma). Throws InvalidArgument unless kappa, Gamma > 0.
double cooperativity(double g, double kappa, double gamma_total);

// Gamma = gamma + 2 gamma_d.
double total_decay(double gamma, double gamma_d);

// Q = nu0 / kappa (same frequency units).
double quality_factor(double nu0, double kappa);

// Upper bound on the optical cavity length from two adjacent longitudinal
// modes, (nL)_max = lambda_{q+1} lambda_q / (2 (lambda_q - lambda_{q+1})).
// Wavelengths in nm, result in um.
double fsr_length_bound(double lambda_q_nm, double lambda_q1_nm);

// c / (2 nL) in GHz for an optical length in um.
double fsr_from_length(double optical_length_um);

// F = FSR / kappa.
double finesse(double fsr, double kappa);

double wavelength_to_frequency(double wavelength_nm);  // -> GHz
double frequency_to_wavelength(double frequency_ghz);  // -> nm

struct DipContrast {
  double contrast = 0.0;  // clamped to [0, 1]
  double baseline = 0.0;  // peak of the Lorentzian fitted outside the window
  double minimum = 0.0;   // smallest sample inside the window
  double offset = 0.0;    // constant term of that fit
  bool fit_converged = true;
};

// (baseline - min_in_window) / (baseline - offset), where the baseline comes
// from a Lorentzian + constant fit to the samples outside [lo, hi]. A flat
// spectrum has zero contrast. Throws InvalidArgument when the window holds
// no samples or leaves fewer than five samples for the fit, NumericalError
// when the background fit fails.
DipContrast dip_contrast(const Spectrum& spectrum, double window_lo, double window_hi);

inline bool is_coupled(double contrast, double threshold = kCoupledContrastThreshold) {
  return contrast >= threshold;
}

struct DerivedMetrics {
  double cooperativity = 0.0;
  double total_decay = 0.0;
  double q_factor = 0.0;
  double finesse = 0.0;
  double nl_max = 0.0;  // um
  double dip_contrast = 0.0;
};

}  // namespace cavqed
