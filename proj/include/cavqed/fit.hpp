#pragma once

// Levenberg-Marquardt least squares with finite-difference Jacobians, a
// registry of spectral models, and the fitting protocols used for
// cavity-QED spectra and bare-cavity doublets.

#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "cavqed/lindblad.hpp"
#include "cavqed/spectrum.hpp"
#include "cavqed/spectrum_data.hpp"

namespace cavqed {

using ParamMap = std::map<std::string, double, std::less<>>;

struct FreeParameter {
  std::string name;
  double initial = 0.0;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
};

struct Model {
  std::string name;
  std::vector<std::string> parameters;
  // Predicted intensities at the given abscissae for a complete parameter set.
  std::function<Eigen::VectorXd(const std::vector<double>& x, const ParamMap& params)> evaluate;
};

class ModelRegistry {
 public:
  void add(Model model);
  const Model& find(std::string_view name) const;  // throws InvalidArgument
  bool contains(std::string_view name) const;
  std::vector<std::string> names() const;

 private:
  std::map<std::string, Model, std::less<>> models_;
};

// Models: "lorentzian" (center, fwhm, amplitude, offset),
// "lorentzian-doublet" (center1, fwhm1, amplitude1, center2, fwhm2,
// amplitude2, offset), "full-spectrum" (every SystemParams rate/detuning/
// drive plus a_h, a_v, a_0) and "single-mode-spectrum" (the H branch:
// kappa_h, delta_h, delta_1, g_h, gamma_1, gamma_d1, eta_h, a_h, a_0).
// The spectrum models cache branch photon-number scans, so Jacobian
// columns that leave a branch untouched cost nothing.
ModelRegistry make_registry(int n_max = 3, const ModelOptions& opts = {});
const ModelRegistry& default_registry();

double lorentzian(double x, double center, double fwhm, double amplitude);

// Parameter names of the spectrum models, in canonical order.
const std::vector<std::string>& full_spectrum_parameters();
const std::vector<std::string>& single_mode_parameters();

ParamMap to_param_map(const SystemParams& p, const ScalingParams& s);
SystemParams system_from_map(const ParamMap& m);
ScalingParams scaling_from_map(const ParamMap& m);

struct FitProblem {
  std::string model;
  std::vector<FreeParameter> free;
  ParamMap fixed;
  Spectrum data;

  // Free and fixed names must be disjoint and cover the model's parameter
  // list; bounds must satisfy lo < hi with the initial value inside.
  void validate(const Model& m) const;
};

struct FitOptions {
  int max_iterations = 500;
  double relative_step = 1e-6;  // central differences
  double absolute_step = 1e-9;
  double cost_tolerance = 1e-10;  // relative cost decrease
  double step_tolerance = 1e-10;  // step norm, relative to the parameter norm
};

struct FitResult {
  std::vector<std::string> names;  // free parameters, problem order
  std::vector<double> values;
  std::vector<double> sigmas;  // sqrt(chi2_red * diag (J^T J)^-1)
  Eigen::MatrixXd covariance;
  ParamMap fixed;
  double residual_norm = 0.0;
  double reduced_chi2 = 0.0;
  bool converged = false;
  bool singular = false;  // J^T J rank deficient; covariance from the pseudo-inverse
  int iterations = 0;
  std::vector<double> cost_history;  // accepted costs, starting with the initial one
  Eigen::VectorXd best_fit;

  double value(std::string_view name) const;
  double sigma(std::string_view name) const;
  double correlation(std::size_t i, std::size_t j) const;
  double max_abs_correlation() const;
  // Free and fixed parameters together.
  ParamMap all_values() const;
};

// Non-convergence is reported through FitResult::converged, not thrown.
FitResult least_squares(const FitProblem& problem, const FitOptions& options = {},
                        const ModelRegistry& registry = default_registry());

// --- Protocols -------------------------------------------------------------

struct ProtocolSetup {
  int n_max = 3;
  ModelOptions model;
  FitOptions fit;
};

// Starting point for the seven-parameter full-spectrum fit. Unset rates start
// at the middle of their bounds; unset scale factors come from the data.
struct FullSpectrumStart {
  std::optional<double> g_h, g_v, gamma_d1, gamma_d2;
  std::optional<double> a_h, a_v, a_0;
};

inline constexpr double kCouplingUpperBound = 4.0;  // GHz
inline constexpr double kDephasingUpperBound = 1.0;  // GHz

// Free: g_h, g_v, gamma_d1, gamma_d2, a_h, a_v, a_0. Everything else comes
// from `fixed`, with each dot held resonant with its mode (delta_1 = delta_h,
// delta_2 = delta_v).
FitResult fit_full_spectrum(const Spectrum& data, const SystemParams& fixed,
                            const FullSpectrumStart& start = {}, const ProtocolSetup& setup = {});

// Power-series defaults: device #1 values with g_H = 1.39 and
// gamma_d1 = 0.04 as used for the drive-power series.
SystemParams power_series_defaults();

// Per spectrum, free: eta_h and a_0 of the single-mode model; a_h fixed.
std::vector<FitResult> fit_power_series(const std::vector<Spectrum>& data_set,
                                        const SystemParams& fixed, double a_h,
                                        const ProtocolSetup& setup = {});

// Per spectrum, free: delta_h (cavity resonance) of the single-mode model.
std::vector<FitResult> fit_detuning_series(const std::vector<Spectrum>& data_set,
                                           const SystemParams& fixed, const ScalingParams& scaling,
                                           const ProtocolSetup& setup = {});

struct DoubletFit {
  FitResult fit;
  double q1 = 0.0;  // (abscissa_origin + center) / fwhm
  double q2 = 0.0;
  bool degenerate = false;  // some parameter pair has |correlation| > 0.99
};

// Two Lorentzians plus offset. `abscissa_origin` is added to fitted centers
// before computing Q (use omega_ref for frequency-offset data).
DoubletFit fit_lorentzian_doublet(const Spectrum& data, double abscissa_origin = 0.0,
                                  const FitOptions& options = {});

// Single Lorentzian plus offset with data-driven starting values; `mask`
// (optional, same length as the data) selects the samples to use.
FitResult fit_lorentzian(const Spectrum& data, const std::vector<bool>& mask = {},
                         const FitOptions& options = {});

}  // namespace cavqed
