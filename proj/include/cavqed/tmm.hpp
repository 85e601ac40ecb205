#pragma once

// Normal-incidence transfer-matrix optics for planar multilayers.
//
// Fields vary as exp(i(n k0 z - w t)); absorbing media have Im(n) > 0.
// Each layer contributes the characteristic matrix
//   M = [[cos d, -i sin d / n], [-i n sin d, cos d]],  d = 2 pi n t / lambda,
// which maps the (E, H) pair at the layer's far side to its near side.
// Lengths and wavelengths are in nm.

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "cavqed/spectrum_data.hpp"

namespace cavqed {

using cplx = std::complex<double>;

struct Layer {
  cplx n{1.0, 0.0};
  double thickness = 0.0;  // nm

  // Throws InvalidArgument unless thickness is finite and > 0, Re(n) > 0
  // and Im(n) >= 0.
  void validate() const;
};

struct LayerStack {
  cplx ambient_n{1.0, 0.0};  // incidence side
  std::vector<Layer> layers;  // index 0 faces the ambient
  cplx substrate_n{1.0, 0.0};

  void validate() const;
  // Light incident from the substrate side.
  LayerStack reversed() const;
  bool lossless() const;
  double total_thickness() const;
};

struct StackResponse {
  cplx r;
  cplx t;
  double R = 0.0;
  double T = 0.0;  // Re(n_sub) / Re(n_amb) |t|^2
};

Eigen::Matrix2cd characteristic_matrix(const Layer& layer, double wavelength);

StackResponse stack_rt(const LayerStack& stack, double wavelength);

// Alternating quarter-wave layers starting with n_h. `pairs` must be k or
// k + 0.5 with k >= 1; the extra half pair is one more n_h layer, so the
// stack starts and ends with n_h.
LayerStack quarter_wave_dbr(double n_h, double n_l, double lambda0, double pairs,
                            cplx ambient_n = 1.0, cplx substrate_n = 1.0);

// Wavelength-axis spectrum of T over a monotonic grid.
Spectrum transmission_spectrum(const LayerStack& stack, const std::vector<double>& grid);
Spectrum reflection_spectrum(const LayerStack& stack, const std::vector<double>& grid);

struct Stopband {
  double center = 0.0;
  double width = 0.0;
};

// Contiguous region around the global minimum where y < threshold, with
// crossings found by linear interpolation. Throws NotFound when the minimum
// is not below threshold or the region runs off either end of the data.
Stopband stopband(const Spectrum& spectrum, double threshold);

// [top layers, air gap, active layer, bottom layers]; ambient from `top`,
// substrate from `bottom`.
LayerStack cavity_stack(const LayerStack& top, double air_gap, double active_thickness,
                        cplx active_n, const LayerStack& bottom);

struct CavityTemplate {
  LayerStack top;
  LayerStack bottom;
  double active_thickness = 0.0;  // nm
  cplx active_n{1.0, 0.0};

  LayerStack with_gap(double air_gap) const;
};

// Refractive indices (dispersionless, near 970 nm) used by the default stacks.
namespace index {
inline constexpr double kGaAs = 3.48;
inline constexpr double kAlAs = 2.94;
inline constexpr double kSiO2 = 1.45;
inline constexpr double kSiN = 2.00;
inline constexpr double kAir = 1.00;
inline constexpr double kFusedSilica = 1.45;
}  // namespace index

inline constexpr double kDefaultStopbandCenter = 970.0;  // nm

// Fused-silica substrate coated with 12.5 SiN/SiO2 pairs (SiN on both ends),
// air gap, a one-wavelength GaAs layer, then 29.5 AlAs/GaAs pairs starting
// with AlAs, on a GaAs wafer. Both mirrors centered at 970 nm.
CavityTemplate default_cavity_template();

struct ResonanceRow {
  double gap = 0.0;                 // nm
  std::vector<double> wavelengths;  // nm, ascending
};

// For each gap, the local maxima of T(lambda) that reach
// `floor_fraction` times that gap's largest T, each refined by a parabola
// through the three samples around it.
std::vector<ResonanceRow> resonance_map(const CavityTemplate& cavity,
                                        const std::vector<double>& gap_grid,
                                        const std::vector<double>& lambda_grid,
                                        double floor_fraction = 0.05);

// Forward/backward amplitudes at the near side of each layer, for unit
// incident amplitude: E(z) = forward exp(i k z) + backward exp(-i k z).
struct LayerAmplitudes {
  cplx forward;
  cplx backward;
};

std::vector<LayerAmplitudes> layer_amplitudes(const LayerStack& stack, double wavelength);

struct FieldProfile {
  std::vector<double> z;          // nm from the ambient interface
  std::vector<double> intensity;  // |E|^2, incident amplitude 1
};

// samples_per_layer points per layer (including its near edge) plus the
// far edge of the last layer.
FieldProfile field_profile(const LayerStack& stack, double wavelength, int samples_per_layer);

}  // namespace cavqed
