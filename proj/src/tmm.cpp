#include "cavqed/tmm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "cavqed/error.hpp"

namespace cavqed {

namespace {

constexpr cplx kI{0.0, 1.0};

void require_medium(cplx n, const char* what) {
  if (!std::isfinite(n.real()) || !std::isfinite(n.imag()) || !(n.real() > 0.0) || n.imag() < 0.0) {
    throw InvalidArgument(std::string(what) + " index needs Re(n) > 0 and Im(n) >= 0");
  }
}

void require_wavelength(double wavelength) {
  if (!(wavelength > 0.0) || !std::isfinite(wavelength)) {
    throw InvalidArgument("wavelength must be finite and > 0");
  }
}

// [E; H] at the ambient interface for unit field at the substrate interface.
Eigen::Vector2cd total_bc(const LayerStack& stack, double wavelength) {
  Eigen::Vector2cd v(1.0, stack.substrate_n);
  for (auto it = stack.layers.rbegin(); it != stack.layers.rend(); ++it) {
    v = characteristic_matrix(*it, wavelength) * v;
  }
  return v;
}

double parabola_vertex(double x0, double y0, double x1, double y1, double x2, double y2) {
  const double d01 = x0 - x1, d02 = x0 - x2, d12 = x1 - x2;
  const double a = (y0 / (d01 * d02)) - (y1 / (d01 * d12)) + (y2 / (d02 * d12));
  const double b = -(y0 * (x1 + x2) / (d01 * d02)) + (y1 * (x0 + x2) / (d01 * d12)) -
                   (y2 * (x0 + x1) / (d02 * d12));
  if (!(a < 0.0)) return x1;
  const double v = -b / (2.0 * a);
  return std::clamp(v, std::min(x0, x2), std::max(x0, x2));
}

}  // namespace

void Layer::validate() const {
  require_medium(n, "layer");
  if (!(thickness > 0.0) || !std::isfinite(thickness)) {
    throw InvalidArgument("layer thickness must be finite and > 0");
  }
}

void LayerStack::validate() const {
  require_medium(ambient_n, "ambient");
  require_medium(substrate_n, "substrate");
  for (const Layer& l : layers) l.validate();
}

LayerStack LayerStack::reversed() const {
  LayerStack out;
  out.ambient_n = substrate_n;
  out.substrate_n = ambient_n;
  out.layers.assign(layers.rbegin(), layers.rend());
  return out;
}

bool LayerStack::lossless() const {
  if (ambient_n.imag() != 0.0 || substrate_n.imag() != 0.0) return false;
  return std::all_of(layers.begin(), layers.end(), [](const Layer& l) { return l.n.imag() == 0.0; });
}

double LayerStack::total_thickness() const {
  double t = 0.0;
  for (const Layer& l : layers) t += l.thickness;
  return t;
}

Eigen::Matrix2cd characteristic_matrix(const Layer& layer, double wavelength) {
  const cplx delta = 2.0 * std::numbers::pi * layer.n * layer.thickness / wavelength;
  const cplx c = std::cos(delta), s = std::sin(delta);
  Eigen::Matrix2cd m;
  m << c, -kI * s / layer.n, -kI * layer.n * s, c;
  return m;
}

StackResponse stack_rt(const LayerStack& stack, double wavelength) {
  stack.validate();
  require_wavelength(wavelength);
  const Eigen::Vector2cd bc = total_bc(stack, wavelength);
  const cplx na = stack.ambient_n;
  const cplx denom = na * bc(0) + bc(1);
  StackResponse out;
  out.r = (na * bc(0) - bc(1)) / denom;
  out.t = 2.0 * na / denom;
  out.R = std::norm(out.r);
  out.T = stack.substrate_n.real() / na.real() * std::norm(out.t);
  return out;
}

LayerStack quarter_wave_dbr(double n_h, double n_l, double lambda0, double pairs, cplx ambient_n,
                            cplx substrate_n) {
  if (!(n_h > 0.0) || !(n_l > 0.0)) throw InvalidArgument("DBR indices must be > 0");
  if (!(lambda0 > 0.0)) throw InvalidArgument("design wavelength must be > 0");
  const double twice = 2.0 * pairs;
  if (!(pairs >= 1.0) || !std::isfinite(pairs) || twice != std::floor(twice)) {
    throw InvalidArgument("pair count must be k or k + 0.5 with k >= 1");
  }
  const int n_layers = static_cast<int>(twice);
  LayerStack s;
  s.ambient_n = ambient_n;
  s.substrate_n = substrate_n;
  for (int i = 0; i < n_layers; ++i) {
    const double n = (i % 2 == 0) ? n_h : n_l;
    s.layers.push_back({n, lambda0 / (4.0 * n)});
  }
  s.validate();
  return s;
}

Spectrum transmission_spectrum(const LayerStack& stack, const std::vector<double>& grid) {
  require_monotonic(grid, "wavelength grid");
  std::vector<double> y(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) y[i] = stack_rt(stack, grid[i]).T;
  return Spectrum(grid, std::move(y), AxisKind::Wavelength);
}

Spectrum reflection_spectrum(const LayerStack& stack, const std::vector<double>& grid) {
  require_monotonic(grid, "wavelength grid");
  std::vector<double> y(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) y[i] = stack_rt(stack, grid[i]).R;
  return Spectrum(grid, std::move(y), AxisKind::Wavelength);
}

Stopband stopband(const Spectrum& spectrum, double threshold) {
  const auto& x = spectrum.x();
  const auto& y = spectrum.y();
  if (spectrum.empty()) throw NotFound("empty spectrum");
  const auto imin = static_cast<std::size_t>(std::min_element(y.begin(), y.end()) - y.begin());
  if (!(y[imin] < threshold)) throw NotFound("no samples below the stopband threshold");
  std::size_t l = imin, r = imin;
  while (l > 0 && y[l - 1] < threshold) --l;
  while (r + 1 < y.size() && y[r + 1] < threshold) ++r;
  if (l == 0 || r + 1 == y.size()) throw NotFound("stopband extends past the end of the spectrum");
  auto crossing = [&](std::size_t outside, std::size_t inside) {
    const double f = (threshold - y[outside]) / (y[inside] - y[outside]);
    return x[outside] + f * (x[inside] - x[outside]);
  };
  const double a = crossing(l - 1, l);
  const double b = crossing(r + 1, r);
  return {0.5 * (a + b), std::abs(b - a)};
}

LayerStack cavity_stack(const LayerStack& top, double air_gap, double active_thickness,
                        cplx active_n, const LayerStack& bottom) {
  if (!(air_gap > 0.0) || !(active_thickness > 0.0)) {
    throw InvalidArgument("air gap and active thickness must be > 0");
  }
  LayerStack s;
  s.ambient_n = top.ambient_n;
  s.substrate_n = bottom.substrate_n;
  s.layers = top.layers;
  s.layers.push_back({index::kAir, air_gap});
  s.layers.push_back({active_n, active_thickness});
  s.layers.insert(s.layers.end(), bottom.layers.begin(), bottom.layers.end());
  s.validate();
  return s;
}

LayerStack CavityTemplate::with_gap(double air_gap) const {
  return cavity_stack(top, air_gap, active_thickness, active_n, bottom);
}

CavityTemplate default_cavity_template() {
  CavityTemplate c;
  c.top = quarter_wave_dbr(index::kSiN, index::kSiO2, kDefaultStopbandCenter, 12.5,
                           index::kFusedSilica, index::kAir);
  // AlAs faces the GaAs layer so the bottom mirror starts with a low-index step.
  c.bottom = quarter_wave_dbr(index::kAlAs, index::kGaAs, kDefaultStopbandCenter, 29.5,
                              index::kGaAs, index::kGaAs);
  c.active_thickness = kDefaultStopbandCenter / index::kGaAs;
  c.active_n = index::kGaAs;
  return c;
}

std::vector<ResonanceRow> resonance_map(const CavityTemplate& cavity,
                                        const std::vector<double>& gap_grid,
                                        const std::vector<double>& lambda_grid,
                                        double floor_fraction) {
  require_monotonic(gap_grid, "gap grid");
  require_monotonic(lambda_grid, "wavelength grid");
  if (!(floor_fraction >= 0.0 && floor_fraction <= 1.0)) {
    throw InvalidArgument("prominence floor must lie in [0, 1]");
  }
  std::vector<ResonanceRow> rows;
  rows.reserve(gap_grid.size());
  for (double gap : gap_grid) {
    const Spectrum s = transmission_spectrum(cavity.with_gap(gap), lambda_grid);
    const auto& x = s.x();
    const auto& y = s.y();
    const double floor = floor_fraction * *std::max_element(y.begin(), y.end());
    ResonanceRow row{gap, {}};
    for (std::size_t i = 1; i + 1 < y.size(); ++i) {
      if (y[i] > y[i - 1] && y[i] >= y[i + 1] && y[i] >= floor && y[i] > 0.0) {
        row.wavelengths.push_back(parabola_vertex(x[i - 1], y[i - 1], x[i], y[i], x[i + 1], y[i + 1]));
      }
    }
    std::sort(row.wavelengths.begin(), row.wavelengths.end());
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<LayerAmplitudes> layer_amplitudes(const LayerStack& stack, double wavelength) {
  stack.validate();
  require_wavelength(wavelength);
  const StackResponse rt = stack_rt(stack, wavelength);
  // Walk back from the substrate, where (E, H) = t (1, n_sub).
  std::vector<LayerAmplitudes> out(stack.layers.size());
  Eigen::Vector2cd v(rt.t, rt.t * stack.substrate_n);
  for (std::size_t k = stack.layers.size(); k-- > 0;) {
    const Layer& l = stack.layers[k];
    v = characteristic_matrix(l, wavelength) * v;
    out[k] = {0.5 * (v(0) + v(1) / l.n), 0.5 * (v(0) - v(1) / l.n)};
  }
  return out;
}

FieldProfile field_profile(const LayerStack& stack, double wavelength, int samples_per_layer) {
  if (samples_per_layer < 2) throw InvalidArgument("need at least 2 samples per layer");
  const std::vector<LayerAmplitudes> amps = layer_amplitudes(stack, wavelength);
  FieldProfile out;
  double z0 = 0.0;
  for (std::size_t k = 0; k < stack.layers.size(); ++k) {
    const Layer& l = stack.layers[k];
    const cplx kz = 2.0 * std::numbers::pi * l.n / wavelength;
    const bool last = k + 1 == stack.layers.size();
    const int n = last ? samples_per_layer + 1 : samples_per_layer;
    for (int j = 0; j < n; ++j) {
      const double dz = l.thickness * j / samples_per_layer;
      const cplx e = amps[k].forward * std::exp(kI * kz * dz) + amps[k].backward * std::exp(-kI * kz * dz);
      out.z.push_back(z0 + dz);
      out.intensity.push_back(std::norm(e));
    }
    z0 += l.thickness;
  }
  return out;
}

}  // namespace cavqed
