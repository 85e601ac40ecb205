#include "cavqed/spectrum_data.hpp"

#include <cmath>

#include "cavqed/error.hpp"

namespace cavqed {

std::string_view to_string(AxisKind kind) {
  return kind == AxisKind::Wavelength ? "wavelength" : "frequency-offset";
}

AxisKind parse_axis_kind(std::string_view text) {
  if (text == "frequency-offset") return AxisKind::FrequencyOffset;
  if (text == "wavelength") return AxisKind::Wavelength;
  throw ParseError("unknown axis kind '" + std::string(text) + "'");
}

void require_monotonic(const std::vector<double>& grid, const char* what) {
  for (double v : grid) {
    if (!std::isfinite(v)) throw InvalidArgument(std::string(what) + " contains non-finite values");
  }
  if (grid.size() < 2) return;
  const bool up = grid[1] > grid[0];
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const bool ok = up ? grid[i] > grid[i - 1] : grid[i] < grid[i - 1];
    if (!ok) {
      throw InvalidArgument(std::string(what) + " is not strictly monotonic at index " +
                            std::to_string(i));
    }
  }
}

Spectrum::Spectrum(std::vector<double> x, std::vector<double> y, AxisKind axis)
    : x_(std::move(x)), y_(std::move(y)), axis_(axis) {
  if (x_.size() != y_.size()) throw InvalidArgument("spectrum x/y size mismatch");
  require_monotonic(x_, "spectrum abscissa");
  for (double v : y_) {
    if (!std::isfinite(v)) throw InvalidArgument("spectrum intensity contains non-finite values");
  }
}

std::vector<double> linear_grid(double start, double stop, int n) {
  if (n < 2) throw InvalidArgument("grid needs at least 2 points");
  if (!std::isfinite(start) || !std::isfinite(stop) || start == stop) {
    throw InvalidArgument("grid endpoints must be finite and distinct");
  }
  std::vector<double> g(static_cast<std::size_t>(n));
  const double step = (stop - start) / (n - 1);
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = start + step * i;
  g.back() = stop;
  return g;
}

std::vector<double> symmetric_grid(double center, double half_span, int n) {
  if (!(half_span > 0.0) || !std::isfinite(half_span)) {
    throw InvalidArgument("half span must be finite and > 0");
  }
  if (n < 2) throw InvalidArgument("grid needs at least 2 points");
  // Offsets are exactly antisymmetric about the center.
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double off = half_span * static_cast<double>(2 * i - (n - 1)) / (n - 1);
    g[static_cast<std::size_t>(i)] = center + off;
  }
  return g;
}

}  // namespace cavqed
