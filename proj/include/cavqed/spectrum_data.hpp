#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace cavqed {

enum class AxisKind { FrequencyOffset, Wavelength };

std::string_view to_string(AxisKind kind);
// Accepts "frequency-offset" and "wavelength"; throws ParseError otherwise.
AxisKind parse_axis_kind(std::string_view text);

// Sampled curve with a strictly monotonic abscissa. Frequencies are GHz
// offsets from a reference, wavelengths are nm.
class Spectrum {
 public:
  Spectrum() = default;
  // Throws InvalidArgument on size mismatch, non-finite values or a
  // non-monotonic abscissa.
  Spectrum(std::vector<double> x, std::vector<double> y, AxisKind axis);

  const std::vector<double>& x() const noexcept { return x_; }
  const std::vector<double>& y() const noexcept { return y_; }
  AxisKind axis() const noexcept { return axis_; }
  std::size_t size() const noexcept { return x_.size(); }
  bool empty() const noexcept { return x_.empty(); }

  std::map<std::string, std::string> metadata;

 private:
  std::vector<double> x_;
  std::vector<double> y_;
  AxisKind axis_ = AxisKind::FrequencyOffset;
};

// Throws InvalidArgument unless strictly increasing or strictly decreasing.
void require_monotonic(const std::vector<double>& grid, const char* what);

// n points evenly spanning [center - half_span, center + half_span].
std::vector<double> symmetric_grid(double center, double half_span, int n = 401);
std::vector<double> linear_grid(double start, double stop, int n);

}  // namespace cavqed
