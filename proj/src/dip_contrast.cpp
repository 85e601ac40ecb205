#include <algorithm>
#include <cmath>

#include "cavqed/error.hpp"
#include "cavqed/fit.hpp"
#include "cavqed/metrics.hpp"

namespace cavqed {

DipContrast dip_contrast(const Spectrum& spectrum, double window_lo, double window_hi) {
  if (!(window_lo < window_hi)) throw InvalidArgument("dip window needs lo < hi");
  const auto& xs = spectrum.x();
  const auto& ys = spectrum.y();
  std::vector<bool> outside(spectrum.size());
  double minimum = INFINITY;
  std::size_t n_outside = 0;
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    const bool in = xs[i] >= window_lo && xs[i] <= window_hi;
    outside[i] = !in;
    if (in) minimum = std::min(minimum, ys[i]);
    else ++n_outside;
  }
  if (!std::isfinite(minimum)) throw InvalidArgument("dip window contains no samples");
  if (n_outside < 5) throw InvalidArgument("dip window leaves fewer than 5 samples for the baseline fit");

  DipContrast out;
  out.minimum = minimum;
  const auto [lo_it, hi_it] = std::minmax_element(ys.begin(), ys.end());
  const double scale = std::max(std::abs(*lo_it), std::abs(*hi_it));
  if (*hi_it - *lo_it <= 1e-12 * scale) {
    out.baseline = *hi_it;
    out.offset = *lo_it;
    return out;
  }

  const FitResult fit = fit_lorentzian(spectrum, outside);
  out.fit_converged = fit.converged;
  const double amplitude = fit.value("amplitude");
  out.offset = fit.value("offset");
  out.baseline = out.offset + amplitude;
  if (!std::isfinite(out.baseline)) throw NumericalError("baseline fit failed");
  if (amplitude <= 0.0) return out;
  out.contrast = std::clamp((out.baseline - minimum) / amplitude, 0.0, 1.0);
  return out;
}

}  // namespace cavqed
