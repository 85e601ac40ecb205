#include "cavqed/spectrum.hpp"

#include <cmath>

#include "cavqed/error.hpp"

namespace cavqed {

void ScalingParams::validate() const {
  if (!std::isfinite(a_h) || !std::isfinite(a_v) || !std::isfinite(a_0)) {
    throw InvalidArgument("scaling parameters must be finite");
  }
  if (a_h < 0.0 || a_v < 0.0) throw InvalidArgument("A_H and A_V must be >= 0");
}

CavityResponse cavity_response(const SpaceSpec& space, const SystemParams& p,
                               double laser_detuning, const TransmissionOptions& opts) {
  p.validate();
  CavityResponse out;
  if (opts.route == SolverRoute::Factorized) {
    out.h = branch_observables(
        space.n_max_h(),
        branch_steady_state(space.n_max_h(), branch_params(p, Mode::H), laser_detuning, opts.model));
    out.v = branch_observables(
        space.n_max_v(),
        branch_steady_state(space.n_max_v(), branch_params(p, Mode::V), laser_detuning, opts.model));
    return out;
  }
  const OperatorMatrix h = build_hamiltonian(space, p, laser_detuning, opts.model);
  const auto jumps = jump_operators(space, p, opts.model);
  const DensityMatrix rho = steady_state(liouvillian(h, jumps));
  const OperatorMatrix a = annihilation(space, Mode::H);
  const OperatorMatrix b = annihilation(space, Mode::V);
  const OperatorMatrix s1 = lowering(space, Dot::One);
  const OperatorMatrix s2 = lowering(space, Dot::Two);
  out.h = {rho.expectation(a.adjoint() * a).real(), rho.expectation(a),
           rho.expectation(s1.adjoint() * s1).real()};
  out.v = {rho.expectation(b.adjoint() * b).real(), rho.expectation(b),
           rho.expectation(s2.adjoint() * s2).real()};
  return out;
}

double transmission_point(const SpaceSpec& space, const SystemParams& p, const ScalingParams& s,
                          double laser_detuning, const TransmissionOptions& opts) {
  s.validate();
  const CavityResponse r = cavity_response(space, p, laser_detuning, opts);
  return s.a_h * r.h.photon_number + s.a_v * r.v.photon_number + s.a_0;
}

Spectrum transmission_scan(const SpaceSpec& space, const SystemParams& p, const ScalingParams& s,
                           const std::vector<double>& grid, const TransmissionOptions& opts) {
  require_monotonic(grid, "laser detuning grid");
  s.validate();
  std::vector<double> y(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    y[i] = transmission_point(space, p, s, grid[i], opts);
  }
  Spectrum out(grid, std::move(y), AxisKind::FrequencyOffset);
  out.metadata["omega_ref_ghz"] = std::to_string(p.omega_ref);
  return out;
}

std::vector<double> branch_photon_numbers(int n_max, const BranchParams& b,
                                          const std::vector<double>& grid,
                                          const ModelOptions& opts) {
  std::vector<double> n(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    n[i] = branch_observables(n_max, branch_steady_state(n_max, b, grid[i], opts)).photon_number;
  }
  return n;
}

cplx linear_response(const SystemParams& p, double laser_detuning, Mode mode) {
  p.validate();
  const BranchParams b = branch_params(p, mode);
  const cplx i{0.0, 1.0};
  const cplx dot = i * (b.delta_e - laser_detuning) + 0.5 * b.gamma + b.gamma_d;
  cplx denom = i * (b.delta_c - laser_detuning) + 0.5 * b.kappa;
  if (b.g != 0.0) denom += b.g * b.g / dot;
  return b.eta / denom;
}

}  // namespace cavqed
