#pragma once

// Cross-polarized transmission observable
//   T(w_L) = A_H Tr[rho_ss a^dag a] + A_V Tr[rho_ss b^dag b] + A_0
// and its weak-drive linear-response counterpart.

#include <vector>

#include "cavqed/hilbert.hpp"
#include "cavqed/lindblad.hpp"
#include "cavqed/spectrum_data.hpp"

namespace cavqed {

struct ScalingParams {
  double a_h = 1.0;
  double a_v = 1.0;
  double a_0 = 0.0;

  void validate() const;
};

// Factorized: product of the two mode/dot branch steady states (exact for
// this model, 8x8 states at n_max = 3). Joint: full 64x64 state from the
// d^2 x d^2 generator; slow, kept as a cross-check.
enum class SolverRoute { Factorized, Joint };

struct TransmissionOptions {
  ModelOptions model;
  SolverRoute route = SolverRoute::Factorized;
};

struct CavityResponse {
  BranchObservables h;
  BranchObservables v;
};

CavityResponse cavity_response(const SpaceSpec& space, const SystemParams& p,
                               double laser_detuning, const TransmissionOptions& opts = {});

double transmission_point(const SpaceSpec& space, const SystemParams& p, const ScalingParams& s,
                          double laser_detuning, const TransmissionOptions& opts = {});

// Points are independent; results come back in grid order.
Spectrum transmission_scan(const SpaceSpec& space, const SystemParams& p, const ScalingParams& s,
                           const std::vector<double>& grid, const TransmissionOptions& opts = {});

// Tr[rho a^dag a] of one branch over a grid of laser detunings.
std::vector<double> branch_photon_numbers(int n_max, const BranchParams& b,
                                          const std::vector<double>& grid,
                                          const ModelOptions& opts = {});

// Weak-drive intracavity amplitude
//   eta / (i(d_c - d_L) + kappa/2 + g^2 / (i(d_e - d_L) + gamma/2 + gamma_d))
// for the chosen mode and its dot. The steady-state Tr[rho a] equals -i
// times this value; the coherent photon number is its squared modulus.
cplx linear_response(const SystemParams& p, double laser_detuning, Mode mode);

}  // namespace cavqed
