#pragma once

// Driven two-mode / two-dot model in the rotating frame of the laser,
// its Lindblad generator, steady state and a fixed-step RK4 integrator.
//
// Units: every frequency, detuning and rate is a "/2pi" value in GHz and is
// used without 2pi factors; times are therefore in ns. The steady state is
// invariant under a common rescaling of all rates and detunings, so the
// choice does not affect spectra or fits.
//
// Liouvillian vectorization is column stacking: vec(A X B) = (B^T (x) A) vec(X).

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cavqed/hilbert.hpp"

namespace cavqed {

struct SystemParams {
  double kappa_h = 0.0;  // cavity energy decay rates
  double kappa_v = 0.0;
  double delta_h = 0.0;  // cavity frequencies relative to omega_ref
  double delta_v = 0.0;
  double delta_1 = 0.0;  // dot frequencies relative to omega_ref
  double delta_2 = 0.0;
  double g_h = 0.0;  // dot 1 <-> mode H, dot 2 <-> mode V
  double g_v = 0.0;
  double gamma_1 = 0.0;  // spontaneous emission
  double gamma_2 = 0.0;
  double gamma_d1 = 0.0;  // pure dephasing
  double gamma_d2 = 0.0;
  double eta_h = 0.0;  // coherent drive amplitudes (real, >= 0)
  double eta_v = 0.0;
  double omega_ref = 0.0;  // absolute reference frequency, reporting only

  // Throws InvalidArgument on negative rates/drives or non-finite values.
  void validate() const;

  // Device #1 values: kappa_H = 16.04, kappa_V = 18.04, omega_H/2pi =
  // 309.0177 THz (the reference), omega_V/2pi = 309.0540 THz, dots resonant
  // with their modes, gamma = 0.16, g_H = 1.37, g_V = 1.64,
  // gamma_d1 = 0.05, gamma_d2 = 0.17, eta = 0.1.
  static SystemParams device1();
};

// Ordering of the dot operators in the dot energy term and in the
// dephasing jump. The literal model writes (w_j - w_L) s s^dag and
// sqrt(gamma_d) s s^dag; the default uses the excited-state projector.
enum class DotEnergyTerm {
  ExcitedProjector,  // (w_j - w_L) s^dag s
  AsPrinted,         // (w_j - w_L) s s^dag  (= constant - (w_j - w_L) s^dag s)
};

enum class DephasingJump {
  // sqrt(2 gamma_d) s^dag s: the dipole decays at gamma/2 + gamma_d, so the
  // emitter linewidth is Gamma = gamma + 2 gamma_d.
  Linewidth,
  // sqrt(gamma_d) s s^dag: dipole decays at gamma/2 + gamma_d/2.
  AsPrinted,
};

struct ModelOptions {
  DotEnergyTerm dot_energy = DotEnergyTerm::ExcitedProjector;
  DephasingJump dephasing = DephasingJump::Linewidth;
};

OperatorMatrix build_hamiltonian(const SpaceSpec& space, const SystemParams& p,
                                 double laser_detuning, const ModelOptions& opts = {});

// [sqrt(kH) a, sqrt(kV) b, sqrt(g1) s1, sqrt(g2) s2, L_d1, L_d2], in that order.
std::vector<OperatorMatrix> jump_operators(const SpaceSpec& space, const SystemParams& p,
                                           const ModelOptions& opts = {});

class Superoperator {
 public:
  Superoperator(Eigen::MatrixXcd matrix, Eigen::Index hilbert_dim);

  const Eigen::MatrixXcd& matrix() const noexcept { return m_; }
  Eigen::Index hilbert_dim() const noexcept { return d_; }

  Eigen::MatrixXcd apply(const Eigen::MatrixXcd& rho) const;

 private:
  Eigen::MatrixXcd m_;
  Eigen::Index d_;
};

Superoperator liouvillian(const OperatorMatrix& h, std::span<const OperatorMatrix> jumps);

// -i[H, rho] + sum_k (L rho L^dag - {L^dag L, rho}/2), evaluated directly.
Eigen::MatrixXcd lindblad_rhs(const OperatorMatrix& h, std::span<const OperatorMatrix> jumps,
                              const Eigen::MatrixXcd& rho);

struct SteadyStateInfo {
  double rcond = 0.0;           // reciprocal condition estimate of the bordered system
  double relative_residual = 0.0;  // ||L x|| / (||L|| ||x||)
  bool used_fallback = false;
};

// Null vector of the generator with unit trace. Row-replacement + LU first;
// rank-revealing least squares when the bordered system is near singular.
// Throws DegenerateSteadyState when the null space is not one-dimensional.
DensityMatrix steady_state(const Superoperator& l, SteadyStateInfo* info = nullptr);

// Upper bound on the generator norm: spread(H) + 2 sum ||L_k||^2.
double generator_rate_bound(const OperatorMatrix& h, std::span<const OperatorMatrix> jumps);

// Fixed-step RK4 integration of the master equation from rho0 to t_final.
// dt is shrunk so that it divides t_final. Requires dt * rate_bound < 0.1
// (StepSizeError otherwise); throws StepSizeError if the trace drifts by
// more than 1e-4.
DensityMatrix evolve(const OperatorMatrix& h, std::span<const OperatorMatrix> jumps,
                     const DensityMatrix& rho0, double t_final, double dt);

// --- Factorized route ------------------------------------------------------
//
// Mode H couples only to dot 1 and mode V only to dot 2, and every jump
// acts inside one of these pairs, so the generator splits as
// L = L_H1 (x) 1 + 1 (x) L_V2 and the steady state is the product of the two
// pair steady states. Each "branch" lives on a [mode, dot] space of
// dimension 2 (n_max + 1).

struct BranchParams {
  double kappa = 0.0;
  double delta_c = 0.0;
  double g = 0.0;
  double gamma = 0.0;
  double gamma_d = 0.0;
  double delta_e = 0.0;
  double eta = 0.0;
};

BranchParams branch_params(const SystemParams& p, Mode mode);

OperatorMatrix branch_hamiltonian(int n_max, const BranchParams& b, double laser_detuning,
                                  const ModelOptions& opts = {});
// [sqrt(kappa) a, sqrt(gamma) s, L_d]
std::vector<OperatorMatrix> branch_jumps(int n_max, const BranchParams& b,
                                         const ModelOptions& opts = {});
DensityMatrix branch_steady_state(int n_max, const BranchParams& b, double laser_detuning,
                                  const ModelOptions& opts = {});

// Joint steady state assembled from the two branch states, returned in the
// [H, V, dot1, dot2] ordering.
DensityMatrix factorized_steady_state(const SpaceSpec& space, const SystemParams& p,
                                      double laser_detuning, const ModelOptions& opts = {});

// Mode observables of one branch steady state.
struct BranchObservables {
  double photon_number = 0.0;  // Tr[rho a^dag a]
  cplx amplitude;              // Tr[rho a]
  double dot_population = 0.0;  // Tr[rho s^dag s]
};

BranchObservables branch_observables(int n_max, const DensityMatrix& rho);

}  // namespace cavqed
