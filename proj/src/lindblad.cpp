#include "cavqed/lindblad.hpp"

#include <cmath>
#include <string>

#include <Eigen/QR>
#include <Eigen/Sparse>

#include "cavqed/error.hpp"

namespace cavqed {

namespace {

constexpr cplx kI{0.0, 1.0};

void require_rate(double v, const char* name) {
  if (!std::isfinite(v) || v < 0.0) {
    throw InvalidArgument(std::string(name) + " must be finite and >= 0 (got " +
                          std::to_string(v) + ")");
  }
}

void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) throw InvalidArgument(std::string(name) + " must be finite");
}

void validate_branch(const BranchParams& b) {
  require_rate(b.kappa, "kappa");
  require_rate(b.gamma, "gamma");
  require_rate(b.gamma_d, "gamma_d");
  require_rate(b.eta, "eta");
  require_finite(b.g, "g");
  require_finite(b.delta_c, "cavity detuning");
  require_finite(b.delta_e, "dot detuning");
}

OperatorMatrix dot_energy_operator(const OperatorMatrix& s, DotEnergyTerm term) {
  return term == DotEnergyTerm::ExcitedProjector ? OperatorMatrix(s.adjoint() * s)
                                                  : OperatorMatrix(s * s.adjoint());
}

OperatorMatrix dephasing_jump(const OperatorMatrix& s, double gamma_d, DephasingJump conv) {
  if (conv == DephasingJump::Linewidth) return std::sqrt(2.0 * gamma_d) * (s.adjoint() * s);
  return std::sqrt(gamma_d) * (s * s.adjoint());
}

// One cavity mode coupled to one dot, with a and s already embedded in
// whatever space the caller works in.
OperatorMatrix pair_hamiltonian(const OperatorMatrix& a, const OperatorMatrix& s,
                                const BranchParams& b, double laser_detuning,
                                const ModelOptions& opts) {
  const OperatorMatrix ad = a.adjoint();
  const OperatorMatrix sd = s.adjoint();
  OperatorMatrix h = (b.delta_c - laser_detuning) * (ad * a);
  h += (b.delta_e - laser_detuning) * dot_energy_operator(s, opts.dot_energy);
  h += (kI * b.g) * (ad * s - a * sd);
  h += b.eta * (ad + a);
  return h;
}

// out += scale * (A (x) B), touching only the nonzeros of A and B.
void add_kron(Eigen::MatrixXcd& out, const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b,
              cplx scale) {
  struct Entry {
    Eigen::Index r, c;
    cplx v;
  };
  std::vector<Entry> bnz;
  for (Eigen::Index c = 0; c < b.cols(); ++c)
    for (Eigen::Index r = 0; r < b.rows(); ++r)
      if (b(r, c) != cplx{}) bnz.push_back({r, c, b(r, c)});

  const Eigen::Index br = b.rows(), bc = b.cols();
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      const cplx av = a(i, j);
      if (av == cplx{}) continue;
      const cplx f = scale * av;
      for (const Entry& e : bnz) out(i * br + e.r, j * bc + e.c) += f * e.v;
    }
  }
}

Eigen::MatrixXcd unvec(const Eigen::VectorXcd& v, Eigen::Index d) {
  return Eigen::Map<const Eigen::MatrixXcd>(v.data(), d, d);
}

DensityMatrix finalize_state(Eigen::MatrixXcd rho) {
  rho /= rho.trace();
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return DensityMatrix::from_matrix(std::move(rho));
}

double op_norm(const OperatorMatrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m.adjoint() * m, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

}  // namespace

void SystemParams::validate() const {
  require_rate(kappa_h, "kappa_h");
  require_rate(kappa_v, "kappa_v");
  require_rate(gamma_1, "gamma_1");
  require_rate(gamma_2, "gamma_2");
  require_rate(gamma_d1, "gamma_d1");
  require_rate(gamma_d2, "gamma_d2");
  require_rate(eta_h, "eta_h");
  require_rate(eta_v, "eta_v");
  require_finite(delta_h, "delta_h");
  require_finite(delta_v, "delta_v");
  require_finite(delta_1, "delta_1");
  require_finite(delta_2, "delta_2");
  require_finite(g_h, "g_h");
  require_finite(g_v, "g_v");
  require_finite(omega_ref, "omega_ref");
  if (omega_ref < 0.0) throw InvalidArgument("omega_ref must be >= 0");
}

SystemParams SystemParams::device1() {
  SystemParams p;
  p.omega_ref = 309017.7;
  p.kappa_h = 16.04;
  p.kappa_v = 18.04;
  p.delta_h = 0.0;
  p.delta_v = 309054.0 - 309017.7;
  p.delta_1 = p.delta_h;
  p.delta_2 = p.delta_v;
  p.g_h = 1.37;
  p.g_v = 1.64;
  p.gamma_1 = 0.16;
  p.gamma_2 = 0.16;
  p.gamma_d1 = 0.05;
  p.gamma_d2 = 0.17;
  p.eta_h = 0.1;
  p.eta_v = 0.1;
  return p;
}

BranchParams branch_params(const SystemParams& p, Mode mode) {
  if (mode == Mode::H) {
    return {p.kappa_h, p.delta_h, p.g_h, p.gamma_1, p.gamma_d1, p.delta_1, p.eta_h};
  }
  return {p.kappa_v, p.delta_v, p.g_v, p.gamma_2, p.gamma_d2, p.delta_2, p.eta_v};
}

OperatorMatrix build_hamiltonian(const SpaceSpec& space, const SystemParams& p,
                                 double laser_detuning, const ModelOptions& opts) {
  p.validate();
  require_finite(laser_detuning, "laser detuning");
  return pair_hamiltonian(annihilation(space, Mode::H), lowering(space, Dot::One),
                          branch_params(p, Mode::H), laser_detuning, opts) +
         pair_hamiltonian(annihilation(space, Mode::V), lowering(space, Dot::Two),
                          branch_params(p, Mode::V), laser_detuning, opts);
}

std::vector<OperatorMatrix> jump_operators(const SpaceSpec& space, const SystemParams& p,
                                           const ModelOptions& opts) {
  p.validate();
  const OperatorMatrix s1 = lowering(space, Dot::One);
  const OperatorMatrix s2 = lowering(space, Dot::Two);
  return {std::sqrt(p.kappa_h) * annihilation(space, Mode::H),
          std::sqrt(p.kappa_v) * annihilation(space, Mode::V),
          std::sqrt(p.gamma_1) * s1,
          std::sqrt(p.gamma_2) * s2,
          dephasing_jump(s1, p.gamma_d1, opts.dephasing),
          dephasing_jump(s2, p.gamma_d2, opts.dephasing)};
}

Superoperator::Superoperator(Eigen::MatrixXcd matrix, Eigen::Index hilbert_dim)
    : m_(std::move(matrix)), d_(hilbert_dim) {
  if (m_.rows() != d_ * d_ || m_.cols() != d_ * d_) {
    throw InvalidArgument("superoperator must be d^2 x d^2");
  }
}

Eigen::MatrixXcd Superoperator::apply(const Eigen::MatrixXcd& rho) const {
  if (rho.rows() != d_ || rho.cols() != d_) throw InvalidArgument("state dimension mismatch");
  const Eigen::VectorXcd v = Eigen::Map<const Eigen::VectorXcd>(rho.data(), d_ * d_);
  return unvec(m_ * v, d_);
}

Superoperator liouvillian(const OperatorMatrix& h, std::span<const OperatorMatrix> jumps) {
  const Eigen::Index d = h.rows();
  if (h.cols() != d) throw InvalidArgument("Hamiltonian must be square");
  for (const auto& l : jumps) {
    if (l.rows() != d || l.cols() != d) throw InvalidArgument("jump operator dimension mismatch");
  }
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(d, d);
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(d * d, d * d);
  add_kron(out, id, h, -kI);
  add_kron(out, h.transpose(), id, kI);
  for (const auto& l : jumps) {
    const Eigen::MatrixXcd ldl = l.adjoint() * l;
    add_kron(out, l.conjugate(), l, 1.0);
    add_kron(out, id, ldl, -0.5);
    add_kron(out, ldl.transpose(), id, -0.5);
  }
  return Superoperator(std::move(out), d);
}

Eigen::MatrixXcd lindblad_rhs(const OperatorMatrix& h, std::span<const OperatorMatrix> jumps,
                              const Eigen::MatrixXcd& rho) {
  Eigen::MatrixXcd out = -kI * (h * rho - rho * h);
  for (const auto& l : jumps) {
    const Eigen::MatrixXcd ldl = l.adjoint() * l;
    out += l * rho * l.adjoint() - 0.5 * (ldl * rho + rho * ldl);
  }
  return out;
}

DensityMatrix steady_state(const Superoperator& l, SteadyStateInfo* info) {
  const Eigen::Index d = l.hilbert_dim();
  const Eigen::Index n = d * d;
  const Eigen::MatrixXcd& lm = l.matrix();
  const double lnorm = lm.norm();

  SteadyStateInfo local;
  SteadyStateInfo& inf = info ? *info : local;
  inf = {};

  auto relative_residual = [&](const Eigen::VectorXcd& x) {
    const double denom = lnorm * x.norm();
    return denom > 0.0 ? (lm * x).norm() / denom : (lm * x).norm();
  };

  // The population rows of a trace-preserving generator sum to zero, so
  // replacing row 0 by the trace functional loses no information.
  Eigen::VectorXcd x;
  {
    Eigen::MatrixXcd bordered = lm;
    bordered.row(0).setZero();
    for (Eigen::Index i = 0; i < d; ++i) bordered(0, i + i * d) = 1.0;
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n);
    rhs(0) = 1.0;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(bordered);
    inf.rcond = lu.rcond();
    // rcond() is an estimate and can miss an exactly singular factor.
    const Eigen::VectorXd piv = lu.matrixLU().diagonal().cwiseAbs();
    const bool pivots_ok = piv.minCoeff() > 1e-14 * piv.maxCoeff();
    if (pivots_ok && inf.rcond > 1e-14 && std::isfinite(inf.rcond)) {
      x = lu.solve(rhs);
      inf.relative_residual = relative_residual(x);
    }
  }

  if (x.size() == 0 || !x.allFinite() || !(inf.relative_residual < 1e-9)) {
    inf.used_fallback = true;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXcd> cod_l(lm);
    cod_l.setThreshold(1e-10);
    if (cod_l.rank() < n - 1) {
      throw DegenerateSteadyState("generator null space has dimension " +
                                  std::to_string(n - cod_l.rank()) +
                                  "; steady state is not unique");
    }
    Eigen::MatrixXcd aug(n + 1, n);
    aug.topRows(n) = lm;
    aug.row(n).setZero();
    for (Eigen::Index i = 0; i < d; ++i) aug(n, i + i * d) = 1.0;
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n + 1);
    rhs(n) = 1.0;
    x = aug.completeOrthogonalDecomposition().solve(rhs);
    inf.relative_residual = relative_residual(x);
    if (!x.allFinite() || inf.relative_residual > 1e-6) {
      throw DegenerateSteadyState("least-squares steady state residual " +
                                  std::to_string(inf.relative_residual) + " exceeds 1e-6");
    }
  }
  return finalize_state(unvec(x, d));
}

double generator_rate_bound(const OperatorMatrix& h, std::span<const OperatorMatrix> jumps) {
  const Eigen::MatrixXcd herm = 0.5 * (h + h.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm, Eigen::EigenvaluesOnly);
  double bound = es.eigenvalues().maxCoeff() - es.eigenvalues().minCoeff();
  for (const auto& l : jumps) {
    const double nl = op_norm(l);
    bound += 2.0 * nl * nl;
  }
  return bound;
}

DensityMatrix evolve(const OperatorMatrix& h, std::span<const OperatorMatrix> jumps,
                     const DensityMatrix& rho0, double t_final, double dt) {
  const Eigen::Index d = h.rows();
  if (rho0.dim() != d) throw InvalidArgument("initial state dimension mismatch");
  if (!(t_final >= 0.0) || !(dt > 0.0)) throw InvalidArgument("need t_final >= 0 and dt > 0");
  const double rate = generator_rate_bound(h, jumps);
  if (dt * rate >= 0.1) {
    throw StepSizeError("dt * rate bound = " + std::to_string(dt * rate) +
                        " (must be < 0.1; rate bound " + std::to_string(rate) + ")");
  }
  if (t_final == 0.0) return rho0;

  // Dense-times-sparse products only; they stream through column-major
  // storage. With rho Hermitian and Y = rho (i Heff^dag):
  //   -i(Heff rho - rho Heff^dag) = Y + Y^dag,
  //   L rho L^dag = (rho L^dag)^dag L^dag.
  using Sparse = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;
  const double prune = 1e-300;
  OperatorMatrix heff = h;
  std::vector<Sparse> l_adj;
  for (const auto& l : jumps) {
    heff -= (0.5 * kI) * (l.adjoint() * l);
    Sparse s = OperatorMatrix(l.adjoint()).sparseView(prune, 1.0);
    if (s.nonZeros() > 0) l_adj.push_back(std::move(s));
  }
  const Sparse i_heff_adj = OperatorMatrix(kI * heff.adjoint()).sparseView(prune, 1.0);

  Eigen::MatrixXcd y(d, d), m(d, d), m_adj(d, d);
  auto rhs = [&](const Eigen::MatrixXcd& rho, Eigen::MatrixXcd& out) {
    y.noalias() = rho * i_heff_adj;
    out = y + y.adjoint();
    for (const Sparse& ld : l_adj) {
      m.noalias() = rho * ld;
      m_adj = m.adjoint();
      out.noalias() += m_adj * ld;
    }
  };

  const auto steps = static_cast<long>(std::ceil(t_final / dt - 1e-12));
  const double h_step = t_final / static_cast<double>(steps);
  Eigen::MatrixXcd rho = rho0.matrix();
  const cplx tr0 = rho.trace();
  Eigen::MatrixXcd k1(d, d), k2(d, d), k3(d, d), k4(d, d), tmp(d, d);
  for (long s = 0; s < steps; ++s) {
    rhs(rho, k1);
    tmp = rho + (0.5 * h_step) * k1;
    rhs(tmp, k2);
    tmp = rho + (0.5 * h_step) * k2;
    rhs(tmp, k3);
    tmp = rho + h_step * k3;
    rhs(tmp, k4);
    rho += (h_step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  const double drift = std::abs(rho.trace() - tr0);
  if (!rho.allFinite() || drift > 1e-4) {
    throw StepSizeError("integration unstable: trace drift " + std::to_string(drift));
  }
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return DensityMatrix::from_matrix(std::move(rho));
}

// --- Factorized route ------------------------------------------------------

OperatorMatrix branch_hamiltonian(int n_max, const BranchParams& b, double laser_detuning,
                                  const ModelOptions& opts) {
  validate_branch(b);
  const std::array<Eigen::Index, 2> dims{n_max + 1, 2};
  return pair_hamiltonian(kron_embed(dims, fock_annihilation(n_max), 0),
                          kron_embed(dims, two_level_lowering(), 1), b, laser_detuning, opts);
}

std::vector<OperatorMatrix> branch_jumps(int n_max, const BranchParams& b,
                                         const ModelOptions& opts) {
  validate_branch(b);
  const std::array<Eigen::Index, 2> dims{n_max + 1, 2};
  const OperatorMatrix a = kron_embed(dims, fock_annihilation(n_max), 0);
  const OperatorMatrix s = kron_embed(dims, two_level_lowering(), 1);
  return {std::sqrt(b.kappa) * a, std::sqrt(b.gamma) * s,
          dephasing_jump(s, b.gamma_d, opts.dephasing)};
}

DensityMatrix branch_steady_state(int n_max, const BranchParams& b, double laser_detuning,
                                  const ModelOptions& opts) {
  const OperatorMatrix h = branch_hamiltonian(n_max, b, laser_detuning, opts);
  const auto jumps = branch_jumps(n_max, b, opts);
  return steady_state(liouvillian(h, jumps));
}

DensityMatrix factorized_steady_state(const SpaceSpec& space, const SystemParams& p,
                                      double laser_detuning, const ModelOptions& opts) {
  p.validate();
  const DensityMatrix rh =
      branch_steady_state(space.n_max_h(), branch_params(p, Mode::H), laser_detuning, opts);
  const DensityMatrix rv =
      branch_steady_state(space.n_max_v(), branch_params(p, Mode::V), laser_detuning, opts);
  const Eigen::Index dh = space.n_max_h() + 1;
  const Eigen::Index dv = space.n_max_v() + 1;
  const Eigen::Index d = space.dim();
  auto joint = [dv](Eigen::Index h, Eigen::Index v, Eigen::Index e1, Eigen::Index e2) {
    return ((h * dv + v) * 2 + e1) * 2 + e2;
  };
  Eigen::MatrixXcd rho(d, d);
  for (Eigen::Index h = 0; h < dh; ++h)
    for (Eigen::Index e1 = 0; e1 < 2; ++e1)
      for (Eigen::Index h2 = 0; h2 < dh; ++h2)
        for (Eigen::Index f1 = 0; f1 < 2; ++f1) {
          const cplx a = rh.matrix()(h * 2 + e1, h2 * 2 + f1);
          for (Eigen::Index v = 0; v < dv; ++v)
            for (Eigen::Index e2 = 0; e2 < 2; ++e2)
              for (Eigen::Index v2 = 0; v2 < dv; ++v2)
                for (Eigen::Index f2 = 0; f2 < 2; ++f2) {
                  rho(joint(h, v, e1, e2), joint(h2, v2, f1, f2)) =
                      a * rv.matrix()(v * 2 + e2, v2 * 2 + f2);
                }
        }
  return finalize_state(std::move(rho));
}

BranchObservables branch_observables(int n_max, const DensityMatrix& rho) {
  const std::array<Eigen::Index, 2> dims{n_max + 1, 2};
  if (rho.dim() != 2 * (n_max + 1)) throw InvalidArgument("branch state dimension mismatch");
  const OperatorMatrix a = kron_embed(dims, fock_annihilation(n_max), 0);
  const OperatorMatrix s = kron_embed(dims, two_level_lowering(), 1);
  BranchObservables o;
  o.photon_number = rho.expectation(a.adjoint() * a).real();
  o.amplitude = rho.expectation(a);
  o.dot_population = rho.expectation(s.adjoint() * s).real();
  return o;
}

}  // namespace cavqed
