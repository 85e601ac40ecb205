#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "cavqed/error.hpp"
#include "cavqed/lindblad.hpp"
#include "oracles.hpp"

using namespace cavqed;

namespace {

SystemParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> rate(0.05, 5.0), det(-20.0, 20.0), coup(-3.0, 3.0);
  SystemParams p;
  p.kappa_h = rate(rng);
  p.kappa_v = rate(rng);
  p.gamma_1 = rate(rng);
  p.gamma_2 = rate(rng);
  p.gamma_d1 = rate(rng);
  p.gamma_d2 = rate(rng);
  p.delta_h = det(rng);
  p.delta_v = det(rng);
  p.delta_1 = det(rng);
  p.delta_2 = det(rng);
  p.g_h = coup(rng);
  p.g_v = coup(rng);
  p.eta_h = rate(rng);
  p.eta_v = rate(rng);
  return p;
}

// -i[H, rho] + sum_k (L rho L^dag - {L^dag L, rho}/2), written out directly.
Eigen::MatrixXcd master_rhs(const Eigen::MatrixXcd& h, const std::vector<OperatorMatrix>& ls,
                            const Eigen::MatrixXcd& rho) {
  const oracle::cplx i{0.0, 1.0};
  Eigen::MatrixXcd out = -i * (h * rho - rho * h);
  for (const auto& l : ls) {
    const Eigen::MatrixXcd n = l.adjoint() * l;
    out += l * rho * l.adjoint() - 0.5 * n * rho - 0.5 * rho * n;
  }
  return out;
}

Eigen::VectorXcd vec(const Eigen::MatrixXcd& m) {
  return Eigen::Map<const Eigen::VectorXcd>(m.data(), m.size());
}

DensityMatrix joint_steady(const SpaceSpec& s, const SystemParams& p, double dl,
                           const ModelOptions& o = {}) {
  return steady_state(liouvillian(build_hamiltonian(s, p, dl, o), jump_operators(s, p, o)));
}

// Embeds a state of a smaller Fock cutoff into a larger space.
Eigen::MatrixXcd pad_state(const Eigen::MatrixXcd& rho, const SpaceSpec& from, const SpaceSpec& to) {
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(to.dim(), to.dim());
  auto map = [&](Eigen::Index i) {
    return oracle::encode(oracle::decode(i, from.n_max_h(), from.n_max_v()), to.n_max_v());
  };
  for (Eigen::Index r = 0; r < from.dim(); ++r)
    for (Eigen::Index c = 0; c < from.dim(); ++c) out(map(r), map(c)) = rho(r, c);
  return out;
}

}  // namespace

TEST_CASE("Hamiltonian with nothing switched on vanishes") {
  const SpaceSpec s = make_space(2, 2);
  const OperatorMatrix h = build_hamiltonian(s, SystemParams{}, 0.0);
  CHECK(oracle::max_abs(h) == 0.0);
  // The literal dot-energy ordering is also zero here; in general it only
  // commutes with everything up to its detuning-weighted identity part.
  ModelOptions printed;
  printed.dot_energy = DotEnergyTerm::AsPrinted;
  std::mt19937_64 rng(1);
  const OperatorMatrix hp = build_hamiltonian(s, SystemParams{}, 0.0, printed);
  const Eigen::MatrixXcd x = oracle::random_matrix(s.dim(), rng);
  CHECK(oracle::max_abs(hp * x - x * hp) == 0.0);
}

TEST_CASE("coupling matrix element <1,0,g,g|H|0,0,e,g> = i g_H") {
  const SpaceSpec s = make_space(3, 3);
  SystemParams p;
  p.g_h = 1.37;
  const OperatorMatrix h = build_hamiltonian(s, p, 0.0);
  const auto row = oracle::encode({1, 0, 0, 0}, 3);
  const auto col = oracle::encode({0, 0, 1, 0}, 3);
  CHECK(std::abs(h(row, col) - oracle::cplx(0.0, 1.37)) < 1e-15);
  CHECK(std::abs(h(col, row) - oracle::cplx(0.0, -1.37)) < 1e-15);
}

TEST_CASE("Hamiltonian is Hermitian for random parameters") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> det(-30.0, 30.0);
  const SpaceSpec s = make_space(3, 2);
  for (int k = 0; k < 100; ++k) {
    const SystemParams p = random_params(rng);
    const OperatorMatrix h = build_hamiltonian(s, p, det(rng));
    CHECK(oracle::max_abs(h - h.adjoint()) < 1e-12);
  }
}

TEST_CASE("Hamiltonian matches a basis-enumeration construction") {
  std::mt19937_64 rng(8);
  const SpaceSpec s = make_space(2, 3);
  const SystemParams p = random_params(rng);
  const double dl = 1.7;
  const Eigen::MatrixXcd a = oracle::joint_mode_lowering(2, 3, true);
  const Eigen::MatrixXcd b = oracle::joint_mode_lowering(2, 3, false);
  const Eigen::MatrixXcd s1 = oracle::joint_dot_lowering(2, 3, true);
  const Eigen::MatrixXcd s2 = oracle::joint_dot_lowering(2, 3, false);
  const oracle::cplx i{0.0, 1.0};
  const Eigen::MatrixXcd expect =
      (p.delta_h - dl) * a.adjoint() * a + (p.delta_v - dl) * b.adjoint() * b +
      (p.delta_1 - dl) * s1.adjoint() * s1 + (p.delta_2 - dl) * s2.adjoint() * s2 +
      i * p.g_h * (a.adjoint() * s1 - a * s1.adjoint()) + i * p.g_v * (b.adjoint() * s2 - b * s2.adjoint()) +
      p.eta_h * (a.adjoint() + a) + p.eta_v * (b.adjoint() + b);
  CHECK(oracle::max_abs(build_hamiltonian(s, p, dl) - expect) < 1e-13);
}

TEST_CASE("printed dot-energy ordering flips the dot detuning and adds a constant") {
  // (w - w_L) s s^dag = (w - w_L) - (w - w_L) s^dag s
  std::mt19937_64 rng(9);
  const SpaceSpec s = make_space(2, 2);
  const SystemParams p = random_params(rng);
  const double dl = -2.5;
  ModelOptions printed;
  printed.dot_energy = DotEnergyTerm::AsPrinted;
  SystemParams mirrored = p;
  mirrored.delta_1 = 2.0 * dl - p.delta_1;
  mirrored.delta_2 = 2.0 * dl - p.delta_2;
  const double constant = (p.delta_1 - dl) + (p.delta_2 - dl);
  const Eigen::MatrixXcd diff =
      build_hamiltonian(s, p, dl, printed) - build_hamiltonian(s, mirrored, dl) - constant * identity(s);
  CHECK(oracle::max_abs(diff) < 1e-12);
}

TEST_CASE("jump operators") {
  const SpaceSpec s = make_space(3, 3);
  SUBCASE("order and scale") {
    const SystemParams p = SystemParams::device1();
    const auto ls = jump_operators(s, p);
    REQUIRE(ls.size() == 6);
    const auto vac = oracle::encode({0, 0, 0, 0}, 3);
    const auto one_h = oracle::encode({1, 0, 0, 0}, 3);
    CHECK(std::abs(ls[0](vac, one_h) - std::sqrt(16.04)) < 1e-14);
    CHECK(std::abs(ls[0](vac, one_h)) == doctest::Approx(4.005).epsilon(1e-3));
    CHECK(oracle::max_abs(ls[1] - std::sqrt(18.04) * oracle::joint_mode_lowering(3, 3, false)) < 1e-14);
    CHECK(oracle::max_abs(ls[2] - std::sqrt(0.16) * oracle::joint_dot_lowering(3, 3, true)) < 1e-14);
    CHECK(oracle::max_abs(ls[3] - std::sqrt(0.16) * oracle::joint_dot_lowering(3, 3, false)) < 1e-14);
  }
  SUBCASE("all rates zero gives six zero matrices") {
    const auto ls = jump_operators(s, SystemParams{});
    REQUIRE(ls.size() == 6);
    for (const auto& l : ls) CHECK(oracle::max_abs(l) == 0.0);
  }
  SUBCASE("dephasing operators are scaled projectors") {
    SystemParams p;
    p.gamma_d1 = 0.05;
    ModelOptions printed;
    printed.dephasing = DephasingJump::AsPrinted;
    const OperatorMatrix lp = jump_operators(s, p, printed)[4] / std::sqrt(0.05);
    CHECK(oracle::max_abs(lp * lp - lp) < 1e-14);
    const Eigen::MatrixXcd s1 = oracle::joint_dot_lowering(3, 3, true);
    CHECK(oracle::max_abs(lp - s1 * s1.adjoint()) < 1e-14);
    const OperatorMatrix ld = jump_operators(s, p)[4] / std::sqrt(2.0 * 0.05);
    CHECK(oracle::max_abs(ld * ld - ld) < 1e-14);
    CHECK(oracle::max_abs(ld - s1.adjoint() * s1) < 1e-14);
  }
  SUBCASE("negative rates are rejected") {
    SystemParams p;
    p.kappa_h = -1.0;
    CHECK_THROWS_AS(jump_operators(s, p), InvalidArgument);
    p.kappa_h = 1.0;
    p.gamma_d2 = -0.1;
    CHECK_THROWS_AS(jump_operators(s, p), InvalidArgument);
  }
}

TEST_CASE("printed dephasing channel equals the linewidth channel at half the rate") {
  std::mt19937_64 rng(10);
  const SpaceSpec s = make_space(1, 2);
  SystemParams p = random_params(rng);
  ModelOptions printed;
  printed.dephasing = DephasingJump::AsPrinted;
  const OperatorMatrix h = build_hamiltonian(s, p, 0.3);
  const Superoperator lp = liouvillian(h, jump_operators(s, p, printed));
  p.gamma_d1 *= 0.5;
  p.gamma_d2 *= 0.5;
  const Superoperator ll = liouvillian(h, jump_operators(s, p));
  CHECK(oracle::max_abs(lp.matrix() - ll.matrix()) < 1e-12);
}

TEST_CASE("Liouvillian action equals the master-equation right-hand side") {
  std::mt19937_64 rng(12);
  const SpaceSpec s = make_space(2, 1);
  for (int k = 0; k < 50; ++k) {
    const SystemParams p = random_params(rng);
    const OperatorMatrix h = build_hamiltonian(s, p, 0.7 * k - 10.0);
    const auto ls = jump_operators(s, p);
    const Superoperator l = liouvillian(h, ls);
    const Eigen::MatrixXcd rho = oracle::random_hermitian(s.dim(), rng);
    const Eigen::MatrixXcd expect = master_rhs(h, ls, rho);
    CHECK(oracle::max_abs(l.apply(rho) - expect) < 1e-10);
    CHECK(oracle::max_abs(lindblad_rhs(h, ls, rho) - expect) < 1e-10);
    // Hermitian in, Hermitian out.
    const Eigen::MatrixXcd out = l.apply(rho);
    CHECK(oracle::max_abs(out - out.adjoint()) < 1e-10);
  }
}

TEST_CASE("Liouvillian at the device parameters") {
  const SpaceSpec s = make_space(3, 3);
  const SystemParams p = SystemParams::device1();
  const OperatorMatrix h = build_hamiltonian(s, p, 4.0);
  const auto ls = jump_operators(s, p);
  const Superoperator l = liouvillian(h, ls);
  std::mt19937_64 rng(13);
  const Eigen::MatrixXcd rho = oracle::random_hermitian(s.dim(), rng);
  CHECK(oracle::max_abs(l.apply(rho) - master_rhs(h, ls, rho)) < 1e-10);
  // Trace preservation: vec(I)^dag L = 0.
  const Eigen::VectorXcd id = vec(Eigen::MatrixXcd::Identity(s.dim(), s.dim()));
  CHECK((id.adjoint() * l.matrix()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("vacuum is dark for a decaying cavity") {
  const SpaceSpec s = make_space(3, 1);
  SystemParams p;
  p.kappa_h = 16.04;
  const std::vector<OperatorMatrix> ls{std::sqrt(p.kappa_h) * annihilation(s, Mode::H)};
  const Superoperator l = liouvillian(OperatorMatrix::Zero(s.dim(), s.dim()), ls);
  const Eigen::VectorXcd v = vec(DensityMatrix::basis_state(s.dim(), 0).matrix());
  CHECK((l.matrix() * v).norm() < 1e-14);
}

TEST_CASE("dimension mismatch") {
  const SpaceSpec s = make_space(1, 1);
  const std::vector<OperatorMatrix> ls{OperatorMatrix::Zero(3, 3)};
  CHECK_THROWS_AS(liouvillian(OperatorMatrix::Zero(s.dim(), s.dim()), ls), InvalidArgument);
}

TEST_CASE("generator spectrum is dissipative") {
  std::mt19937_64 rng(14);
  const SpaceSpec s = make_space(1, 1);
  for (int k = 0; k < 5; ++k) {
    const SystemParams p = random_params(rng);
    const Superoperator l = liouvillian(build_hamiltonian(s, p, 1.0), jump_operators(s, p));
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(l.matrix(), false);
    CHECK(es.eigenvalues().real().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("steady state of an undriven system is the ground state") {
  const SpaceSpec s = make_space(2, 2);
  SystemParams p = SystemParams::device1();
  p.eta_h = p.eta_v = 0.0;
  const DensityMatrix rho = joint_steady(s, p, 3.0);
  CHECK(trace_distance(rho, DensityMatrix::basis_state(s.dim(), 0)) < 1e-10);
}

// Decay on every subsystem keeps the steady state unique.
SystemParams empty_cavity() {
  SystemParams p;
  p.kappa_h = 16.04;
  p.kappa_v = 18.04;
  p.gamma_1 = p.gamma_2 = 0.16;
  p.eta_h = 0.1;
  return p;
}

TEST_CASE("driven empty cavity relaxes to a coherent state") {
  const SpaceSpec s = make_space(3, 1);
  const SystemParams p = empty_cavity();
  const OperatorMatrix a = annihilation(s, Mode::H);
  for (double dl : {0.0, 5.0, -12.0}) {
    SteadyStateInfo info;
    const DensityMatrix rho =
        steady_state(liouvillian(build_hamiltonian(s, p, dl), jump_operators(s, p)), &info);
    const double n = rho.expectation(a.adjoint() * a).real();
    CHECK(n == doctest::Approx(oracle::coherent_photons(0.1, 16.04, dl)).epsilon(1e-6));
    CHECK(info.relative_residual < 1e-9);
    CHECK_FALSE(info.used_fallback);
    CHECK(check_density(rho.matrix()).ok());
  }
  // 4 eta^2 / kappa^2 on resonance
  const DensityMatrix rho0 = joint_steady(s, p, 0.0);
  CHECK(rho0.expectation(a.adjoint() * a).real() == doctest::Approx(1.5547e-4).epsilon(1e-4));
}

TEST_CASE("time evolution agrees with the steady state") {
  const SpaceSpec s = make_space(3, 1);
  const SystemParams p = empty_cavity();
  const OperatorMatrix h = build_hamiltonian(s, p, 2.0);
  const auto ls = jump_operators(s, p);
  const double dt = 0.05 / generator_rate_bound(h, ls);
  const DensityMatrix late = evolve(h, ls, DensityMatrix::basis_state(s.dim(), 0), 50.0 / 16.04, dt);
  CHECK(trace_distance(late, steady_state(liouvillian(h, ls))) < 1e-8);
  // The dots start in the ground state and are undriven, so the horizon is
  // set by the cavity alone here.
}

TEST_CASE("time evolution of a coupled branch reaches the steady state") {
  // A horizon of many dot lifetimes; the slow emitter sets the relaxation time.
  const BranchParams b = branch_params(SystemParams::device1(), Mode::H);
  const OperatorMatrix h = branch_hamiltonian(3, b, 1.0);
  const auto ls = branch_jumps(3, b);
  const double dt = 0.09 / generator_rate_bound(h, ls);
  const DensityMatrix late = evolve(h, ls, DensityMatrix::basis_state(h.rows(), 0), 80.0, dt);
  CHECK(trace_distance(late, branch_steady_state(3, b, 1.0)) < 1e-6);
}

TEST_CASE("undriven vacuum stays put under evolution") {
  const SpaceSpec s = make_space(2, 1);
  SystemParams p = SystemParams::device1();
  p.eta_h = p.eta_v = 0.0;
  const OperatorMatrix h = build_hamiltonian(s, p, 0.0);
  const auto ls = jump_operators(s, p);
  const DensityMatrix vac = DensityMatrix::basis_state(s.dim(), 0);
  const DensityMatrix out = evolve(h, ls, vac, 0.5, 0.05 / generator_rate_bound(h, ls));
  CHECK(trace_distance(out, vac) < 1e-14);
}

TEST_CASE("single photon decays as exp(-kappa t)") {
  const SpaceSpec s = make_space(2, 1);
  SystemParams p;
  p.kappa_h = 16.04;
  const OperatorMatrix h = build_hamiltonian(s, p, 0.0);
  const auto ls = jump_operators(s, p);
  const OperatorMatrix a = annihilation(s, Mode::H);
  const auto one = oracle::encode({1, 0, 0, 0}, 1);
  const double dt = 0.02 / generator_rate_bound(h, ls);
  for (double t : {0.01, 0.05, 0.2}) {
    const DensityMatrix rho = evolve(h, ls, DensityMatrix::basis_state(s.dim(), one), t, dt);
    CHECK(rho.expectation(a.adjoint() * a).real() == doctest::Approx(std::exp(-16.04 * t)).epsilon(1e-8));
  }
}

TEST_CASE("evolve rejects steps that are too large") {
  const SpaceSpec s = make_space(1, 1);
  const SystemParams p = SystemParams::device1();
  const OperatorMatrix h = build_hamiltonian(s, p, 0.0);
  const auto ls = jump_operators(s, p);
  const double bound = generator_rate_bound(h, ls);
  CHECK_THROWS_AS(evolve(h, ls, DensityMatrix::basis_state(s.dim(), 0), 1.0, 0.2 / bound), StepSizeError);
  CHECK_THROWS_AS(evolve(h, ls, DensityMatrix::basis_state(s.dim(), 0), -1.0, 0.01 / bound), InvalidArgument);
}

TEST_CASE("a generator without dissipation has no unique steady state") {
  const SpaceSpec s = make_space(1, 1);
  const std::vector<OperatorMatrix> none;
  SteadyStateInfo info;
  CHECK_THROWS_AS(steady_state(liouvillian(OperatorMatrix::Zero(s.dim(), s.dim()), none), &info),
                  DegenerateSteadyState);
}

TEST_CASE("steady states are valid density matrices for random parameters") {
  std::mt19937_64 rng(15);
  const SpaceSpec s = make_space(2, 1);
  for (int k = 0; k < 20; ++k) {
    const SystemParams p = random_params(rng);
    const DensityMatrix rho = joint_steady(s, p, 0.5 * k);
    CHECK(check_density(rho.matrix()).ok());
  }
}

TEST_CASE("uniform rescaling leaves the steady state unchanged") {
  std::mt19937_64 rng(16);
  const SpaceSpec s = make_space(2, 1);
  for (double scale : {2.0 * 3.141592653589793, 0.37, 11.0}) {
    const SystemParams p = random_params(rng);
    SystemParams q = p;
    for (double* f : {&q.kappa_h, &q.kappa_v, &q.gamma_1, &q.gamma_2, &q.gamma_d1, &q.gamma_d2,
                      &q.g_h, &q.g_v, &q.eta_h, &q.eta_v, &q.delta_h, &q.delta_v, &q.delta_1, &q.delta_2}) {
      *f *= scale;
    }
    const double dl = 1.3;
    CHECK(trace_distance(joint_steady(s, p, dl), joint_steady(s, q, scale * dl)) < 1e-9);
  }
}

TEST_CASE("factorized route reproduces the joint steady state") {
  std::mt19937_64 rng(17);
  for (auto [nh, nv] : {std::pair{1, 1}, {2, 1}, {1, 2}}) {
    const SpaceSpec s = make_space(nh, nv);
    for (int k = 0; k < 5; ++k) {
      const SystemParams p = random_params(rng);
      const double dl = 3.0 * k - 6.0;
      CHECK(trace_distance(factorized_steady_state(s, p, dl), joint_steady(s, p, dl)) < 1e-9);
    }
  }
}

TEST_CASE("factorized route at the device parameters and full cutoff") {
  const SpaceSpec s = make_space(3, 3);
  const SystemParams p = SystemParams::device1();
  CHECK(trace_distance(factorized_steady_state(s, p, 1.5), joint_steady(s, p, 1.5)) < 1e-9);
}

TEST_CASE("Fock truncation has converged at n_max = 3") {
  const SystemParams p = SystemParams::device1();
  const SpaceSpec s3 = make_space(3, 3), s4 = make_space(4, 4);
  for (double dl : {-20.0, 0.0, 18.0, 36.3}) {
    const DensityMatrix r3 = factorized_steady_state(s3, p, dl);
    const DensityMatrix r4 = factorized_steady_state(s4, p, dl);
    CHECK(trace_distance(pad_state(r3.matrix(), s3, s4), r4.matrix()) < 1e-8);
  }
}

TEST_CASE("branch observables") {
  BranchParams b;
  b.kappa = 16.04;
  b.gamma = 0.16;
  b.eta = 0.1;
  const auto obs = branch_observables(3, branch_steady_state(3, b, 0.0));
  CHECK(obs.photon_number == doctest::Approx(4 * 0.01 / (16.04 * 16.04)).epsilon(1e-6));
  // Tr[rho a] = -2 i eta / kappa for the convention H = ... + eta (a^dag + a)
  CHECK(std::abs(obs.amplitude - oracle::cplx(0.0, -2 * 0.1 / 16.04)) < 1e-9);
  CHECK(obs.dot_population == 0.0);
}
