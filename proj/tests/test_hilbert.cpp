#include <doctest.h>

#include <cmath>
#include <random>

#include "cavqed/error.hpp"
#include "cavqed/hilbert.hpp"
#include "oracles.hpp"

using namespace cavqed;

TEST_CASE("joint dimension is the product of subsystem dimensions") {
  CHECK(make_space(1, 1).dim() == 16);
  CHECK(make_space(3, 3).dim() == 64);
  // (n_h + 1)(n_v + 1)(2)(2) = 3 * 2 * 2 * 2
  CHECK(make_space(2, 1).dim() == 24);
  const auto dims = make_space(2, 1).dims();
  CHECK(dims[0] * dims[1] * dims[2] * dims[3] == 24);
}

TEST_CASE("cutoffs below one are rejected") {
  CHECK_THROWS_AS(make_space(0, 1), InvalidArgument);
  CHECK_THROWS_AS(make_space(1, 0), InvalidArgument);
  CHECK_THROWS_AS(make_space(-2, 3), InvalidArgument);
}

TEST_CASE("single-mode lowering operator elements") {
  const OperatorMatrix a = fock_annihilation(2);
  CHECK(a(0, 1).real() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(a(1, 2).real() == doctest::Approx(1.41421356).epsilon(1e-8));
  CHECK(std::abs(a(1, 2) - std::sqrt(2.0)) < 1e-15);
  CHECK(a.col(0).norm() == 0.0);  // a |0> = 0
}

TEST_CASE("truncated commutator [a, a^dag]") {
  for (int n : {1, 2, 3, 5}) {
    const OperatorMatrix a = fock_annihilation(n);
    const OperatorMatrix c = a * a.adjoint() - a.adjoint() * a;
    for (int k = 0; k < n; ++k) CHECK(std::abs(c(k, k) - 1.0) < 1e-14);
    CHECK(std::abs(c(n, n) + static_cast<double>(n)) < 1e-14);
    CHECK(oracle::max_abs(c - Eigen::MatrixXcd(c.diagonal().asDiagonal())) < 1e-15);
  }
}

TEST_CASE("joint operators match basis enumeration") {
  for (auto [nh, nv] : {std::pair{1, 1}, {2, 1}, {3, 3}, {1, 4}}) {
    const SpaceSpec s = make_space(nh, nv);
    CHECK(oracle::max_abs(annihilation(s, Mode::H) - oracle::joint_mode_lowering(nh, nv, true)) == 0.0);
    CHECK(oracle::max_abs(annihilation(s, Mode::V) - oracle::joint_mode_lowering(nh, nv, false)) == 0.0);
    CHECK(oracle::max_abs(lowering(s, Dot::One) - oracle::joint_dot_lowering(nh, nv, true)) == 0.0);
    CHECK(oracle::max_abs(lowering(s, Dot::Two) - oracle::joint_dot_lowering(nh, nv, false)) == 0.0);
  }
}

TEST_CASE("vacuum is annihilated by both modes") {
  const SpaceSpec s = make_space(3, 3);
  Eigen::VectorXcd vac = Eigen::VectorXcd::Zero(s.dim());
  vac(0) = 1.0;
  CHECK((annihilation(s, Mode::H) * vac).norm() == 0.0);
  CHECK((annihilation(s, Mode::V) * vac).norm() == 0.0);
}

TEST_CASE("two-level lowering algebra") {
  const OperatorMatrix sg = two_level_lowering();
  Eigen::Matrix2cd ground = Eigen::Matrix2cd::Zero();
  ground(0, 0) = 1.0;
  CHECK(oracle::max_abs(sg * sg.adjoint() - ground) == 0.0);
  CHECK(oracle::max_abs(sg * sg) == 0.0);
  CHECK(oracle::max_abs(sg.adjoint() * sg + sg * sg.adjoint() - Eigen::Matrix2cd::Identity()) == 0.0);

  const SpaceSpec s = make_space(2, 2);
  const OperatorMatrix s1 = lowering(s, Dot::One);
  CHECK(oracle::max_abs(s1 * s1) == 0.0);
  CHECK(oracle::max_abs(s1.adjoint() * s1 + s1 * s1.adjoint() - identity(s)) == 0.0);
}

TEST_CASE("embedding") {
  const SpaceSpec s = make_space(2, 3);
  SUBCASE("identity goes to the joint identity") {
    for (Slot slot : {Slot::ModeH, Slot::ModeV, Slot::Dot1, Slot::Dot2}) {
      const OperatorMatrix id = OperatorMatrix::Identity(s.dim(slot), s.dim(slot));
      CHECK(oracle::max_abs(embed(s, id, slot) - identity(s)) == 0.0);
    }
  }
  SUBCASE("a and b commute exactly") {
    const OperatorMatrix a = annihilation(s, Mode::H), b = annihilation(s, Mode::V);
    CHECK(oracle::max_abs(a * b - b * a) == 0.0);
    CHECK(oracle::max_abs(a * b.adjoint() - b.adjoint() * a) == 0.0);
  }
  SUBCASE("trace of an embedded operator") {
    std::mt19937_64 rng(11);
    for (Slot slot : {Slot::ModeH, Slot::ModeV, Slot::Dot1, Slot::Dot2}) {
      const auto n = s.dim(slot);
      const Eigen::MatrixXcd x = oracle::random_matrix(n, rng);
      const double others = static_cast<double>(s.dim()) / static_cast<double>(n);
      CHECK(std::abs(embed(s, x, slot).trace() - x.trace() * others) < 1e-11);
    }
  }
  SUBCASE("matches an explicit Kronecker chain") {
    std::mt19937_64 rng(5);
    const Eigen::MatrixXcd x = oracle::random_matrix(4, rng);
    const Eigen::MatrixXcd expect = oracle::kron(
        oracle::kron(oracle::kron(Eigen::MatrixXcd::Identity(3, 3), x), Eigen::MatrixXcd::Identity(2, 2)),
        Eigen::MatrixXcd::Identity(2, 2));
    CHECK(oracle::max_abs(embed(s, x, Slot::ModeV) - expect) == 0.0);
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(embed(s, OperatorMatrix::Identity(3, 3), Slot::Dot1), InvalidArgument);
    CHECK_THROWS_AS(embed(s, OperatorMatrix::Identity(2, 3), Slot::Dot1), InvalidArgument);
  }
}

TEST_CASE("number operators are diagonal 0..n on their block") {
  const SpaceSpec s = make_space(3, 2);
  for (Mode m : {Mode::H, Mode::V}) {
    const OperatorMatrix a = annihilation(s, m);
    const OperatorMatrix num = a.adjoint() * a;
    CHECK(oracle::max_abs(num - Eigen::MatrixXcd(num.diagonal().asDiagonal())) == 0.0);
    for (Eigen::Index i = 0; i < s.dim(); ++i) {
      const auto j = oracle::decode(i, s.n_max_h(), s.n_max_v());
      CHECK(std::abs(num(i, i) - static_cast<double>(m == Mode::H ? j.h : j.v)) < 1e-14);
    }
  }
}

TEST_CASE("embedding preserves adjoints and separates slots") {
  std::mt19937_64 rng(2024);
  const SpaceSpec s = make_space(2, 2);
  const std::array<Slot, 4> slots{Slot::ModeH, Slot::ModeV, Slot::Dot1, Slot::Dot2};
  for (int trial = 0; trial < 20; ++trial) {
    for (std::size_t i = 0; i < slots.size(); ++i) {
      const Eigen::MatrixXcd x = oracle::random_matrix(s.dim(slots[i]), rng);
      const OperatorMatrix ex = embed(s, x, slots[i]);
      CHECK(oracle::max_abs(embed(s, x.adjoint(), slots[i]) - ex.adjoint()) == 0.0);
      for (std::size_t j = i + 1; j < slots.size(); ++j) {
        const OperatorMatrix ey = embed(s, oracle::random_matrix(s.dim(slots[j]), rng), slots[j]);
        CHECK(oracle::max_abs(ex * ey - ey * ex) < 1e-12);
      }
    }
  }
}

TEST_CASE("density matrix validation") {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXcd rho = oracle::random_density(8, rng);
  const DensityMatrix dm = DensityMatrix::from_matrix(rho);
  CHECK(dm.dim() == 8);
  CHECK(std::abs(dm.expectation(Eigen::MatrixXcd::Identity(8, 8)) - 1.0) < 1e-12);

  const Eigen::MatrixXcd x = oracle::random_matrix(8, rng);
  CHECK(std::abs(dm.expectation(x) - (rho * x).trace()) < 1e-12);

  Eigen::MatrixXcd bad = rho;
  bad(0, 1) += 1e-6;
  CHECK_THROWS_AS(DensityMatrix::from_matrix(bad), NumericalError);
  CHECK_THROWS_AS(DensityMatrix::from_matrix(2.0 * rho), NumericalError);
  Eigen::MatrixXcd neg = Eigen::MatrixXcd::Zero(2, 2);
  neg(0, 0) = 1.1;
  neg(1, 1) = -0.1;
  CHECK_THROWS_AS(DensityMatrix::from_matrix(neg), NumericalError);
  CHECK_FALSE(check_density(neg).ok());
  CHECK(check_density(rho).ok());
}

TEST_CASE("trace distance") {
  const DensityMatrix a = DensityMatrix::basis_state(4, 0);
  const DensityMatrix b = DensityMatrix::basis_state(4, 3);
  CHECK(trace_distance(a, b) == doctest::Approx(1.0));
  CHECK(trace_distance(a, a) == doctest::Approx(0.0));
  Eigen::MatrixXcd mix = 0.5 * (a.matrix() + b.matrix());
  CHECK(trace_distance(a.matrix(), mix) == doctest::Approx(0.5));
}
