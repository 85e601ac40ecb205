#pragma once

// Truncated joint Hilbert space of two cavity modes (H, V) and two
// two-level emitters. Subsystem order is fixed as [mode H, mode V, dot 1,
// dot 2]; the first slot is the most significant Kronecker factor.
//
// Two-level basis convention: index 0 = ground |g>, index 1 = excited |e>.

#include <array>
#include <complex>
#include <cstddef>
#include <span>

#include <Eigen/Dense>

namespace cavqed {

using cplx = std::complex<double>;
using OperatorMatrix = Eigen::MatrixXcd;

enum class Mode { H, V };
enum class Dot { One, Two };
enum class Slot : std::size_t { ModeH = 0, ModeV = 1, Dot1 = 2, Dot2 = 3 };

class SpaceSpec {
 public:
  SpaceSpec(int n_max_h, int n_max_v);

  int n_max_h() const noexcept { return n_max_h_; }
  int n_max_v() const noexcept { return n_max_v_; }
  int n_max(Mode m) const noexcept { return m == Mode::H ? n_max_h_ : n_max_v_; }

  std::array<Eigen::Index, 4> dims() const noexcept {
    return {n_max_h_ + 1, n_max_v_ + 1, 2, 2};
  }
  Eigen::Index dim(Slot s) const noexcept { return dims()[static_cast<std::size_t>(s)]; }
  Eigen::Index dim() const noexcept { return (n_max_h_ + 1) * (n_max_v_ + 1) * 4; }

  bool operator==(const SpaceSpec&) const = default;

 private:
  int n_max_h_;
  int n_max_v_;
};

// Throws InvalidArgument for cutoffs < 1.
SpaceSpec make_space(int n_max_h, int n_max_v);

// Single-subsystem building blocks.
OperatorMatrix fock_annihilation(int n_max);
OperatorMatrix two_level_lowering();

// Kronecker embedding of `op` into slot `slot` of a product space with the
// given subsystem dimensions; identities everywhere else.
OperatorMatrix kron_embed(std::span<const Eigen::Index> dims, const OperatorMatrix& op,
                          std::size_t slot);

OperatorMatrix embed(const SpaceSpec& space, const OperatorMatrix& op, Slot slot);
OperatorMatrix annihilation(const SpaceSpec& space, Mode mode);
OperatorMatrix lowering(const SpaceSpec& space, Dot dot);
OperatorMatrix identity(const SpaceSpec& space);

inline Slot slot_of(Mode m) { return m == Mode::H ? Slot::ModeH : Slot::ModeV; }
inline Slot slot_of(Dot d) { return d == Dot::One ? Slot::Dot1 : Slot::Dot2; }

struct DensityCheck {
  double hermiticity_error = 0.0;  // max |rho - rho^dagger|
  double trace_error = 0.0;        // |Tr rho - 1|
  double min_eigenvalue = 0.0;

  bool ok() const noexcept {
    return hermiticity_error <= 1e-10 && trace_error <= 1e-9 && min_eigenvalue >= -1e-9;
  }
};

DensityCheck check_density(const Eigen::MatrixXcd& rho);

// Hermitian, unit-trace, positive semidefinite state (tolerances in
// DensityCheck::ok). Construction validates; the value is immutable.
class DensityMatrix {
 public:
  // Throws NumericalError when the invariants do not hold.
  static DensityMatrix from_matrix(Eigen::MatrixXcd rho);
  // Projector onto basis state `index`.
  static DensityMatrix basis_state(Eigen::Index dim, Eigen::Index index);

  const Eigen::MatrixXcd& matrix() const noexcept { return rho_; }
  Eigen::Index dim() const noexcept { return rho_.rows(); }

  // Tr[rho X]
  cplx expectation(const OperatorMatrix& op) const;

 private:
  explicit DensityMatrix(Eigen::MatrixXcd rho) : rho_(std::move(rho)) {}
  Eigen::MatrixXcd rho_;
};

// (1/2) sum |eig(a - b)|
double trace_distance(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);
inline double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  return trace_distance(a.matrix(), b.matrix());
}

}  // namespace cavqed
