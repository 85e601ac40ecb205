#include "cavqed/hilbert.hpp"

#include <cmath>
#include <string>

#include "cavqed/error.hpp"

namespace cavqed {

SpaceSpec::SpaceSpec(int n_max_h, int n_max_v) : n_max_h_(n_max_h), n_max_v_(n_max_v) {
  if (n_max_h < 1 || n_max_v < 1) {
    throw InvalidArgument("Fock cutoffs must be >= 1 (got " + std::to_string(n_max_h) + ", " +
                          std::to_string(n_max_v) + ")");
  }
}

SpaceSpec make_space(int n_max_h, int n_max_v) { return SpaceSpec(n_max_h, n_max_v); }

OperatorMatrix fock_annihilation(int n_max) {
  if (n_max < 1) throw InvalidArgument("Fock cutoff must be >= 1");
  OperatorMatrix a = OperatorMatrix::Zero(n_max + 1, n_max + 1);
  for (int n = 1; n <= n_max; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

OperatorMatrix two_level_lowering() {
  OperatorMatrix s = OperatorMatrix::Zero(2, 2);
  s(0, 1) = 1.0;  // |g><e|
  return s;
}

OperatorMatrix kron_embed(std::span<const Eigen::Index> dims, const OperatorMatrix& op,
                          std::size_t slot) {
  if (slot >= dims.size()) throw InvalidArgument("subsystem slot out of range");
  const Eigen::Index m = dims[slot];
  if (op.rows() != m || op.cols() != m) {
    throw InvalidArgument("operator is " + std::to_string(op.rows()) + "x" +
                          std::to_string(op.cols()) + " but slot " + std::to_string(slot) +
                          " has dimension " + std::to_string(m));
  }
  Eigen::Index left = 1, right = 1;
  for (std::size_t k = 0; k < slot; ++k) left *= dims[k];
  for (std::size_t k = slot + 1; k < dims.size(); ++k) right *= dims[k];

  const Eigen::Index d = left * m * right;
  OperatorMatrix out = OperatorMatrix::Zero(d, d);
  for (Eigen::Index l = 0; l < left; ++l) {
    for (Eigen::Index a = 0; a < m; ++a) {
      for (Eigen::Index b = 0; b < m; ++b) {
        const cplx v = op(a, b);
        if (v == cplx{}) continue;
        const Eigen::Index row0 = (l * m + a) * right;
        const Eigen::Index col0 = (l * m + b) * right;
        for (Eigen::Index r = 0; r < right; ++r) out(row0 + r, col0 + r) = v;
      }
    }
  }
  return out;
}

OperatorMatrix embed(const SpaceSpec& space, const OperatorMatrix& op, Slot slot) {
  const auto dims = space.dims();
  return kron_embed(dims, op, static_cast<std::size_t>(slot));
}

OperatorMatrix annihilation(const SpaceSpec& space, Mode mode) {
  return embed(space, fock_annihilation(space.n_max(mode)), slot_of(mode));
}

OperatorMatrix lowering(const SpaceSpec& space, Dot dot) {
  return embed(space, two_level_lowering(), slot_of(dot));
}

OperatorMatrix identity(const SpaceSpec& space) {
  return OperatorMatrix::Identity(space.dim(), space.dim());
}

DensityCheck check_density(const Eigen::MatrixXcd& rho) {
  DensityCheck c;
  if (rho.rows() != rho.cols() || rho.rows() == 0) {
    c.hermiticity_error = c.trace_error = INFINITY;
    c.min_eigenvalue = -INFINITY;
    return c;
  }
  c.hermiticity_error = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  c.trace_error = std::abs(rho.trace() - 1.0);
  const Eigen::MatrixXcd herm = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm, Eigen::EigenvaluesOnly);
  c.min_eigenvalue = es.eigenvalues().minCoeff();
  return c;
}

DensityMatrix DensityMatrix::from_matrix(Eigen::MatrixXcd rho) {
  const DensityCheck c = check_density(rho);
  if (!c.ok()) {
    throw NumericalError("not a density matrix: hermiticity error " +
                         std::to_string(c.hermiticity_error) + ", trace error " +
                         std::to_string(c.trace_error) + ", min eigenvalue " +
                         std::to_string(c.min_eigenvalue));
  }
  return DensityMatrix(std::move(rho));
}

DensityMatrix DensityMatrix::basis_state(Eigen::Index dim, Eigen::Index index) {
  if (index < 0 || index >= dim) throw InvalidArgument("basis index out of range");
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(dim, dim);
  rho(index, index) = 1.0;
  return DensityMatrix(std::move(rho));
}

cplx DensityMatrix::expectation(const OperatorMatrix& op) const {
  if (op.rows() != dim() || op.cols() != dim()) {
    throw InvalidArgument("operator dimension does not match the state");
  }
  // Tr[rho X] = sum_ij rho_ij X_ji
  return (rho_.transpose().cwiseProduct(op)).sum();
}

double trace_distance(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InvalidArgument("trace distance between matrices of different size");
  }
  const Eigen::MatrixXcd diff = a - b;
  const Eigen::MatrixXcd herm = 0.5 * (diff + diff.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

}  // namespace cavqed
