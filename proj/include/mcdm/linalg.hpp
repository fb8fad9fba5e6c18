#ifndef MCDM_LINALG_HPP
#define MCDM_LINALG_HPP

// Dense kernels used by the bilinear update: symmetric inverse square root,
// a sign-normalized SVD, and truncation to the leading S factors.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "mcdm/errors.hpp"

namespace mcdm::linalg {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Eigenvalues at or below this fraction of the largest are treated as zero.
inline constexpr double kRankTolerance = 1e-10;
// Allowed asymmetry, relative to the largest absolute entry.
inline constexpr double kSymmetryTolerance = 1e-8;

template <typename Scalar>
struct SvdFactors {
  Matrix<Scalar> left;
  Vector<Scalar> singular_values;
  Matrix<Scalar> right;

  Eigen::Index size() const { return singular_values.size(); }
};

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.derived().array().isFinite().all();
}

template <typename Derived>
void require_symmetric(const Eigen::MatrixBase<Derived>& m) {
  using std::abs;
  if (m.rows() != m.cols()) {
    throw NotSymmetric("matrix is not square (" + std::to_string(m.rows()) + "x" +
                       std::to_string(m.cols()) + ")");
  }
  const auto scale = m.cwiseAbs().maxCoeff();
  const auto asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTolerance * scale) {
    throw NotSymmetric("matrix asymmetry " + std::to_string(static_cast<double>(asym)) +
                       " exceeds tolerance");
  }
}

/// Returns R = M^(-1/2), the symmetric matrix with R * M * R = I.
/// Throws NotSymmetric or NotPositiveDefinite.
template <typename Derived>
Matrix<typename Derived::Scalar> sym_inv_sqrt(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  require_symmetric(m);
  const Matrix<Scalar> sym = (m + m.transpose()) / Scalar(2);
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(sym);
  if (eig.info() != Eigen::Success) {
    throw ConvergenceFailure("symmetric eigendecomposition failed");
  }
  const Vector<Scalar>& values = eig.eigenvalues();
  const Scalar largest = values.maxCoeff();
  const Scalar smallest = values.minCoeff();
  if (!(largest > Scalar(0)) || smallest <= Scalar(kRankTolerance) * largest) {
    throw NotPositiveDefinite("smallest eigenvalue " +
                              std::to_string(static_cast<double>(smallest)) +
                              " is not above the rank tolerance");
  }
  const Vector<Scalar> inv_root = values.array().rsqrt().matrix();
  return eig.eigenvectors() * inv_root.asDiagonal() * eig.eigenvectors().transpose();
}

/// Thin SVD A = left * diag(sv) * right'. Singular values descend; each left
/// vector has its largest-magnitude entry positive (the paired right vector
/// flips with it).
template <typename Derived>
SvdFactors<typename Derived::Scalar> svd(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  if (!all_finite(a)) throw ConvergenceFailure("svd input has non-finite entries");
  Eigen::JacobiSVD<Matrix<Scalar>> dec(
      a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (dec.info() != Eigen::Success) throw ConvergenceFailure("JacobiSVD did not converge");

  SvdFactors<Scalar> out{dec.matrixU(), dec.singularValues(), dec.matrixV()};
  if (!all_finite(out.left) || !all_finite(out.right) || !all_finite(out.singular_values)) {
    throw ConvergenceFailure("svd produced non-finite factors");
  }
  for (Eigen::Index s = 0; s < out.left.cols(); ++s) {
    Eigen::Index at = 0;
    out.left.col(s).cwiseAbs().maxCoeff(&at);
    if (out.left(at, s) < Scalar(0)) {
      out.left.col(s) *= Scalar(-1);
      out.right.col(s) *= Scalar(-1);
    }
  }
  return out;
}

/// Keeps the `rank` leading factors. Ties keep the earlier column.
template <typename Scalar>
SvdFactors<Scalar> truncate(const SvdFactors<Scalar>& f, Eigen::Index rank) {
  if (rank < 1 || rank > f.size()) {
    throw RankOutOfRange("cannot truncate " + std::to_string(f.size()) +
                         " singular values to rank " + std::to_string(rank));
  }
  return {f.left.leftCols(rank), f.singular_values.head(rank), f.right.leftCols(rank)};
}

// Symmetric square root, used to map between metric-weighted and plain bases.
template <typename Derived>
Matrix<typename Derived::Scalar> sym_sqrt(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  require_symmetric(m);
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig((m + m.transpose()) / Scalar(2));
  const Vector<Scalar> root = eig.eigenvalues().cwiseMax(Scalar(0)).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace mcdm::linalg

#endif  // MCDM_LINALG_HPP
