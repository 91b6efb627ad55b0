#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string_view>

namespace hyrom {

// Column-major dense storage throughout; appending a snapshot is a
// contiguous write.
using DenseMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct SvdResult {
  DenseMatrix left_vectors;     // m x r
  Vector singular_values;       // r, non-increasing
  DenseMatrix right_vectors_t;  // r x n
};

struct QrResult {
  DenseMatrix q;  // m x n, orthonormal columns (thin)
  DenseMatrix r;  // n x n, upper triangular
};

/// Throws InvalidArgument naming `what` if any entry is NaN/Inf.
void require_finite(const DenseMatrix& a, std::string_view what);

/// Householder QR of a tall (or square) matrix, thin factors.
QrResult householder_qr(const DenseMatrix& a);

/// Deterministic economy SVD. Tall inputs are first reduced by QR and the
/// triangular factor is diagonalized by one-sided (Hestenes) Jacobi
/// rotations; wide inputs are handled through the transpose.
SvdResult svd(const DenseMatrix& a);

struct RandomizedSvdOptions {
  int oversampling = 0;
  int power_iterations = 0;
};

/// Two-stage randomized SVD: Gaussian sketch, orthonormal range by QR,
/// deterministic SVD of the k x n projection. Deterministic for a fixed seed.
SvdResult randomized_svd(const DenseMatrix& a, int k, std::uint64_t seed, RandomizedSvdOptions opts = {});

/// LU factorization with partial pivoting, reusable for several right-hand sides.
class LuFactor {
 public:
  explicit LuFactor(const DenseMatrix& a);

  Vector solve(const Vector& b) const;
  DenseMatrix solve(const DenseMatrix& b) const;

  /// Crude reciprocal-free estimate: ||A||_1 * ||A^{-1}||_1 via explicit inverse columns.
  double condition_estimate() const;
  Eigen::Index size() const { return lu_.rows(); }

 private:
  DenseMatrix lu_;
  Eigen::VectorXi perm_;
  double norm1_ = 0.0;
};

Vector lu_solve(const DenseMatrix& a, const Vector& b);

/// max |Q^T Q - I|
double orthonormality_error(const DenseMatrix& q);

}  // namespace hyrom
