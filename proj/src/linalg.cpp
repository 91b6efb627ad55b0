#include "hyrom/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "hyrom/errors.hpp"
#include "hyrom/rng.hpp"

namespace hyrom {

void require_finite(const DenseMatrix& a, std::string_view what) {
  if (!a.allFinite()) throw InvalidArgument(std::string(what) + ": matrix contains non-finite entries");
}

QrResult householder_qr(const DenseMatrix& a) {
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  if (m < n) throw InvalidArgument("householder_qr: expected rows >= cols");

  DenseMatrix work = a;
  std::vector<Vector> reflectors;
  reflectors.reserve(static_cast<std::size_t>(n));

  for (Eigen::Index j = 0; j < n; ++j) {
    Vector v = work.col(j).tail(m - j);
    const double alpha = v.norm();
    if (alpha == 0.0) {
      reflectors.emplace_back(Vector::Zero(m - j));
      continue;
    }
    const double sign = v(0) >= 0.0 ? 1.0 : -1.0;
    v(0) += sign * alpha;
    v.normalize();
    work.bottomRightCorner(m - j, n - j) -= 2.0 * v * (v.transpose() * work.bottomRightCorner(m - j, n - j));
    reflectors.push_back(std::move(v));
  }

  QrResult out;
  out.r = work.topRows(n).triangularView<Eigen::Upper>();
  out.q = DenseMatrix::Identity(m, n);
  for (Eigen::Index j = n - 1; j >= 0; --j) {
    const Vector& v = reflectors[static_cast<std::size_t>(j)];
    if (v.squaredNorm() == 0.0) continue;
    auto block = out.q.bottomRows(m - j);
    block -= 2.0 * v * (v.transpose() * block);
  }
  return out;
}

namespace {

// Completes the columns flagged in `missing` so that all columns of u are
// orthonormal; used for zero singular values whose left vectors are arbitrary.
void complete_orthonormal(DenseMatrix& u, const std::vector<bool>& missing) {
  const Eigen::Index m = u.rows();
  Eigen::Index candidate = 0;
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    if (!missing[static_cast<std::size_t>(j)]) continue;
    for (;; ++candidate) {
      if (candidate >= m) throw Error("svd: failed to complete orthonormal basis");
      Vector v = Vector::Unit(m, candidate);
      for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index i = 0; i < u.cols(); ++i) {
          if (i == j || (missing[static_cast<std::size_t>(i)] && i > j)) continue;
          v -= u.col(i).dot(v) * u.col(i);
        }
      }
      const double nv = v.norm();
      if (nv > 0.5) {
        u.col(j) = v / nv;
        ++candidate;
        break;
      }
    }
  }
}

// One-sided Jacobi on a square (or tall) matrix w; returns right rotations in v.
void hestenes_jacobi(DenseMatrix& w, DenseMatrix& v) {
  const Eigen::Index n = w.cols();
  v = DenseMatrix::Identity(n, n);
  constexpr double tol = 1e-15;
  for (int sweep = 0; sweep < 80; ++sweep) {
    bool rotated = false;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double alpha = w.col(p).squaredNorm();
        const double beta = w.col(q).squaredNorm();
        const double gamma = w.col(p).dot(w.col(q));
        if (alpha == 0.0 || beta == 0.0) continue;
        if (std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
          const double wp = w(i, p);
          const double wq = w(i, q);
          w(i, p) = c * wp - s * wq;
          w(i, q) = s * wp + c * wq;
        }
        for (Eigen::Index i = 0; i < n; ++i) {
          const double vp = v(i, p);
          const double vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
    if (!rotated) return;
  }
}

SvdResult svd_tall(const DenseMatrix& a) {
  const Eigen::Index n = a.cols();
  QrResult qr = householder_qr(a);
  DenseMatrix w = qr.r;
  DenseMatrix v;
  hestenes_jacobi(w, v);

  Vector sigma(n);
  for (Eigen::Index j = 0; j < n; ++j) sigma(j) = w.col(j).norm();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) { return sigma(x) > sigma(y); });

  SvdResult out;
  out.singular_values.resize(n);
  DenseMatrix ur(n, n);
  DenseMatrix vs(n, n);
  const double smax = n > 0 ? sigma(order[0]) : 0.0;
  std::vector<bool> missing(static_cast<std::size_t>(n), false);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index src = order[static_cast<std::size_t>(j)];
    const double s = sigma(src);
    vs.col(j) = v.col(src);
    if (s <= 1e-300 || s <= smax * 1e-15 * static_cast<double>(n)) {
      out.singular_values(j) = s <= smax * 1e-15 * static_cast<double>(n) ? 0.0 : s;
      ur.col(j).setZero();
      missing[static_cast<std::size_t>(j)] = true;
    } else {
      out.singular_values(j) = s;
      ur.col(j) = w.col(src) / s;
    }
  }
  if (std::any_of(missing.begin(), missing.end(), [](bool b) { return b; })) complete_orthonormal(ur, missing);
  out.left_vectors = qr.q * ur;
  out.right_vectors_t = vs.transpose();
  return out;
}

}  // namespace

SvdResult svd(const DenseMatrix& a) {
  if (a.rows() < 1 || a.cols() < 1) throw InvalidArgument("svd: empty matrix");
  require_finite(a, "svd");
  if (a.rows() >= a.cols()) return svd_tall(a);
  SvdResult t = svd_tall(a.transpose());
  SvdResult out;
  out.left_vectors = t.right_vectors_t.transpose();
  out.singular_values = std::move(t.singular_values);
  out.right_vectors_t = t.left_vectors.transpose();
  return out;
}

SvdResult randomized_svd(const DenseMatrix& a, int k, std::uint64_t seed, RandomizedSvdOptions opts) {
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  if (k < 1 || k > std::min(m, n)) {
    throw InvalidArgument("randomized_svd: target rank " + std::to_string(k) + " outside [1, " +
                          std::to_string(std::min(m, n)) + "]");
  }
  require_finite(a, "randomized_svd");
  const Eigen::Index width = std::min<Eigen::Index>(k + std::max(0, opts.oversampling), std::min(m, n));

  CounterRng rng(seed);
  DenseMatrix theta(n, width);
  for (Eigen::Index j = 0; j < width; ++j)
    for (Eigen::Index i = 0; i < n; ++i) theta(i, j) = rng.normal();

  DenseMatrix q = householder_qr(a * theta).q;
  for (int it = 0; it < opts.power_iterations; ++it) {
    DenseMatrix z = householder_qr(a.transpose() * q).q;
    q = householder_qr(a * z).q;
  }

  const DenseMatrix b = q.transpose() * a;
  SvdResult small = svd(b);
  SvdResult out;
  out.left_vectors = (q * small.left_vectors).leftCols(k);
  out.singular_values = small.singular_values.head(k);
  out.right_vectors_t = small.right_vectors_t.topRows(k);
  return out;
}

LuFactor::LuFactor(const DenseMatrix& a) : lu_(a), perm_(a.rows()) {
  if (a.rows() != a.cols()) throw InvalidArgument("lu: matrix must be square");
  require_finite(a, "lu");
  const Eigen::Index n = a.rows();
  norm1_ = n == 0 ? 0.0 : a.cwiseAbs().colwise().sum().maxCoeff();
  const double normi = n == 0 ? 0.0 : a.cwiseAbs().rowwise().sum().maxCoeff();
  const double threshold = 1e-14 * std::max(norm1_, normi);
  for (Eigen::Index i = 0; i < n; ++i) perm_(i) = static_cast<int>(i);

  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index piv = k;
    lu_.col(k).tail(n - k).cwiseAbs().maxCoeff(&piv);
    piv += k;
    const double pv = std::abs(lu_(piv, k));
    if (pv <= threshold || pv == 0.0) {
      throw SingularMatrix("lu: pivot " + std::to_string(pv) + " below threshold at column " + std::to_string(k));
    }
    if (piv != k) {
      lu_.row(k).swap(lu_.row(piv));
      std::swap(perm_(k), perm_(piv));
    }
    const double inv = 1.0 / lu_(k, k);
    lu_.col(k).tail(n - k - 1) *= inv;
    lu_.bottomRightCorner(n - k - 1, n - k - 1).noalias() -=
        lu_.col(k).tail(n - k - 1) * lu_.row(k).tail(n - k - 1);
  }
}

Vector LuFactor::solve(const Vector& b) const {
  const Eigen::Index n = lu_.rows();
  if (b.size() != n) throw InvalidArgument("lu_solve: rhs length mismatch");
  Vector x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = b(perm_(i));
  lu_.triangularView<Eigen::UnitLower>().solveInPlace(x);
  lu_.triangularView<Eigen::Upper>().solveInPlace(x);
  return x;
}

DenseMatrix LuFactor::solve(const DenseMatrix& b) const {
  DenseMatrix x(b.rows(), b.cols());
  for (Eigen::Index j = 0; j < b.cols(); ++j) x.col(j) = solve(Vector(b.col(j)));
  return x;
}

double LuFactor::condition_estimate() const {
  const Eigen::Index n = lu_.rows();
  const DenseMatrix inv = solve(DenseMatrix(DenseMatrix::Identity(n, n)));
  return norm1_ * inv.cwiseAbs().colwise().sum().maxCoeff();
}

Vector lu_solve(const DenseMatrix& a, const Vector& b) {
  if (b.size() != a.rows()) throw InvalidArgument("lu_solve: rhs length mismatch");
  return LuFactor(a).solve(b);
}

double orthonormality_error(const DenseMatrix& q) {
  if (q.cols() == 0) return 0.0;
  return (q.transpose() * q - DenseMatrix::Identity(q.cols(), q.cols())).cwiseAbs().maxCoeff();
}

}  // namespace hyrom
