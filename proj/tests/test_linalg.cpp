#include <limits>

#include "doctest.h"
#include "hyrom/errors.hpp"
#include "hyrom/linalg.hpp"
#include "support.hpp"

using namespace hyrom;
using hyrom::testing::random_matrix;
using hyrom::testing::random_vector;

namespace {

DenseMatrix reconstruct(const SvdResult& s) {
  return s.left_vectors * s.singular_values.asDiagonal() * s.right_vectors_t;
}

void check_factors(const SvdResult& s) {
  CHECK(orthonormality_error(s.left_vectors) < 1e-10);
  CHECK(orthonormality_error(s.right_vectors_t.transpose()) < 1e-10);
  for (Eigen::Index i = 1; i < s.singular_values.size(); ++i)
    CHECK(s.singular_values[i] <= s.singular_values[i - 1]);
  CHECK(s.singular_values.minCoeff() >= 0.0);
}

}  // namespace

TEST_SUITE("tensor-linalg") {

TEST_CASE("svd of the identity") {
  const SvdResult s = svd(DenseMatrix::Identity(3, 3));
  for (int i = 0; i < 3; ++i) CHECK(s.singular_values[i] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("svd of a scaled rank-one matrix") {
  CounterRng rng(7);
  Vector u = random_vector(3, rng).normalized();
  Vector v = random_vector(3, rng).normalized();
  const SvdResult s = svd(5.0 * u * v.transpose());
  CHECK(std::abs(s.singular_values[0] - 5.0) < 1e-12);
  CHECK(std::abs(s.singular_values[1]) < 1e-12);
  CHECK(std::abs(s.singular_values[2]) < 1e-12);
}

TEST_CASE("svd reconstructs tall and wide matrices") {
  CounterRng rng(11);
  for (auto [m, n] : {std::pair{10, 6}, std::pair{6, 10}, std::pair{1, 5}, std::pair{7, 1}}) {
    const DenseMatrix a = random_matrix(m, n, rng);
    const SvdResult s = svd(a);
    CHECK((a - reconstruct(s)).norm() / a.norm() < 1e-12);
    check_factors(s);
  }
}

TEST_CASE("svd rejects non-finite input") {
  DenseMatrix a = DenseMatrix::Ones(3, 2);
  a(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(svd(a), InvalidArgument);
}

TEST_CASE("truncation error equals the singular value tail") {
  CounterRng rng(23);
  for (int trial = 0; trial < 5; ++trial) {
    const DenseMatrix a = random_matrix(12, 8, rng);
    const SvdResult s = svd(a);
    for (Eigen::Index N = 0; N <= 8; ++N) {
      const DenseMatrix U = s.left_vectors.leftCols(N);
      const double lhs = (a - U * (U.transpose() * a)).squaredNorm();
      const double rhs = s.singular_values.tail(8 - N).squaredNorm();
      CHECK(std::abs(lhs - rhs) <= 1e-8 * std::max(rhs, 1e-300) + 1e-12 * a.squaredNorm());
    }
  }
}

TEST_CASE("householder qr") {
  CounterRng rng(3);
  const DenseMatrix a = random_matrix(9, 4, rng);
  const QrResult qr = householder_qr(a);
  CHECK(orthonormality_error(qr.q) < 1e-12);
  CHECK((qr.q * qr.r - a).norm() < 1e-12 * a.norm());
  for (int j = 0; j < 4; ++j)
    for (int i = j + 1; i < 4; ++i) CHECK(qr.r(i, j) == 0.0);
  CHECK_THROWS_AS(householder_qr(random_matrix(3, 4, rng)), InvalidArgument);
}

TEST_CASE("randomized svd recovers an exact low-rank spectrum") {
  CounterRng rng(5);
  const DenseMatrix a = random_matrix(8, 3, rng) * random_matrix(3, 5, rng);
  const SvdResult det = svd(a);
  const SvdResult rnd = randomized_svd(a, 3, 42);
  for (int i = 0; i < 3; ++i)
    CHECK(std::abs(rnd.singular_values[i] - det.singular_values[i]) < 1e-9 * det.singular_values[i]);
  CHECK((a - reconstruct(rnd)).norm() < 1e-10 * a.norm());
}

TEST_CASE("randomized svd of the identity") {
  const SvdResult s = randomized_svd(DenseMatrix::Identity(4, 4), 4, 1);
  for (int i = 0; i < 4; ++i) CHECK(std::abs(s.singular_values[i] - 1.0) < 1e-12);
}

TEST_CASE("randomized svd is deterministic for a fixed seed") {
  CounterRng rng(9);
  const DenseMatrix a = random_matrix(20, 12, rng);
  const SvdResult s1 = randomized_svd(a, 5, 77);
  const SvdResult s2 = randomized_svd(a, 5, 77);
  CHECK(s1.singular_values == s2.singular_values);
  CHECK(s1.left_vectors == s2.left_vectors);
  CHECK(s1.right_vectors_t == s2.right_vectors_t);
}

TEST_CASE("randomized svd rank bounds") {
  const DenseMatrix a = DenseMatrix::Ones(4, 3);
  CHECK_THROWS_AS(randomized_svd(a, 0, 1), InvalidArgument);
  CHECK_THROWS_AS(randomized_svd(a, 4, 1), InvalidArgument);
}

TEST_CASE("randomized svd with oversampling and power iterations") {
  CounterRng rng(31);
  const DenseMatrix a = random_matrix(30, 4, rng) * random_matrix(4, 20, rng);
  const SvdResult det = svd(a);
  const SvdResult rnd = randomized_svd(a, 4, 3, {5, 2});
  CHECK(rnd.singular_values.size() == 4);
  for (int i = 0; i < 4; ++i)
    CHECK(std::abs(rnd.singular_values[i] - det.singular_values[i]) < 1e-9 * det.singular_values[0]);
}

TEST_CASE("lu solve examples") {
  Vector x = lu_solve(DenseMatrix::Identity(2, 2), Vector{{3.0, -1.0}});
  CHECK(x[0] == 3.0);
  CHECK(x[1] == -1.0);
  DenseMatrix d{{2.0, 0.0}, {0.0, 4.0}};
  x = lu_solve(d, Vector{{2.0, 8.0}});
  CHECK(x[0] == doctest::Approx(1.0));
  CHECK(x[1] == doctest::Approx(2.0));
}

TEST_CASE("lu recovers a planted solution") {
  CounterRng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const DenseMatrix a = random_matrix(8, 8, rng) + 8.0 * DenseMatrix::Identity(8, 8);
    const Vector xs = random_vector(8, rng);
    const Vector x = lu_solve(a, a * xs);
    CHECK((x - xs).norm() < 1e-10 * xs.norm());
    CHECK((a * x - a * xs).norm() <= 1e-10 * (a.norm() * x.norm() + (a * xs).norm()));
  }
}

TEST_CASE("lu needs pivoting") {
  DenseMatrix a{{0.0, 1.0}, {1.0, 0.0}};
  const Vector x = lu_solve(a, Vector{{2.0, 5.0}});
  CHECK(x[0] == 5.0);
  CHECK(x[1] == 2.0);
}

TEST_CASE("lu errors") {
  DenseMatrix s{{1.0, 2.0}, {2.0, 4.0}};
  CHECK_THROWS_AS(lu_solve(s, Vector{{1.0, 1.0}}), SingularMatrix);
  CHECK_THROWS_AS(LuFactor(DenseMatrix::Ones(2, 3)), InvalidArgument);
  CHECK_THROWS_AS(lu_solve(DenseMatrix::Identity(2, 2), Vector::Ones(3)), InvalidArgument);
}

TEST_CASE("lu condition estimate") {
  DenseMatrix d{{1.0, 0.0}, {0.0, 100.0}};
  CHECK(LuFactor(d).condition_estimate() == doctest::Approx(100.0));
  CHECK(LuFactor(DenseMatrix::Identity(5, 5)).condition_estimate() == doctest::Approx(1.0));
}

TEST_CASE("counter rng streams") {
  CounterRng a(1), b(1), c(2);
  CHECK(a.next_u64() == b.next_u64());
  CHECK(a.next_u64() != c.next_u64());
  CounterRng u(4);
  double mean = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double x = u.uniform();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    mean += x;
  }
  CHECK(std::abs(mean / 20000 - 0.5) < 0.01);
}

}  // TEST_SUITE
