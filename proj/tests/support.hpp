#pragma once

#include <cmath>
#include <functional>

#include <Eigen/QR>

#include "hyrom/fom.hpp"
#include "hyrom/linalg.hpp"
#include "hyrom/rng.hpp"

namespace hyrom::testing {

inline DenseMatrix random_matrix(Eigen::Index rows, Eigen::Index cols, CounterRng& rng) {
  DenseMatrix a(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) a(i, j) = rng.normal();
  return a;
}

inline Vector random_vector(Eigen::Index n, CounterRng& rng) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

inline DenseMatrix random_orthonormal(Eigen::Index rows, Eigen::Index cols, CounterRng& rng) {
  Eigen::HouseholderQR<DenseMatrix> qr(random_matrix(rows, cols, rng));
  return qr.householderQ() * DenseMatrix::Identity(rows, cols);
}

inline double rel_diff(const DenseMatrix& a, const DenseMatrix& b) {
  const double s = std::max(a.norm(), b.norm());
  return s == 0.0 ? 0.0 : (a - b).norm() / s;
}

inline Mat3d random_F(CounterRng& rng, double spread) {
  Mat3d F{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) F[i][j] = (i == j ? 1.0 : 0.0) + spread * rng.uniform(-1.0, 1.0);
  return F;
}

/// Random F with det F scaled into [jlo, jhi].
inline Mat3d random_F_in_range(CounterRng& rng, double jlo, double jhi) {
  for (;;) {
    Mat3d F = random_F(rng, 0.15);
    const double J = det3(F);
    if (!(J > 0.0)) continue;
    const double target = rng.uniform(jlo, jhi);
    const double s = std::cbrt(target / J);
    for (auto& row : F)
      for (auto& v : row) v *= s;
    return F;
  }
}

/// Random state with entries of size `scale`, Dirichlet dofs zero.
inline Vector random_state(const Assembler& a, CounterRng& rng, double scale) {
  Vector u(a.dofs());
  for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = scale * rng.uniform(-1.0, 1.0);
  for (auto d : a.dirichlet_dofs()) u[d] = 0.0;
  return u;
}

inline StepContext beam_context(double pressure, double rho0 = 1e3, double dt = 5e-3) {
  StepContext ctx;
  ctx.material = NeoHookeanParams{1e4, 5e4};
  ctx.pressure = pressure;
  ctx.rho0 = rho0;
  ctx.dt = dt;
  return ctx;
}

inline ProblemSetup beam_setup(double G, double K, double p, LoadKind kind = LoadKind::Linear) {
  ProblemSetup s;
  s.material = NeoHookeanParams{G, K};
  s.load = {kind, p};
  return s;
}

}  // namespace hyrom::testing
