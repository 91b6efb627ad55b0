#pragma once

#include <array>
#include <cmath>
#include <variant>

#include "hyrom/dual.hpp"

namespace hyrom {

template <class T>
using Mat3 = std::array<std::array<T, 3>, 3>;
using Mat3d = Mat3<double>;

template <class T>
Mat3<T> identity3() {
  Mat3<T> m{};
  for (int i = 0; i < 3; ++i) m[i][i] = T(1.0);
  return m;
}

template <class T>
T det3(const Mat3<T>& a) {
  return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
         a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
}

/// Cofactor matrix, cof(F) = det(F) F^{-T}.
template <class T>
Mat3<T> cofactor3(const Mat3<T>& a) {
  Mat3<T> c{};
  c[0][0] = a[1][1] * a[2][2] - a[1][2] * a[2][1];
  c[0][1] = a[1][2] * a[2][0] - a[1][0] * a[2][2];
  c[0][2] = a[1][0] * a[2][1] - a[1][1] * a[2][0];
  c[1][0] = a[0][2] * a[2][1] - a[0][1] * a[2][2];
  c[1][1] = a[0][0] * a[2][2] - a[0][2] * a[2][0];
  c[1][2] = a[0][1] * a[2][0] - a[0][0] * a[2][1];
  c[2][0] = a[0][1] * a[1][2] - a[0][2] * a[1][1];
  c[2][1] = a[0][2] * a[1][0] - a[0][0] * a[1][2];
  c[2][2] = a[0][0] * a[1][1] - a[0][1] * a[1][0];
  return c;
}

template <class T>
Mat3<T> transpose3(const Mat3<T>& a) {
  Mat3<T> t{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) t[i][j] = a[j][i];
  return t;
}

template <class T>
Mat3<T> matmul3(const Mat3<T>& a, const Mat3<T>& b) {
  Mat3<T> c{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      T s(0.0);
      for (int k = 0; k < 3; ++k) s += a[i][k] * b[k][j];
      c[i][j] = s;
    }
  return c;
}

struct DeformationState {
  Mat3d F;
  double J;
  Mat3d C;
  Mat3d E;
};

/// F = I + grad_u. Throws InvertedElement when det F <= 0.
DeformationState deformation_gradient(const Mat3d& grad_u);
/// Same, from F directly.
DeformationState deformation_state(const Mat3d& F);

struct NeoHookeanParams {
  double G = 1e4;
  double K = 5e4;
};

struct FiberFrame {
  std::array<double, 3> f{1.0, 0.0, 0.0};
  std::array<double, 3> s{0.0, 1.0, 0.0};
  std::array<double, 3> n{0.0, 0.0, 1.0};
};

/// Orthonormal frame from a fiber direction and an approximate sheet direction (Gram-Schmidt, n = f x s).
FiberFrame make_fiber_frame(const std::array<double, 3>& fiber, const std::array<double, 3>& sheet);

struct GuccioneParams {
  double C_scale = 2e3;
  double b_f = 8.0, b_s = 2.0, b_n = 2.0;
  double b_fs = 4.0, b_fn = 4.0, b_sn = 2.0;
  double K = 5e4;
  FiberFrame fiber_frame{};
  double Ta = 0.0;  // active tension for the current evaluation
};

using MaterialModel = std::variant<NeoHookeanParams, GuccioneParams>;

/// Throws InvalidArgument on non-positive moduli, negative exponents or a non-orthonormal frame.
void validate(const MaterialModel& m);

// ---- generic (scalar-templated) constitutive kernels -----------------------

/// Volumetric penalty (K/4)((J-1)^2 + ln^2 J) shared by both laws.
template <class T>
T volumetric_energy(const T& J, double K) {
  using std::log;
  const T lnj = log(J);
  return 0.25 * K * ((J - 1.0) * (J - 1.0) + lnj * lnj);
}

template <class T>
T neo_hookean_energy(const Mat3<T>& F, const NeoHookeanParams& p) {
  using std::pow;
  const T J = det3(F);
  T trc(0.0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) trc += F[i][j] * F[i][j];
  const T i1 = pow(J, -2.0 / 3.0) * trc;
  return 0.5 * p.G * (i1 - 3.0) + volumetric_energy(J, p.K);
}

/// dW/dF of the nearly-incompressible neo-Hookean energy:
/// P = G J^{-2/3} (F - tr(C)/3 F^{-T}) + (K/2)(J(J-1) + ln J) F^{-T}.
template <class T>
Mat3<T> neo_hookean_pk1(const Mat3<T>& F, const NeoHookeanParams& p) {
  using std::log;
  using std::pow;
  const T J = det3(F);
  const Mat3<T> cof = cofactor3(F);
  T trc(0.0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) trc += F[i][j] * F[i][j];
  const T jm23 = pow(J, -2.0 / 3.0);
  const T invJ = 1.0 / J;
  const T vol = 0.5 * p.K * (J * (J - 1.0) + log(J));
  Mat3<T> P{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const T finvT = cof[i][j] * invJ;
      P[i][j] = p.G * jm23 * (F[i][j] - trc * finvT / 3.0) + vol * finvT;
    }
  return P;
}

namespace detail {
template <class T>
Mat3<T> green_lagrange(const Mat3<T>& F) {
  Mat3<T> E{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      T c(0.0);
      for (int k = 0; k < 3; ++k) c += F[k][i] * F[k][j];
      E[i][j] = 0.5 * (c - (i == j ? 1.0 : 0.0));
    }
  return E;
}

inline Mat3d fiber_rotation(const FiberFrame& fr) {
  // columns f, s, n
  Mat3d R{};
  for (int i = 0; i < 3; ++i) {
    R[i][0] = fr.f[i];
    R[i][1] = fr.s[i];
    R[i][2] = fr.n[i];
  }
  return R;
}

inline Mat3d guccione_weights(const GuccioneParams& p) {
  return Mat3d{{{p.b_f, p.b_fs, p.b_fn}, {p.b_fs, p.b_s, p.b_sn}, {p.b_fn, p.b_sn, p.b_n}}};
}

template <class T>
Mat3<T> to_fiber_frame(const Mat3<T>& E, const Mat3d& R) {
  Mat3<T> out{};
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      T s(0.0);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) s += R[i][a] * E[i][j] * R[j][b];
      out[a][b] = s;
    }
  return out;
}

void check_guccione_exponent(double q);
}  // namespace detail

/// Passive + volumetric Guccione energy; the active term has no energy.
template <class T>
T guccione_energy(const Mat3<T>& F, const GuccioneParams& p) {
  using std::exp;
  const Mat3<T> Eh = detail::to_fiber_frame(detail::green_lagrange(F), detail::fiber_rotation(p.fiber_frame));
  const Mat3d b = detail::guccione_weights(p);
  T q(0.0);
  for (int a = 0; a < 3; ++a)
    for (int c = 0; c < 3; ++c) q += b[a][c] * Eh[a][c] * Eh[a][c];
  detail::check_guccione_exponent(value_of(q));
  return 0.5 * p.C_scale * (exp(q) - 1.0) + volumetric_energy(det3(F), p.K);
}

/// P = F S_passive + dW_vol/dF + Ta (F f0) (x) f0.
template <class T>
Mat3<T> guccione_pk1(const Mat3<T>& F, const GuccioneParams& p) {
  using std::exp;
  using std::log;
  const Mat3d R = detail::fiber_rotation(p.fiber_frame);
  const Mat3<T> Eh = detail::to_fiber_frame(detail::green_lagrange(F), R);
  const Mat3d b = detail::guccione_weights(p);
  T q(0.0);
  for (int a = 0; a < 3; ++a)
    for (int c = 0; c < 3; ++c) q += b[a][c] * Eh[a][c] * Eh[a][c];
  detail::check_guccione_exponent(value_of(q));
  const T scale = p.C_scale * exp(q);

  // S = R (C e^Q b o Eh) R^T
  Mat3<T> Sh{};
  for (int a = 0; a < 3; ++a)
    for (int c = 0; c < 3; ++c) Sh[a][c] = scale * b[a][c] * Eh[a][c];
  Mat3<T> S{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      T s(0.0);
      for (int a = 0; a < 3; ++a)
        for (int c = 0; c < 3; ++c) s += R[i][a] * Sh[a][c] * R[j][c];
      S[i][j] = s;
    }
  Mat3<T> P = matmul3(F, S);

  const T J = det3(F);
  const Mat3<T> cof = cofactor3(F);
  const T vol = 0.5 * p.K * (J * (J - 1.0) + log(J)) / J;
  const auto& f0 = p.fiber_frame.f;
  for (int i = 0; i < 3; ++i) {
    T ff(0.0);
    for (int k = 0; k < 3; ++k) ff += F[i][k] * f0[k];
    for (int j = 0; j < 3; ++j) P[i][j] += vol * cof[i][j] + p.Ta * ff * f0[j];
  }
  return P;
}

template <class T>
Mat3<T> pk1_generic(const MaterialModel& m, const Mat3<T>& F) {
  return std::visit(
      [&](const auto& p) -> Mat3<T> {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, NeoHookeanParams>) return neo_hookean_pk1(F, p);
        else return guccione_pk1(F, p);
      },
      m);
}

/// Stored energy (active contribution excluded).
double strain_energy(const MaterialModel& m, const Mat3d& F);

Mat3d neo_hookean_pk1(const DeformationState& s, const NeoHookeanParams& p);
Mat3d guccione_pk1(const DeformationState& s, const GuccioneParams& p);
Mat3d pk1(const MaterialModel& m, const Mat3d& F);

/// dP_iJ / dF_kL, flattened as [(3i+J)*9 + (3k+L)].
struct Tangent {
  Mat3d P;
  std::array<double, 81> dPdF;

  double operator()(int i, int J, int k, int L) const { return dPdF[(3 * i + J) * 9 + 3 * k + L]; }
};

/// Exact tangent by pushing F through the stress with 9-lane dual numbers.
Tangent pk1_tangent(const MaterialModel& m, const Mat3d& F);

}  // namespace hyrom
