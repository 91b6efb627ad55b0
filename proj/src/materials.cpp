#include "hyrom/materials.hpp"

#include <string>

#include "hyrom/errors.hpp"

namespace hyrom {

DeformationState deformation_state(const Mat3d& F) {
  DeformationState s{};
  s.F = F;
  s.J = det3(F);
  if (!(s.J > 0.0)) throw InvertedElement("deformation gradient with det F = " + std::to_string(s.J));
  s.C = matmul3(transpose3(F), F);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) s.E[i][j] = 0.5 * (s.C[i][j] - (i == j ? 1.0 : 0.0));
  return s;
}

DeformationState deformation_gradient(const Mat3d& grad_u) {
  Mat3d F = grad_u;
  for (int i = 0; i < 3; ++i) F[i][i] += 1.0;
  return deformation_state(F);
}

void detail::check_guccione_exponent(double q) {
  if (!(q <= 700.0)) throw Divergence("guccione: exponent Q = " + std::to_string(q) + " exceeds 700");
}

void validate(const MaterialModel& m) {
  std::visit(
      [](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, NeoHookeanParams>) {
          if (!(p.G > 0.0) || !(p.K > 0.0)) throw InvalidArgument("neo-Hookean: G and K must be positive");
        } else {
          if (!(p.C_scale > 0.0)) throw InvalidArgument("guccione: C must be positive");
          if (!(p.K > 0.0)) throw InvalidArgument("guccione: K must be positive");
          for (double b : {p.b_f, p.b_s, p.b_n, p.b_fs, p.b_fn, p.b_sn})
            if (b < 0.0) throw InvalidArgument("guccione: stiffness exponents must be >= 0");
          const auto& fr = p.fiber_frame;
          const std::array<const std::array<double, 3>*, 3> axes{&fr.f, &fr.s, &fr.n};
          for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) {
              double dot = 0.0;
              for (int i = 0; i < 3; ++i) dot += (*axes[a])[i] * (*axes[b])[i];
              if (std::abs(dot - (a == b ? 1.0 : 0.0)) > 1e-12)
                throw InvalidArgument("guccione: fiber frame is not orthonormal");
            }
        }
      },
      m);
}

double strain_energy(const MaterialModel& m, const Mat3d& F) {
  return std::visit(
      [&](const auto& p) -> double {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, NeoHookeanParams>) return neo_hookean_energy(F, p);
        else return guccione_energy(F, p);
      },
      m);
}

Mat3d neo_hookean_pk1(const DeformationState& s, const NeoHookeanParams& p) { return neo_hookean_pk1(s.F, p); }
Mat3d guccione_pk1(const DeformationState& s, const GuccioneParams& p) { return guccione_pk1(s.F, p); }

Mat3d pk1(const MaterialModel& m, const Mat3d& F) {
  if (!(det3(F) > 0.0)) throw InvertedElement("pk1: det F <= 0");
  return pk1_generic(m, F);
}

Tangent pk1_tangent(const MaterialModel& m, const Mat3d& F) {
  if (!(det3(F) > 0.0)) throw InvertedElement("pk1_tangent: det F <= 0");
  using D = Dual<9>;
  Mat3<D> Fd{};
  for (int k = 0; k < 3; ++k)
    for (int L = 0; L < 3; ++L) Fd[k][L] = D::variable(F[k][L], 3 * k + L);
  const Mat3<D> Pd = pk1_generic(m, Fd);
  Tangent t{};
  for (int i = 0; i < 3; ++i)
    for (int J = 0; J < 3; ++J) {
      t.P[i][J] = Pd[i][J].v;
      for (int l = 0; l < 9; ++l) t.dPdF[(3 * i + J) * 9 + l] = Pd[i][J].d[l];
    }
  return t;
}

}  // namespace hyrom

namespace hyrom {

FiberFrame make_fiber_frame(const std::array<double, 3>& fiber, const std::array<double, 3>& sheet) {
  auto dot = [](const std::array<double, 3>& a, const std::array<double, 3>& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
  };
  FiberFrame fr;
  const double nf = std::sqrt(dot(fiber, fiber));
  if (!(nf > 0.0)) throw InvalidArgument("fiber frame: zero fiber direction");
  for (int i = 0; i < 3; ++i) fr.f[i] = fiber[i] / nf;
  const double proj = dot(sheet, fr.f);
  for (int i = 0; i < 3; ++i) fr.s[i] = sheet[i] - proj * fr.f[i];
  const double ns = std::sqrt(dot(fr.s, fr.s));
  if (!(ns > 1e-12)) throw InvalidArgument("fiber frame: sheet direction parallel to fiber");
  for (auto& x : fr.s) x /= ns;
  fr.n = {fr.f[1] * fr.s[2] - fr.f[2] * fr.s[1], fr.f[2] * fr.s[0] - fr.f[0] * fr.s[2],
          fr.f[0] * fr.s[1] - fr.f[1] * fr.s[0]};
  return fr;
}

}  // namespace hyrom
