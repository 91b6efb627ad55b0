#include "hyrom/fom.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "hyrom/errors.hpp"

namespace hyrom {

namespace {

std::atomic<std::uint64_t> g_assembly_calls{0};
std::atomic<std::uint64_t> g_audit_calls{0};
thread_local int g_audit_depth = 0;

struct Jac3 {
  double m[3][3];
};

// Physical shape gradients at a reference point; returns det of the map Jacobian.
double physical_gradients(const Mesh& mesh, std::size_t e, const ShapeEval& se,
                          std::array<std::array<double, 3>, 8>& dN, Jac3* jac_out = nullptr) {
  const auto& conn = mesh.hex_elements[e];
  Jac3 jm{};
  for (int a = 0; a < 8; ++a) {
    const Point3& X = mesh.node_coords[static_cast<std::size_t>(conn[a])];
    for (int i = 0; i < 3; ++i)
      for (int d = 0; d < 3; ++d) jm.m[i][d] += X[i] * se.gradients[a][d];
  }
  Mat3d J{};
  for (int i = 0; i < 3; ++i)
    for (int d = 0; d < 3; ++d) J[i][d] = jm.m[i][d];
  const double det = det3(J);
  if (!(det > 0.0)) throw InvalidArgument("mesh: non-positive map Jacobian in element " + std::to_string(e));
  const Mat3d cof = cofactor3(J);  // J^{-1} = cof^T / det
  for (int a = 0; a < 8; ++a)
    for (int Jx = 0; Jx < 3; ++Jx) {
      double s = 0.0;
      for (int d = 0; d < 3; ++d) s += se.gradients[a][d] * cof[Jx][d] / det;
      dN[a][Jx] = s;
    }
  if (jac_out) *jac_out = jm;
  return det;
}

}  // namespace

std::uint64_t assembly_counter() { return g_assembly_calls.load(); }
std::uint64_t audit_counter() { return g_audit_calls.load(); }

AuditScope::AuditScope() { ++g_audit_depth; }
AuditScope::~AuditScope() { --g_audit_depth; }

TimeGrid TimeGrid::from_final_time(double T, double dt) {
  if (!(dt > 0.0) || !(T > 0.0)) throw InvalidArgument("time grid: T and dt must be positive");
  const double steps = T / dt;
  const long n = std::lround(steps);
  if (n < 1 || std::abs(steps - static_cast<double>(n)) > 1e-6 * std::max(1.0, steps))
    throw InvalidArgument("time grid: T/dt = " + std::to_string(steps) + " is not a positive integer");
  return TimeGrid{T, dt, static_cast<int>(n)};
}

double LoadProgram::value(double t, double T) const {
  switch (kind) {
    case LoadKind::Linear:
      return amplitude * t / T;
    case LoadKind::Hat:
      if (t <= 0.0) return 0.0;
      if (t <= 0.5 * T) return amplitude * 2.0 * t / T;
      if (t <= T) return amplitude * 2.0 * (T - t) / T;
      return 0.0;
    case LoadKind::Step:
      return (t > 0.0 && t <= T / 3.0 + 1e-12 * T) ? amplitude : 0.0;
  }
  return 0.0;
}

LoadKind parse_load_kind(const std::string& s) {
  if (s == "linear") return LoadKind::Linear;
  if (s == "hat") return LoadKind::Hat;
  if (s == "step") return LoadKind::Step;
  throw InvalidArgument("unknown load kind '" + s + "' (expected linear, hat or step)");
}

std::string to_string(LoadKind k) {
  switch (k) {
    case LoadKind::Linear: return "linear";
    case LoadKind::Hat: return "hat";
    case LoadKind::Step: return "step";
  }
  return "?";
}

Assembler::Assembler(const Mesh& mesh) : mesh_(mesh) {
  const std::size_t ne = mesh.element_count();
  const auto& g = gauss2();
  quad_.resize(ne);
  elem_mass_.resize(ne);
  facets_.resize(ne);
  elem_dofs_.resize(24 * ne);

  for (std::size_t e = 0; e < ne; ++e) {
    const auto& conn = mesh.hex_elements[e];
    for (int a = 0; a < 8; ++a)
      for (int c = 0; c < 3; ++c) elem_dofs_[24 * e + 3 * a + c] = 3 * conn[a] + c;

    auto& mass = elem_mass_[e];
    mass.fill(0.0);
    int q = 0;
    for (int k = 0; k < 2; ++k)
      for (int j = 0; j < 2; ++j)
        for (int i = 0; i < 2; ++i, ++q) {
          const ShapeEval se = shape_eval({g.points[i], g.points[j], g.points[k]});
          QuadPoint& qp = quad_[e][q];
          const double det = physical_gradients(mesh, e, se, qp.dN);
          qp.weight = g.weights[i] * g.weights[j] * g.weights[k] * det;
          for (int a = 0; a < 8; ++a)
            for (int b = 0; b < 8; ++b) mass[a * 8 + b] += qp.weight * se.values[a] * se.values[b];
        }
  }

  for (const auto& facet : mesh.boundary_facets) {
    if (facet.tag == BoundaryTag::Dirichlet) continue;
    const auto e = static_cast<std::size_t>(facet.element);
    const int d = facet.local_face / 2;
    const double side = (facet.local_face % 2) ? 1.0 : -1.0;
    const int a1 = d == 0 ? 1 : 0;
    const int a2 = d == 2 ? 1 : 2;
    std::array<FacePoint, 4> pts{};
    int q = 0;
    for (int j = 0; j < 2; ++j)
      for (int i = 0; i < 2; ++i, ++q) {
        Point3 p{};
        p[d] = side;
        p[a1] = g.points[i];
        p[a2] = g.points[j];
        const ShapeEval se = shape_eval(p);
        FacePoint& fp = pts[q];
        fp.N = se.values;
        Jac3 jm{};
        physical_gradients(mesh, e, se, fp.dN, &jm);
        const std::array<double, 3> t1{jm.m[0][a1], jm.m[1][a1], jm.m[2][a1]};
        const std::array<double, 3> t2{jm.m[0][a2], jm.m[1][a2], jm.m[2][a2]};
        std::array<double, 3> cr{t1[1] * t2[2] - t1[2] * t2[1], t1[2] * t2[0] - t1[0] * t2[2],
                                 t1[0] * t2[1] - t1[1] * t2[0]};
        const double outward = side * (cr[0] * jm.m[0][d] + cr[1] * jm.m[1][d] + cr[2] * jm.m[2][d]);
        const double orient = outward >= 0.0 ? 1.0 : -1.0;
        for (int c = 0; c < 3; ++c) fp.normal_area[c] = orient * cr[c] * g.weights[i] * g.weights[j];
      }
    if (facet.tag == BoundaryTag::NeumannPressure) facets_[e].pressure.push_back(pts);
    else facets_[e].robin.push_back(pts);
  }

  dirichlet_ = mesh.dirichlet_dofs();
  is_dirichlet_.assign(mesh.dof_count(), 0);
  for (auto d : dirichlet_) is_dirichlet_[static_cast<std::size_t>(d)] = 1;

  // Sparsity pattern and per-element scatter slots.
  const auto n = static_cast<Eigen::Index>(mesh.dof_count());
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(576 * ne);
  for (std::size_t e = 0; e < ne; ++e)
    for (int c = 0; c < 24; ++c)
      for (int r = 0; r < 24; ++r) trips.emplace_back(elem_dofs_[24 * e + r], elem_dofs_[24 * e + c], 0.0);
  matrix_.resize(n, n);
  matrix_.setFromTriplets(trips.begin(), trips.end());
  matrix_.makeCompressed();

  const auto* outer = matrix_.outerIndexPtr();
  const auto* inner = matrix_.innerIndexPtr();
  const auto slot = [&](std::int32_t row, std::int32_t col) {
    const auto* first = inner + outer[col];
    const auto* last = inner + outer[col + 1];
    const auto* it = std::lower_bound(first, last, row);
    return static_cast<std::int32_t>(it - inner);
  };
  scatter_.resize(576 * ne);
  for (std::size_t e = 0; e < ne; ++e)
    for (int c = 0; c < 24; ++c)
      for (int r = 0; r < 24; ++r)
        scatter_[576 * e + r + 24 * c] = slot(elem_dofs_[24 * e + r], elem_dofs_[24 * e + c]);

  for (Eigen::Index col = 0; col < n; ++col)
    for (auto p = outer[col]; p < outer[col + 1]; ++p) {
      const auto row = inner[p];
      if (is_dirichlet_[static_cast<std::size_t>(row)] || is_dirichlet_[static_cast<std::size_t>(col)]) {
        constrained_slots_.push_back(static_cast<std::int32_t>(p));
        if (row == col) diagonal_slots_.push_back(static_cast<std::int32_t>(p));
      }
    }
}

void Assembler::note_assembly() const {
  (g_audit_depth > 0 ? g_audit_calls : g_assembly_calls).fetch_add(1, std::memory_order_relaxed);
}

void Assembler::element_contribution(std::size_t e, const Vector& u, const Vector& u_prev, const Vector& u_prev2,
                                     const StepContext& ctx, double* r_e, double* k_e) const {
  const std::int32_t* dofs = elem_dofs_.data() + 24 * e;
  double ue[24], upe[24], uppe[24];
  for (int i = 0; i < 24; ++i) {
    ue[i] = u[dofs[i]];
    upe[i] = u_prev.size() ? u_prev[dofs[i]] : 0.0;
    uppe[i] = u_prev2.size() ? u_prev2[dofs[i]] : 0.0;
  }
  std::fill(r_e, r_e + 24, 0.0);
  if (k_e) std::fill(k_e, k_e + 576, 0.0);

  // Inertia.
  if (ctx.rho0 != 0.0) {
    const double coef = ctx.rho0 / (ctx.dt * ctx.dt);
    const auto& M = elem_mass_[e];
    for (int a = 0; a < 8; ++a)
      for (int b = 0; b < 8; ++b) {
        const double m = coef * M[a * 8 + b];
        for (int c = 0; c < 3; ++c) {
          r_e[3 * a + c] += m * (ue[3 * b + c] - 2.0 * upe[3 * b + c] + uppe[3 * b + c]);
          if (k_e) k_e[(3 * a + c) + 24 * (3 * b + c)] += m;
        }
      }
  }

  // Internal forces.
  for (const QuadPoint& qp : quad_[e]) {
    Mat3d F = identity3<double>();
    for (int b = 0; b < 8; ++b)
      for (int i = 0; i < 3; ++i)
        for (int J = 0; J < 3; ++J) F[i][J] += ue[3 * b + i] * qp.dN[b][J];
    if (!(det3(F) > 0.0)) throw InvertedElement("element " + std::to_string(e) + ": det F <= 0");
    if (k_e) {
      const Tangent t = pk1_tangent(ctx.material, F);
      for (int a = 0; a < 8; ++a)
        for (int i = 0; i < 3; ++i) {
          double s = 0.0;
          for (int J = 0; J < 3; ++J) s += t.P[i][J] * qp.dN[a][J];
          r_e[3 * a + i] += qp.weight * s;
        }
      // B[i][J][k][b] = sum_L A_iJkL dN_b,L
      double B[3][3][3][8];
      for (int i = 0; i < 3; ++i)
        for (int J = 0; J < 3; ++J)
          for (int k = 0; k < 3; ++k)
            for (int b = 0; b < 8; ++b) {
              double s = 0.0;
              for (int L = 0; L < 3; ++L) s += t(i, J, k, L) * qp.dN[b][L];
              B[i][J][k][b] = s;
            }
      for (int a = 0; a < 8; ++a)
        for (int i = 0; i < 3; ++i)
          for (int b = 0; b < 8; ++b)
            for (int k = 0; k < 3; ++k) {
              double s = 0.0;
              for (int J = 0; J < 3; ++J) s += qp.dN[a][J] * B[i][J][k][b];
              k_e[(3 * a + i) + 24 * (3 * b + k)] += qp.weight * s;
            }
    } else {
      const Mat3d P = pk1(ctx.material, F);
      for (int a = 0; a < 8; ++a)
        for (int i = 0; i < 3; ++i) {
          double s = 0.0;
          for (int J = 0; J < 3; ++J) s += P[i][J] * qp.dN[a][J];
          r_e[3 * a + i] += qp.weight * s;
        }
    }
  }

  // Follower pressure: -F_ext contributes +g cof(F) N dA0 . phi.
  if (ctx.pressure != 0.0) {
    for (const auto& face : facets_[e].pressure) {
      for (const FacePoint& fp : face) {
        if (k_e) {
          using D = Dual<9>;
          Mat3<D> F{};
          for (int i = 0; i < 3; ++i)
            for (int J = 0; J < 3; ++J) {
              double v = i == J ? 1.0 : 0.0;
              for (int b = 0; b < 8; ++b) v += ue[3 * b + i] * fp.dN[b][J];
              F[i][J] = D::variable(v, 3 * i + J);
            }
          const Mat3<D> cof = cofactor3(F);
          for (int i = 0; i < 3; ++i) {
            D v(0.0);
            for (int J = 0; J < 3; ++J) v += cof[i][J] * fp.normal_area[J];
            for (int a = 0; a < 8; ++a) {
              r_e[3 * a + i] += ctx.pressure * fp.N[a] * v.v;
              for (int b = 0; b < 8; ++b)
                for (int k = 0; k < 3; ++k) {
                  double s = 0.0;
                  for (int L = 0; L < 3; ++L) s += v.d[3 * k + L] * fp.dN[b][L];
                  k_e[(3 * a + i) + 24 * (3 * b + k)] += ctx.pressure * fp.N[a] * s;
                }
            }
          }
        } else {
          Mat3d F = identity3<double>();
          for (int b = 0; b < 8; ++b)
            for (int i = 0; i < 3; ++i)
              for (int J = 0; J < 3; ++J) F[i][J] += ue[3 * b + i] * fp.dN[b][J];
          const Mat3d cof = cofactor3(F);
          for (int i = 0; i < 3; ++i) {
            double v = 0.0;
            for (int J = 0; J < 3; ++J) v += cof[i][J] * fp.normal_area[J];
            for (int a = 0; a < 8; ++a) r_e[3 * a + i] += ctx.pressure * fp.N[a] * v;
          }
        }
      }
    }
  }

  // Robin: (alpha + beta/dt) M_f u - (beta/dt) M_f u_prev.
  if (ctx.robin_alpha != 0.0 || ctx.robin_beta != 0.0) {
    const double cnow = ctx.robin_alpha + ctx.robin_beta / ctx.dt;
    const double cprev = ctx.robin_beta / ctx.dt;
    for (const auto& face : facets_[e].robin)
      for (const FacePoint& fp : face) {
        const double da = std::sqrt(fp.normal_area[0] * fp.normal_area[0] + fp.normal_area[1] * fp.normal_area[1] +
                                    fp.normal_area[2] * fp.normal_area[2]);
        for (int a = 0; a < 8; ++a)
          for (int b = 0; b < 8; ++b) {
            const double m = fp.N[a] * fp.N[b] * da;
            if (m == 0.0) continue;
            for (int c = 0; c < 3; ++c) {
              r_e[3 * a + c] += m * (cnow * ue[3 * b + c] - cprev * upe[3 * b + c]);
              if (k_e) k_e[(3 * a + c) + 24 * (3 * b + c)] += m * cnow;
            }
          }
      }
  }
}

Vector Assembler::residual(const FomState& s, const StepContext& ctx) const {
  note_assembly();
  Vector r = Vector::Zero(dofs());
  double re[24];
  for (std::size_t e = 0; e < mesh_.element_count(); ++e) {
    element_contribution(e, s.u_now, s.u_prev, s.u_prev2, ctx, re, nullptr);
    const std::int32_t* d = elem_dofs_.data() + 24 * e;
    for (int i = 0; i < 24; ++i) r[d[i]] += re[i];
  }
  for (auto d : dirichlet_) r[d] = 0.0;
  return r;
}

const SparseMatrix& Assembler::jacobian(const FomState& s, const StepContext& ctx) const {
  note_assembly();
  double* vals = matrix_.valuePtr();
  std::fill(vals, vals + matrix_.nonZeros(), 0.0);
  double re[24];
  double ke[576];
  for (std::size_t e = 0; e < mesh_.element_count(); ++e) {
    element_contribution(e, s.u_now, s.u_prev, s.u_prev2, ctx, re, ke);
    const std::int32_t* slots = scatter_.data() + 576 * e;
    for (int i = 0; i < 576; ++i) vals[slots[i]] += ke[i];
  }
  for (auto p : constrained_slots_) vals[p] = 0.0;
  for (auto p : diagonal_slots_) vals[p] = 1.0;
  return matrix_;
}

SparseMatrix Assembler::mass_matrix() const {
  std::vector<Eigen::Triplet<double>> trips;
  for (std::size_t e = 0; e < mesh_.element_count(); ++e) {
    const auto& conn = mesh_.hex_elements[e];
    for (int a = 0; a < 8; ++a)
      for (int b = 0; b < 8; ++b)
        for (int c = 0; c < 3; ++c)
          trips.emplace_back(3 * conn[a] + c, 3 * conn[b] + c, elem_mass_[e][a * 8 + b]);
  }
  SparseMatrix m(dofs(), dofs());
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

NewtonResult newton_solve(const NewtonSettings& settings, NewtonSystem& system, const Vector& initial_guess,
                          const IterateObserver& observer) {
  if (!(settings.rel_tol > 0.0) || !(settings.abs_tol > 0.0) || settings.max_iters < 1)
    throw InvalidArgument("newton: tolerances must be positive and max_iters >= 1");
  if (!(settings.growth_limit >= 1.0)) throw InvalidArgument("newton: growth_limit must be >= 1");
  NewtonResult out;
  Vector u = initial_guess;
  Vector r = system.residual(u);
  double rnorm = r.norm();
  const double target = std::max(settings.rel_tol * rnorm, settings.abs_tol);
  out.residual_history.push_back(rnorm);
  if (observer) observer(0, u, r);

  for (int k = 0; k < settings.max_iters; ++k) {
    if (rnorm <= target) {
      out.solution = std::move(u);
      out.iterations = k;
      return out;
    }
    const Vector delta = system.solve_jacobian(u, -r);
    if (!delta.allFinite()) throw Divergence("newton: non-finite update at iteration " + std::to_string(k));

    double step = 1.0;
    Vector trial;
    Vector r_trial;
    for (int halvings = 0;; ++halvings) {
      trial = u + step * delta;
      try {
        r_trial = system.residual(trial);
      } catch (const InvertedElement&) {
        if (!settings.backtracking || halvings >= 12) throw;
        step *= 0.5;
        continue;
      }
      const double tn = r_trial.norm();
      if (settings.backtracking && !(tn <= settings.growth_limit * rnorm) && halvings < 6) {
        step *= 0.5;
        continue;
      }
      break;
    }
    u = std::move(trial);
    r = std::move(r_trial);
    rnorm = r.norm();
    if (!std::isfinite(rnorm)) throw Divergence("newton: non-finite residual at iteration " + std::to_string(k + 1));
    out.residual_history.push_back(rnorm);
    if (observer) observer(k + 1, u, r);
  }
  if (rnorm <= target) {
    out.solution = std::move(u);
    out.iterations = settings.max_iters;
    return out;
  }
  std::string msg = "newton: no convergence after " + std::to_string(settings.max_iters) + " iterations; history";
  for (double h : out.residual_history) msg += ' ' + std::to_string(h);
  throw Divergence(msg);
}

StepContext ProblemSetup::context(const TimeGrid& grid, int n) const {
  StepContext ctx;
  const double t = grid.time(n);
  ctx.material = material;
  if (auto* g = std::get_if<GuccioneParams>(&ctx.material)) g->Ta = active_amplitude * t / grid.T;
  ctx.pressure = load.value(t, grid.T);
  ctx.rho0 = rho0;
  ctx.dt = grid.dt;
  ctx.robin_alpha = robin_alpha;
  ctx.robin_beta = robin_beta;
  return ctx;
}

namespace {

class FomSystem final : public NewtonSystem {
 public:
  FomSystem(const Assembler& a, FomState& state, const StepContext& ctx,
            Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>& lu, PhaseTimes& times)
      : asm_(a), state_(state), ctx_(ctx), lu_(lu), times_(times) {}

  Vector residual(const Vector& u) override {
    ScopedTimer timer(times_.construction);
    state_.u_now = u;
    return asm_.residual(state_, ctx_);
  }

  Vector solve_jacobian(const Vector& u, const Vector& rhs) override {
    state_.u_now = u;
    const SparseMatrix* J = nullptr;
    {
      ScopedTimer timer(times_.construction);
      J = &asm_.jacobian(state_, ctx_);
    }
    ScopedTimer timer(times_.solution);
    lu_.factorize(*J);
    if (lu_.info() != Eigen::Success) throw SingularMatrix("fom: sparse LU factorization failed");
    return lu_.solve(rhs);
  }

 private:
  const Assembler& asm_;
  FomState& state_;
  const StepContext& ctx_;
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>& lu_;
  PhaseTimes& times_;
};

}  // namespace

Trajectory run_fom(const Assembler& assembler, const ProblemSetup& setup, const TimeGrid& grid,
                   const NewtonSettings& settings, const FomRunOptions& options, SnapshotMatrix* snapshots) {
  validate(setup.material);
  const auto t0 = std::chrono::steady_clock::now();
  const Eigen::Index n = assembler.dofs();
  Trajectory traj;
  traj.states.reserve(static_cast<std::size_t>(grid.Nt));
  FomState state{Vector::Zero(n), Vector::Zero(n), Vector::Zero(n), 0};

  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(assembler.pattern());

  for (int step = 1; step <= grid.Nt; ++step) {
    state.time_index = step;
    const StepContext ctx = setup.context(grid, step);
    FomSystem system(assembler, state, ctx, lu, traj.phases);
    IterateObserver obs;
    if (snapshots && options.snapshots == SnapshotMode::Iterates) {
      obs = [&](int k, const Vector& u, const Vector&) {
        snapshots->append(u, SnapshotMeta{options.mu, static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(k)});
      };
    }
    NewtonResult res;
    try {
      res = newton_solve(settings, system, state.u_prev, obs);
    } catch (const Error& err) {
      throw Divergence("fom step n=" + std::to_string(step) + ": " + err.what());
    }
    if (snapshots && options.snapshots == SnapshotMode::Converged)
      snapshots->append(res.solution,
                        SnapshotMeta{options.mu, static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(res.iterations)});
    state.u_prev2 = state.u_prev;
    state.u_prev = res.solution;
    traj.states.push_back(std::move(res.solution));
    traj.iterations.push_back(res.iterations);
  }
  traj.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  traj.phases.other = std::max(0.0, traj.wall_seconds - traj.phases.construction - traj.phases.solution);
  return traj;
}

}  // namespace hyrom
