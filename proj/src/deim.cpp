#include "hyrom/deim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

#include "hyrom/errors.hpp"

namespace hyrom {

namespace {

Eigen::Index argmax_abs(const Vector& v) {
  Eigen::Index best = 0;
  double bv = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double a = std::abs(v[i]);
    if (a > bv) {
      bv = a;
      best = i;
    }
  }
  return best;
}

}  // namespace

std::vector<std::int32_t> deim_points(const DenseMatrix& Phi) {
  if (Phi.cols() < 1 || Phi.rows() < Phi.cols()) throw InvalidArgument("deim_points: need N_h >= m >= 1");
  require_finite(Phi, "deim_points");
  const Eigen::Index m = Phi.cols();
  std::vector<std::int32_t> idx;
  idx.reserve(static_cast<std::size_t>(m));
  const double scale = Phi.cwiseAbs().maxCoeff();
  idx.push_back(static_cast<std::int32_t>(argmax_abs(Phi.col(0))));
  if (std::abs(Phi(idx[0], 0)) <= 1e-14 * scale) throw SingularMatrix("deim_points: column 0 is zero");
  for (Eigen::Index j = 1; j < m; ++j) {
    DenseMatrix PtU(j, j);
    Vector Ptu(j);
    for (Eigen::Index a = 0; a < j; ++a) {
      PtU.row(a) = Phi.block(idx[static_cast<std::size_t>(a)], 0, 1, j);
      Ptu[a] = Phi(idx[static_cast<std::size_t>(a)], j);
    }
    Vector c;
    try {
      c = LuFactor(PtU).solve(Ptu);
    } catch (const SingularMatrix&) {
      throw SingularMatrix("deim_points: singular interpolation block at column " + std::to_string(j));
    }
    const Vector r = Phi.col(j) - Phi.leftCols(j) * c;
    const Eigen::Index i = argmax_abs(r);
    if (std::abs(r[i]) <= 1e-12 * scale)
      throw SingularMatrix("deim_points: column " + std::to_string(j) + " is dependent on previous columns");
    idx.push_back(static_cast<std::int32_t>(i));
  }
  return idx;
}

DeimOperator make_deim_operator(DenseMatrix Phi, const DenseMatrix& V, const Mesh& mesh) {
  if (Phi.rows() != V.rows() || V.rows() != static_cast<Eigen::Index>(mesh.dof_count()))
    throw InvalidArgument("deim: basis row counts disagree with the mesh");
  DeimOperator op;
  op.magic_rows = deim_points(Phi);
  const Eigen::Index m = Phi.cols();
  DenseMatrix PtPhi(m, m);
  for (Eigen::Index a = 0; a < m; ++a) PtPhi.row(a) = Phi.row(op.magic_rows[static_cast<std::size_t>(a)]);
  const LuFactor lu(PtPhi);
  op.condition_estimate = lu.condition_estimate();
  // left_factor = V^T Phi (P^T Phi)^{-1}  <=>  (P^T Phi)^T left_factor^T = Phi^T V
  DenseMatrix Vd = V;
  for (auto d : mesh.dirichlet_dofs()) Vd.row(d).setZero();
  const DenseMatrix rhs = Phi.transpose() * Vd;
  const LuFactor lut(DenseMatrix(PtPhi.transpose()));
  op.left_factor = lut.solve(rhs).transpose();
  op.reduced_mesh = extract_reduced_mesh(mesh, op.magic_rows);
  op.Phi = std::move(Phi);
  return op;
}

DeimOperator build_deim_operator(const SnapshotMatrix& residual_snapshots, double eps_deim, const DenseMatrix& V,
                                 const Mesh& mesh, PodMethod method, std::uint64_t seed) {
  const ReducedBasis rb = pod(residual_snapshots, eps_deim, method, seed);
  return make_deim_operator(rb.V, V, mesh);
}

HyperReducer::HyperReducer(const Assembler& assembler, const DenseMatrix& V, const DeimOperator& op)
    : asm_(assembler), op_(op) {
  if (V.rows() != assembler.dofs()) throw InvalidArgument("hyper: basis rows differ from mesh dofs");
  if (op.left_factor.rows() != V.cols()) throw InvalidArgument("hyper: DEIM operator built for another basis");
  const auto ndof = static_cast<std::size_t>(assembler.dofs());
  local_of_.assign(ndof, -1);
  magic_slot_.assign(ndof, -1);
  std::set<std::int32_t> active;
  for (auto e : op.reduced_mesh.element_subset)
    for (auto d : assembler.element_dofs(static_cast<std::size_t>(e))) active.insert(d);
  active_.assign(active.begin(), active.end());
  V_active_.resize(static_cast<Eigen::Index>(active_.size()), V.cols());
  const auto& mask = assembler.dirichlet_mask();
  for (std::size_t i = 0; i < active_.size(); ++i) {
    const auto d = active_[i];
    local_of_[static_cast<std::size_t>(d)] = static_cast<std::int32_t>(i);
    if (mask[static_cast<std::size_t>(d)])
      V_active_.row(static_cast<Eigen::Index>(i)).setZero();
    else
      V_active_.row(static_cast<Eigen::Index>(i)) = V.row(d);
  }
  for (std::size_t a = 0; a < op.magic_rows.size(); ++a) {
    const auto d = op.magic_rows[a];
    if (local_of_[static_cast<std::size_t>(d)] < 0) throw InvalidArgument("hyper: magic dof outside reduced mesh");
    magic_slot_[static_cast<std::size_t>(d)] = static_cast<std::int32_t>(a);
  }
}

void HyperReducer::sample(const RomState& s, const StepContext& ctx, Vector* PR, DenseMatrix* PJV) const {
  asm_.note_assembly();
  const Eigen::Index n = V_active_.cols();
  const Eigen::Index m = op_.size();
  const auto ndof = asm_.dofs();
  // Lifted states are only filled at active dofs; elements outside the subset never read them.
  Vector u = Vector::Zero(ndof), up = Vector::Zero(ndof), upp = Vector::Zero(ndof);
  const Vector la = V_active_ * s.uN_now;
  const Vector lp = s.uN_prev.size() ? Vector(V_active_ * s.uN_prev) : Vector::Zero(la.size());
  const Vector lpp = s.uN_prev2.size() ? Vector(V_active_ * s.uN_prev2) : Vector::Zero(la.size());
  for (std::size_t i = 0; i < active_.size(); ++i) {
    const auto d = active_[i];
    const auto li = static_cast<Eigen::Index>(i);
    u[d] = la[li];
    up[d] = lp[li];
    upp[d] = lpp[li];
  }
  if (PR) PR->setZero(m);
  if (PJV) PJV->setZero(m, n);
  double re[24];
  double ke[576];
  for (auto e : op_.reduced_mesh.element_subset) {
    const auto eu = static_cast<std::size_t>(e);
    asm_.element_contribution(eu, u, up, upp, ctx, re, PJV ? ke : nullptr);
    const auto dofs = asm_.element_dofs(eu);
    for (int a = 0; a < 24; ++a) {
      const auto slot = magic_slot_[static_cast<std::size_t>(dofs[a])];
      if (slot < 0) continue;
      if (PR) (*PR)[slot] += re[a];
      if (PJV)
        for (int b = 0; b < 24; ++b) {
          const double kab = ke[a + 24 * b];
          if (kab != 0.0) PJV->row(slot) += kab * V_active_.row(local_of_[static_cast<std::size_t>(dofs[b])]);
        }
    }
  }
}

Vector HyperReducer::residual(const RomState& s, const StepContext& ctx) const {
  Vector pr;
  sample(s, ctx, &pr, nullptr);
  return op_.left_factor * pr;
}

DenseMatrix HyperReducer::jacobian(const RomState& s, const StepContext& ctx) const {
  DenseMatrix pj;
  sample(s, ctx, nullptr, &pj);
  return op_.left_factor * pj;
}

Vector hyper_residual(const HyperReducer& h, const RomState& s, const StepContext& ctx) { return h.residual(s, ctx); }

DenseMatrix hyper_jacobian(const HyperReducer& h, const RomState& s, const StepContext& ctx) {
  return h.jacobian(s, ctx);
}

namespace {

class DeimSystem final : public NewtonSystem {
 public:
  DeimSystem(const HyperReducer& h, RomState& state, const StepContext& ctx, PhaseTimes& times)
      : h_(h), state_(state), ctx_(ctx), times_(times) {}

  Vector residual(const Vector& u) override {
    ScopedTimer timer(times_.construction);
    state_.uN_now = u;
    return h_.residual(state_, ctx_);
  }

  Vector solve_jacobian(const Vector& u, const Vector& rhs) override {
    DenseMatrix j;
    {
      ScopedTimer timer(times_.construction);
      state_.uN_now = u;
      j = h_.jacobian(state_, ctx_);
    }
    ScopedTimer timer(times_.solution);
    return LuFactor(j).solve(rhs);
  }

 private:
  const HyperReducer& h_;
  RomState& state_;
  const StepContext& ctx_;
  PhaseTimes& times_;
};

}  // namespace

RomTrajectory run_deim_rom(const HyperReducer& h, const ProblemSetup& setup, const TimeGrid& grid,
                           const NewtonSettings& settings) {
  validate(setup.material);
  const auto t0 = std::chrono::steady_clock::now();
  const Eigen::Index n = h.dimension();
  RomTrajectory traj;
  RomState state{Vector::Zero(n), Vector::Zero(n), Vector::Zero(n), 0};
  for (int step = 1; step <= grid.Nt; ++step) {
    state.time_index = step;
    const StepContext ctx = setup.context(grid, step);
    DeimSystem system(h, state, ctx, traj.phases);
    NewtonResult res;
    try {
      res = newton_solve(settings, system, state.uN_prev);
    } catch (const Error& err) {
      throw Divergence("deim step n=" + std::to_string(step) + ": " + err.what());
    }
    state.uN_prev2 = state.uN_prev;
    state.uN_prev = res.solution;
    traj.states.push_back(std::move(res.solution));
    traj.iterations.push_back(res.iterations);
  }
  traj.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  traj.phases.other = std::max(0.0, traj.wall_seconds - traj.phases.construction - traj.phases.solution);
  return traj;
}

}  // namespace hyrom
