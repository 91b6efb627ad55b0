#include "hyrom/rom.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>

#include "hyrom/errors.hpp"

namespace hyrom {

void OperatorSnapshotSet::append(const OperatorSnapshotSet& other) {
  residuals.append(other.residuals);
  jacobians.append(other.jacobians);
  inputs.append(other.inputs);
  full_residuals.append(other.full_residuals);
}

Vector vec(const DenseMatrix& J) {
  if (J.rows() != J.cols()) throw InvalidArgument("vec: matrix must be square");
  return Eigen::Map<const Vector>(J.data(), J.size());
}

DenseMatrix unvec(const Vector& v) {
  const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
  if (n * n != v.size()) throw InvalidArgument("unvec: length " + std::to_string(v.size()) + " is not a perfect square");
  return Eigen::Map<const DenseMatrix>(v.data(), n, n);
}

GalerkinProjector::GalerkinProjector(const Assembler& assembler, const DenseMatrix& V) : asm_(assembler), V_(V) {
  if (V.rows() != assembler.dofs())
    throw InvalidArgument("galerkin: basis has " + std::to_string(V.rows()) + " rows, mesh has " +
                          std::to_string(assembler.dofs()) + " dofs");
  for (auto d : assembler.dirichlet_dofs()) V_.row(d).setZero();
}

void GalerkinProjector::evaluate(const RomState& s, const StepContext& ctx, Vector* RN, DenseMatrix* JN,
                                 Vector* full_residual) const {
  asm_.note_assembly();
  const Eigen::Index n = V_.cols();
  const Vector u = V_ * s.uN_now;
  const Vector up = s.uN_prev.size() ? Vector(V_ * s.uN_prev) : Vector::Zero(V_.rows());
  const Vector upp = s.uN_prev2.size() ? Vector(V_ * s.uN_prev2) : Vector::Zero(V_.rows());
  if (RN) RN->setZero(n);
  if (JN) JN->setZero(n, n);
  if (full_residual) full_residual->setZero(V_.rows());

  double re[24];
  double ke[576];
  Eigen::Matrix<double, 24, Eigen::Dynamic> Ve(24, n);
  const auto& mask = asm_.dirichlet_mask();
  for (std::size_t e = 0; e < asm_.mesh().element_count(); ++e) {
    asm_.element_contribution(e, u, up, upp, ctx, re, JN ? ke : nullptr);
    const auto dofs = asm_.element_dofs(e);
    for (int i = 0; i < 24; ++i) Ve.row(i) = V_.row(dofs[i]);
    const Eigen::Map<const Eigen::Matrix<double, 24, 1>> rv(re);
    if (RN) RN->noalias() += Ve.transpose() * rv;
    if (JN) {
      const Eigen::Map<const Eigen::Matrix<double, 24, 24>> km(ke);
      JN->noalias() += Ve.transpose() * (km * Ve);
    }
    if (full_residual)
      for (int i = 0; i < 24; ++i)
        if (!mask[static_cast<std::size_t>(dofs[i])]) (*full_residual)[dofs[i]] += re[i];
  }
}

Vector reduced_residual(const GalerkinProjector& proj, const RomState& s, const StepContext& ctx) {
  Vector r;
  proj.evaluate(s, ctx, &r, nullptr);
  return r;
}

DenseMatrix reduced_jacobian(const GalerkinProjector& proj, const RomState& s, const StepContext& ctx) {
  DenseMatrix j;
  proj.evaluate(s, ctx, nullptr, &j);
  return j;
}

std::vector<Vector> RomTrajectory::lifted(const DenseMatrix& V) const {
  std::vector<Vector> out;
  out.reserve(states.size());
  for (const auto& s : states) out.emplace_back(V * s);
  return out;
}

namespace {

class RomSystem final : public NewtonSystem {
 public:
  RomSystem(const GalerkinProjector& proj, RomState& state, const StepContext& ctx, bool want_jacobian_always,
            bool want_full, PhaseTimes& times)
      : proj_(proj), state_(state), ctx_(ctx), always_jac_(want_jacobian_always), want_full_(want_full), times_(times) {}

  Vector residual(const Vector& u) override {
    ScopedTimer timer(times_.construction);
    state_.uN_now = u;
    Vector r;
    if (always_jac_) {
      DenseMatrix j;
      proj_.evaluate(state_, ctx_, &r, &j, want_full_ ? &full_ : nullptr);
      cached_u_ = u;
      cached_j_ = std::move(j);
    } else {
      proj_.evaluate(state_, ctx_, &r, nullptr);
    }
    return r;
  }

  Vector solve_jacobian(const Vector& u, const Vector& rhs) override {
    const DenseMatrix& j = jacobian(u);
    ScopedTimer timer(times_.solution);
    return LuFactor(j).solve(rhs);
  }

  const DenseMatrix& jacobian(const Vector& u) {
    ScopedTimer timer(times_.construction);
    if (!cached_u_ || cached_u_->size() != u.size() || *cached_u_ != u) {
      state_.uN_now = u;
      DenseMatrix j;
      proj_.evaluate(state_, ctx_, nullptr, &j);
      cached_u_ = u;
      cached_j_ = std::move(j);
    }
    return cached_j_;
  }

  const Vector& full_residual() const { return full_; }

 private:
  const GalerkinProjector& proj_;
  RomState& state_;
  const StepContext& ctx_;
  bool always_jac_;
  bool want_full_;
  std::optional<Vector> cached_u_;
  DenseMatrix cached_j_;
  Vector full_;
  PhaseTimes& times_;
};

}  // namespace

RomTrajectory run_rom(const GalerkinProjector& proj, const ProblemSetup& setup, const TimeGrid& grid,
                      const NewtonSettings& settings, const RomRunOptions& options, OperatorSnapshotSet* collected) {
  validate(setup.material);
  const auto t0 = std::chrono::steady_clock::now();
  const Eigen::Index n = proj.dimension();
  RomTrajectory traj;
  RomState state{Vector::Zero(n), Vector::Zero(n), Vector::Zero(n), 0};
  const bool collect = options.collect && collected != nullptr;

  for (int step = 1; step <= grid.Nt; ++step) {
    state.time_index = step;
    const StepContext ctx = setup.context(grid, step);
    RomSystem system(proj, state, ctx, collect, collect && options.collect_full_residuals, traj.phases);
    IterateObserver obs;
    if (collect) {
      obs = [&](int k, const Vector& u, const Vector& r) {
        SnapshotMeta meta{options.mu, static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(k)};
        collected->residuals.append(r, meta);
        collected->jacobians.append(vec(system.jacobian(u)), meta);
        Vector in(static_cast<Eigen::Index>(options.mu.size()) + 2);
        for (std::size_t i = 0; i < options.mu.size(); ++i) in[static_cast<Eigen::Index>(i)] = options.mu[i];
        in[in.size() - 2] = grid.time(step);
        in[in.size() - 1] = static_cast<double>(k);
        collected->inputs.append(in, meta);
        if (options.collect_full_residuals) collected->full_residuals.append(system.full_residual(), meta);
      };
    }
    NewtonResult res;
    try {
      res = newton_solve(settings, system, state.uN_prev, obs);
    } catch (const Error& err) {
      throw Divergence("rom step n=" + std::to_string(step) + ": " + err.what());
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
