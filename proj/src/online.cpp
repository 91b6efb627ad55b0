#include "hyrom/online.hpp"

#include <algorithm>
#include <chrono>

#include "hyrom/errors.hpp"

namespace hyrom {

void OnlineSettings::validate() const {
  if (!(eps_stop > 0.0)) throw InvalidArgument("online: eps_stop must be positive");
  if (max_iters < 0) throw InvalidArgument("online: max_iters must be >= 0");
}

namespace {

Vector solve_predicted(DenseMatrix iota, const Vector& rhs, int& fallbacks) {
  try {
    return LuFactor(iota).solve(rhs);
  } catch (const SingularMatrix&) {
    const Eigen::Index n = iota.rows();
    double shift = 1e-8 * iota.trace() / static_cast<double>(n);
    if (shift == 0.0) shift = 1e-8 * std::max(1.0, iota.cwiseAbs().maxCoeff());
    iota.diagonal().array() += shift;
    ++fallbacks;
    try {
      return LuFactor(iota).solve(rhs);
    } catch (const SingularMatrix& e) {
      throw SingularMatrix(std::string("hyromnet: predicted Jacobian singular after regularization: ") + e.what());
    }
  }
}

}  // namespace

HyromnetRun run_hyromnet(const SurrogatePair& pair, const DenseMatrix& V, const std::vector<double>& mu,
                         const TimeGrid& grid, const OnlineSettings& settings) {
  const Eigen::Index N = V.cols();
  if (pair.rho.spec.output_dim != N || pair.iota.spec.output_dim != N * N)
    throw InvalidArgument("hyromnet: networks were trained for a different basis size");
  if (pair.rho.spec.input_dim != static_cast<int>(mu.size()) + 2)
    throw InvalidArgument("hyromnet: parameter dimension does not match the networks");
  OperatorModel model;
  model.rho = [&](const Vector& x) { return pair.rho.forward(x); };
  model.iota = [&](const Vector& x) { return pair.iota.forward(x); };
  model.max_newton_index = std::max(pair.rho.max_newton_index, pair.iota.max_newton_index);
  return run_hyromnet(model, N, mu, grid, settings);
}

HyromnetRun run_hyromnet(const OperatorModel& model, Eigen::Index N, const std::vector<double>& mu,
                         const TimeGrid& grid, const OnlineSettings& settings) {
  settings.validate();
  if (!model.rho || !model.iota) throw InvalidArgument("hyromnet: operator model is incomplete");
  const int train_k = model.max_newton_index;
  const int max_iters = settings.max_iters > 0 ? settings.max_iters : train_k + 2;
  const int k_cap = settings.k_cap >= 0 ? settings.k_cap : train_k;

  HyromnetRun run;
  const std::uint64_t counter0 = assembly_counter();
  const auto t0 = std::chrono::steady_clock::now();
  PhaseTimes& times = run.traj.phases;

  Vector x(static_cast<Eigen::Index>(mu.size()) + 2);
  for (std::size_t i = 0; i < mu.size(); ++i) x[static_cast<Eigen::Index>(i)] = mu[i];
  auto feed = [&](int step, int k) {
    const int kk = std::min(k, k_cap);
    if (kk > train_k) ++run.extrapolated_evals;
    x[x.size() - 2] = grid.time(step);
    x[x.size() - 1] = static_cast<double>(kk);
    return x;
  };

  Vector u = Vector::Zero(N);
  for (int step = 1; step <= grid.Nt; ++step) {
    Vector rho;
    {
      ScopedTimer timer(times.construction);
      rho = model.rho(feed(step, 0));
    }
    if (rho.size() != N) throw InvalidArgument("hyromnet: residual model returned the wrong length");
    const double rho0 = rho.norm();
    int k = 0;
    bool converged = rho0 == 0.0;
    while (!converged && k < max_iters) {
      DenseMatrix iota;
      {
        ScopedTimer timer(times.construction);
        iota = unvec(model.iota(feed(step, k)));
      }
      {
        ScopedTimer timer(times.solution);
        u += solve_predicted(std::move(iota), -rho, run.singular_fallbacks);
      }
      ++k;
      {
        ScopedTimer timer(times.construction);
        rho = model.rho(feed(step, k));
      }
      converged = rho.norm() / rho0 < settings.eps_stop;
    }
    if (!converged) {
      ++run.capped_steps;
      if (settings.fail_on_cap)
        throw Divergence("hyromnet step n=" + std::to_string(step) + ": no convergence in " +
                         std::to_string(max_iters) + " iterations");
    }
    run.traj.states.push_back(u);
    run.traj.iterations.push_back(k);
  }
  run.traj.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  times.other = std::max(0.0, run.traj.wall_seconds - times.construction - times.solution);
  run.assembly_calls = assembly_counter() - counter0;
  return run;
}

std::vector<double> audit_residuals(const GalerkinProjector& proj, const ProblemSetup& setup, const TimeGrid& grid,
                                    const RomTrajectory& traj) {
  AuditScope scope;
  std::vector<double> out;
  const Eigen::Index n = proj.dimension();
  RomState s{Vector::Zero(n), Vector::Zero(n), Vector::Zero(n), 0};
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    const int step = static_cast<int>(i) + 1;
    s.time_index = step;
    s.uN_now = traj.states[i];
    out.push_back(reduced_residual(proj, s, setup.context(grid, step)).norm());
    s.uN_prev2 = s.uN_prev;
    s.uN_prev = traj.states[i];
  }
  return out;
}

std::pair<NetworkSpec, NetworkSpec> default_pair_specs(int P, int N, DecoderKind decoder) {
  return {NetworkSpec::make(P + 2, N, decoder), NetworkSpec::make(P + 2, N * N, decoder)};
}

PairTrainResult train_pair(const OperatorSnapshotSet& data, const NetworkSpec& rho_spec, const NetworkSpec& iota_spec,
                           const TrainConfig& config) {
  if (data.count() == 0) throw InvalidArgument("train_pair: empty snapshot set");
  if (data.jacobians.cols() != data.count() || data.inputs.cols() != data.count())
    throw InvalidArgument("train_pair: residual, Jacobian and input column counts differ");
  const DenseMatrix M = data.inputs.data();
  PairTrainResult out;
  TrainResult r = train(M, DenseMatrix(data.residuals.data()), rho_spec, config);
  out.pair.rho = std::move(r.surrogate);
  out.rho_history = std::move(r.history);
  TrainConfig c2 = config;
  c2.seed = config.seed + 1;
  TrainResult j = train(M, DenseMatrix(data.jacobians.data()), iota_spec, c2);
  out.pair.iota = std::move(j.surrogate);
  out.iota_history = std::move(j.history);
  return out;
}

}  // namespace hyrom
