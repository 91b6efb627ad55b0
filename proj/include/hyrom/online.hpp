#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "hyrom/dnn.hpp"
#include "hyrom/rom.hpp"

namespace hyrom {

struct OnlineSettings {
  double eps_stop = 1e-3;
  int max_iters = 0;       // 0: largest training Newton index + 2
  int k_cap = -1;          // < 0: largest training Newton index; larger caps let k extrapolate (counted)
  bool fail_on_cap = false;  // throw Divergence when a step hits max_iters

  void validate() const;
};

struct HyromnetRun {
  RomTrajectory traj;
  std::uint64_t assembly_calls = 0;  // full-order assemblies during the run; must stay 0
  int extrapolated_evals = 0;        // network calls with k above the training range
  int singular_fallbacks = 0;
  int capped_steps = 0;              // steps that stopped at max_iters
};

/// Any map (mu, t, k) -> reduced residual / vec(Jacobian).
struct OperatorModel {
  std::function<Vector(const Vector&)> rho;
  std::function<Vector(const Vector&)> iota;
  int max_newton_index = 0;
};

HyromnetRun run_hyromnet(const OperatorModel& model, Eigen::Index N, const std::vector<double>& mu,
                         const TimeGrid& grid, const OnlineSettings& settings = {});

/// Newton iterations on network-predicted reduced operators only. V is used for its column count.
HyromnetRun run_hyromnet(const SurrogatePair& pair, const DenseMatrix& V, const std::vector<double>& mu,
                         const TimeGrid& grid, const OnlineSettings& settings = {});

/// Genuine reduced residual norms |V^T R(V u_N^n)| per step, assembled under an AuditScope.
std::vector<double> audit_residuals(const GalerkinProjector& proj, const ProblemSetup& setup, const TimeGrid& grid,
                                    const RomTrajectory& traj);

struct PairTrainResult {
  SurrogatePair pair;
  TrainHistory rho_history;
  TrainHistory iota_history;
};

/// Network specs for parameter dimension P and basis size N.
std::pair<NetworkSpec, NetworkSpec> default_pair_specs(int P, int N, DecoderKind decoder = DecoderKind::Auto);

/// Trains the residual net on R_N snapshots and the Jacobian net on vec(J_N), sharing the inputs.
PairTrainResult train_pair(const OperatorSnapshotSet& data, const NetworkSpec& rho_spec,
                           const NetworkSpec& iota_spec, const TrainConfig& config);

}  // namespace hyrom
