#pragma once

#include <vector>

#include "hyrom/fom.hpp"
#include "hyrom/pod.hpp"

namespace hyrom {

struct RomState {
  Vector uN_now;
  Vector uN_prev;
  Vector uN_prev2;
  int time_index = 0;
};

/// Reduced training data gathered along ROM Newton iterations.
struct OperatorSnapshotSet {
  SnapshotMatrix residuals;       // N rows
  SnapshotMatrix jacobians;       // N^2 rows, vec (column-stacked)
  SnapshotMatrix inputs;          // P+2 rows: (mu, t^n, k)
  SnapshotMatrix full_residuals;  // N_h rows, only when requested (DEIM training)

  Eigen::Index count() const { return residuals.cols(); }
  void append(const OperatorSnapshotSet& other);
};

/// Galerkin-projected operators computed element by element on the lifted state.
class GalerkinProjector {
 public:
  GalerkinProjector(const Assembler& assembler, const DenseMatrix& V);

  Eigen::Index dimension() const { return V_.cols(); }
  const DenseMatrix& basis() const { return V_; }

  /// R_N = V^T R(V u_N) and, when requested, J_N = V^T J V and the full residual R.
  void evaluate(const RomState& s, const StepContext& ctx, Vector* RN, DenseMatrix* JN,
                Vector* full_residual = nullptr) const;

  Vector lift(const Vector& uN) const { return V_ * uN; }

 private:
  const Assembler& asm_;
  DenseMatrix V_;  // Dirichlet rows zeroed
};

Vector reduced_residual(const GalerkinProjector& proj, const RomState& s, const StepContext& ctx);
DenseMatrix reduced_jacobian(const GalerkinProjector& proj, const RomState& s, const StepContext& ctx);

struct RomRunOptions {
  bool collect = false;
  bool collect_full_residuals = false;
  std::vector<double> mu;
};

struct RomTrajectory {
  std::vector<Vector> states;  // u_N^n for n = 1..Nt
  std::vector<int> iterations;
  double wall_seconds = 0.0;
  PhaseTimes phases;

  /// V u_N^n for every step.
  std::vector<Vector> lifted(const DenseMatrix& V) const;
};

RomTrajectory run_rom(const GalerkinProjector& proj, const ProblemSetup& setup, const TimeGrid& grid,
                      const NewtonSettings& settings, const RomRunOptions& options = {},
                      OperatorSnapshotSet* collected = nullptr);

/// Column-major stacking of a square matrix and its inverse.
Vector vec(const DenseMatrix& J);
DenseMatrix unvec(const Vector& v);

}  // namespace hyrom
