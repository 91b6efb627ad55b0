#pragma once

#include <memory>
#include <vector>

#include "hyrom/rom.hpp"

namespace hyrom {

/// Greedy interpolation indices for the columns of Phi (ties go to the lowest index).
std::vector<std::int32_t> deim_points(const DenseMatrix& Phi);

struct DeimOperator {
  DenseMatrix Phi;                       // N_h x m
  std::vector<std::int32_t> magic_rows;  // m dof indices
  DenseMatrix left_factor;               // N x m: V^T Phi (P^T Phi)^{-1}
  ReducedMesh reduced_mesh;
  double condition_estimate = 0.0;       // of P^T Phi

  Eigen::Index size() const { return Phi.cols(); }
};

/// Builds the operator from a given residual basis Phi and the state basis V.
DeimOperator make_deim_operator(DenseMatrix Phi, const DenseMatrix& V, const Mesh& mesh);

/// POD of the residual snapshots at eps_deim, then magic points and reduced mesh.
DeimOperator build_deim_operator(const SnapshotMatrix& residual_snapshots, double eps_deim, const DenseMatrix& V,
                                 const Mesh& mesh, PodMethod method = PodMethod::Randomized, std::uint64_t seed = 0);

/// Evaluates the hyper-reduced operators by assembling only on the reduced mesh.
class HyperReducer {
 public:
  HyperReducer(const Assembler& assembler, const DenseMatrix& V, const DeimOperator& op);

  Eigen::Index dimension() const { return V_active_.cols(); }
  const DeimOperator& op() const { return op_; }

  /// P^T R (m values) and optionally P^T J V (m x N).
  void sample(const RomState& s, const StepContext& ctx, Vector* PR, DenseMatrix* PJV) const;

  Vector residual(const RomState& s, const StepContext& ctx) const;
  DenseMatrix jacobian(const RomState& s, const StepContext& ctx) const;

 private:
  const Assembler& asm_;
  const DeimOperator& op_;
  std::vector<std::int32_t> active_;     // global dofs read by reduced-mesh elements
  DenseMatrix V_active_;                 // V rows at active_, Dirichlet rows zero
  std::vector<std::int32_t> magic_slot_;  // global dof -> magic index or -1 (only active dofs stored)
  std::vector<std::int32_t> local_of_;   // global dof -> position in active_ or -1
};

Vector hyper_residual(const HyperReducer& h, const RomState& s, const StepContext& ctx);
DenseMatrix hyper_jacobian(const HyperReducer& h, const RomState& s, const StepContext& ctx);

RomTrajectory run_deim_rom(const HyperReducer& h, const ProblemSetup& setup, const TimeGrid& grid,
                           const NewtonSettings& settings);

}  // namespace hyrom
