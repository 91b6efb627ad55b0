#pragma once

#include <Eigen/SparseCore>
#include <atomic>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hyrom/linalg.hpp"
#include "hyrom/materials.hpp"
#include "hyrom/mesh.hpp"
#include "hyrom/snapshots.hpp"
#include "hyrom/timing.hpp"

namespace hyrom {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct TimeGrid {
  double T = 0.25;
  double dt = 5e-3;
  int Nt = 50;

  /// Nt = round(T / dt); rejects dt <= 0 or T/dt not (close to) an integer.
  static TimeGrid from_final_time(double T, double dt);
  double time(int n) const { return n * dt; }
};

enum class LoadKind { Linear, Hat, Step };

struct LoadProgram {
  LoadKind kind = LoadKind::Linear;
  double amplitude = 0.0;  // Pa

  /// g(t) for final time T: linear p t/T; hat rising to p at T/2 then back to 0; step p on (0, T/3].
  double value(double t, double T) const;
};

LoadKind parse_load_kind(const std::string& s);
std::string to_string(LoadKind k);

struct NewtonSettings {
  double rel_tol = 1e-6;
  double abs_tol = 1e-10;
  int max_iters = 25;
  bool backtracking = true;
  /// Halve the step when the residual norm grows by more than this factor (or an element inverts).
  double growth_limit = 100.0;
};

/// Physical quantities for one parameter instance at one time level.
struct StepContext {
  MaterialModel material;
  double pressure = 0.0;  // g(t^n)
  double rho0 = 0.0;
  double dt = 1.0;
  double robin_alpha = 0.0;
  double robin_beta = 0.0;
};

/// Displacement histories; u_prev and u_prev2 are u^{n-1} and u^{n-2}.
struct FomState {
  Vector u_now;
  Vector u_prev;
  Vector u_prev2;
  int time_index = 0;
};

/// Global count of element-level assembly passes (full or reduced mesh).
std::uint64_t assembly_counter();

/// Assemblies made while an AuditScope is alive on this thread go to a separate counter.
std::uint64_t audit_counter();
class AuditScope {
 public:
  AuditScope();
  ~AuditScope();
  AuditScope(const AuditScope&) = delete;
  AuditScope& operator=(const AuditScope&) = delete;
};

/// Precomputed geometry and sparsity for residual/Jacobian assembly on one mesh.
class Assembler {
 public:
  explicit Assembler(const Mesh& mesh);

  const Mesh& mesh() const { return mesh_; }
  Eigen::Index dofs() const { return static_cast<Eigen::Index>(mesh_.dof_count()); }
  const std::vector<std::int32_t>& dirichlet_dofs() const { return dirichlet_; }
  const std::vector<char>& dirichlet_mask() const { return is_dirichlet_; }

  Vector residual(const FomState& s, const StepContext& ctx) const;
  /// Jacobian with Dirichlet rows/columns replaced by identity.
  const SparseMatrix& jacobian(const FomState& s, const StepContext& ctx) const;

  /// Element residual (24) and optionally stiffness (24x24, column-major) of
  /// element e including its facet terms; global vectors are read at the element dofs.
  void element_contribution(std::size_t e, const Vector& u, const Vector& u_prev, const Vector& u_prev2,
                            const StepContext& ctx, double* r_e, double* k_e) const;

  std::span<const std::int32_t> element_dofs(std::size_t e) const {
    return {elem_dofs_.data() + 24 * e, 24};
  }

  /// Consistent mass matrix (unit density), for diagnostics and mass-weighted norms.
  SparseMatrix mass_matrix() const;

  /// Empty matrix with the assembly pattern, for symbolic factorization reuse.
  const SparseMatrix& pattern() const { return matrix_; }

  void note_assembly() const;

 private:
  struct QuadPoint {
    std::array<std::array<double, 3>, 8> dN;  // physical gradients
    double weight;                            // w * det J
  };
  struct FacePoint {
    std::array<double, 8> N;
    std::array<std::array<double, 3>, 8> dN;
    std::array<double, 3> normal_area;  // N dA0 (outward)
  };
  struct ElementFacets {
    std::vector<std::array<FacePoint, 4>> pressure;
    std::vector<std::array<FacePoint, 4>> robin;
  };

  const Mesh& mesh_;
  std::vector<std::array<QuadPoint, 8>> quad_;
  std::vector<std::array<double, 64>> elem_mass_;
  std::vector<ElementFacets> facets_;
  std::vector<std::int32_t> elem_dofs_;
  std::vector<std::int32_t> dirichlet_;
  std::vector<char> is_dirichlet_;

  mutable SparseMatrix matrix_;
  std::vector<std::int32_t> scatter_;      // 576 slots per element
  std::vector<std::int32_t> constrained_slots_;
  std::vector<std::int32_t> diagonal_slots_;
};

class NewtonSystem {
 public:
  virtual ~NewtonSystem() = default;
  virtual Vector residual(const Vector& u) = 0;
  /// Returns the solution d of J(u) d = rhs.
  virtual Vector solve_jacobian(const Vector& u, const Vector& rhs) = 0;
};

struct NewtonResult {
  Vector solution;
  int iterations = 0;
  std::vector<double> residual_history;
};

/// Called for every iterate k >= 0 whose residual has been evaluated, including the converged one.
using IterateObserver = std::function<void(int k, const Vector& u, const Vector& r)>;

NewtonResult newton_solve(const NewtonSettings& settings, NewtonSystem& system, const Vector& initial_guess,
                          const IterateObserver& observer = {});

struct Trajectory {
  std::vector<Vector> states;  // index n-1 holds u^n, n = 1..Nt
  std::vector<int> iterations;
  double wall_seconds = 0.0;
  PhaseTimes phases;
};

enum class SnapshotMode { None, Iterates, Converged };

/// Maps a parameter vector to the physics of one run.
struct ProblemSetup {
  MaterialModel material;
  LoadProgram load;
  double active_amplitude = 0.0;  // Ta(t) = active_amplitude * t / T (Guccione only)
  double rho0 = 1e3;
  double robin_alpha = 0.0;
  double robin_beta = 0.0;

  StepContext context(const TimeGrid& grid, int n) const;
};

struct FomRunOptions {
  SnapshotMode snapshots = SnapshotMode::Iterates;
  std::vector<double> mu;  // stored in snapshot metadata
};

/// Implicit time stepping from rest, one Newton solve per step.
Trajectory run_fom(const Assembler& assembler, const ProblemSetup& setup, const TimeGrid& grid,
                   const NewtonSettings& settings, const FomRunOptions& options = {},
                   SnapshotMatrix* snapshots = nullptr);

}  // namespace hyrom
