#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "hyrom/config.hpp"
#include "hyrom/deim.hpp"
#include "hyrom/online.hpp"

namespace hyrom {

struct ErrorMetrics {
  double eps_abs = 0.0;
  double eps_rel = 0.0;
  std::vector<double> abs_series;
  std::vector<double> rel_series;  // NaN where the reference state is zero
  int skipped_steps = 0;
};

/// Time-averaged Euclidean errors; with a mass matrix the norms are sqrt(v^T M v).
/// Steps with a zero reference state are left out of the relative mean.
ErrorMetrics error_metrics(const std::vector<Vector>& fom, const std::vector<Vector>& reduced,
                           const SparseMatrix* mass = nullptr);

using Logger = std::function<void(const std::string&)>;

struct OfflineArtifacts {
  ReducedBasis basis;
  std::vector<double> eps_deim;
  std::vector<DeimOperator> deim;
  SurrogatePair pair;
  TrainHistory rho_history;
  TrainHistory iota_history;
  std::map<std::string, double> stage_seconds;
};

/// FOM sweep over n_s LHS points, collecting snapshots per the configured mode.
SnapshotMatrix offline_fom_sweep(const ExperimentConfig& cfg, const Assembler& assembler, const Logger& log = {});
/// ROM sweep over n_s' LHS points collecting reduced operators and full residuals.
OperatorSnapshotSet offline_collect(const ExperimentConfig& cfg, const Assembler& assembler, const ReducedBasis& basis,
                                    const Logger& log = {});

/// Runs every offline stage and, when out_dir is non-empty, writes the artifacts plus a manifest.
OfflineArtifacts run_offline(const ExperimentConfig& cfg, const std::filesystem::path& out_dir = {},
                             const Logger& log = {});
/// Reads artifacts written by run_offline.
OfflineArtifacts load_offline(const std::filesystem::path& dir);

struct MethodRun {
  std::string method;
  int param_id = 0;
  bool ok = true;
  std::string message;
  double eps_abs = 0.0;
  double eps_rel = 0.0;
  double wall_seconds = 0.0;
  PhaseTimes phases;
  std::uint64_t assembly_calls = 0;
};

struct MethodSummary {
  std::string method;
  int runs = 0;
  int failures = 0;
  double mean_eps_abs = 0.0;
  double mean_eps_rel = 0.0;
  double mean_wall = 0.0;
  double speedup = 0.0;  // mean FOM time / mean method time
};

struct ErrorReport {
  std::vector<std::vector<double>> test_params;
  std::vector<MethodRun> runs;
  std::vector<MethodSummary> summary() const;
  const MethodSummary* find(const std::string& method) const;

 private:
  mutable std::vector<MethodSummary> cache_;
};

ErrorReport run_online_benchmark(const ExperimentConfig& cfg, const OfflineArtifacts& art,
                                 const std::vector<std::vector<double>>& test_params, const Logger& log = {});

void write_report_csv(std::ostream& os, const ErrorReport& r);
ErrorReport read_report_csv(std::istream& is);
void write_report_summary(std::ostream& os, const ErrorReport& r);

std::string deim_method_name(double eps);

}  // namespace hyrom
