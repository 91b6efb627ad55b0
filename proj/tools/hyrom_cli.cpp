// hyrom command-line driver: offline stages, online solves, benchmarks.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "hyrom/bench.hpp"
#include "hyrom/errors.hpp"
#include "hyrom/io.hpp"

namespace fs = std::filesystem;
using namespace hyrom;

namespace {

struct Globals {
  std::string config;
  std::string out = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 1;
  bool quiet = false;
};

ExperimentConfig load_config(const Globals& g) {
  ExperimentConfig cfg = g.config.empty() ? ExperimentConfig{} : ExperimentConfig::load(g.config);
  if (g.seed_set) {
    cfg.seed = g.seed;
    cfg.train.seed = g.seed;
  }
  return cfg;
}

Logger make_logger(const Globals& g) {
  if (g.quiet) return {};
  return [](const std::string& s) { std::cerr << s << '\n'; };
}

std::vector<double> mu_or_center(const ExperimentConfig& cfg, const std::string& text) {
  return text.empty() ? cfg.center() : parse_mu(text);
}

SnapshotMatrix trajectory_matrix(const std::vector<Vector>& states, const std::vector<int>& iters,
                                 const std::vector<double>& mu) {
  SnapshotMatrix s;
  for (std::size_t n = 0; n < states.size(); ++n)
    s.append(states[n], {mu, static_cast<std::uint32_t>(n + 1), static_cast<std::uint32_t>(iters[n])});
  return s;
}

void write_timing(const fs::path& p, const PhaseTimes& t) {
  std::ofstream os(p);
  write_timing_csv(os, t);
}

void refresh_manifest(const fs::path& out) {
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(out)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && name != "manifest.txt") files.push_back(name);
  }
  std::sort(files.begin(), files.end());
  io::write_manifest(out, files);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep-HyROMnet reduced-order modelling for nonlinear solid mechanics"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "experiment config (key = value)")->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "output directory");
  app.add_option_function<std::uint64_t>(
      "--seed", [&](std::uint64_t s) { g.seed = s, g.seed_set = true; }, "seed override");
  app.add_option("--threads", g.threads, "worker threads (runs are serial; accepted for compatibility)")
      ->check(CLI::PositiveNumber);
  app.add_flag("--quiet", g.quiet, "suppress progress output");

  std::string mu_text;
  bool reduced_only = false;

  auto* mesh_cmd = app.add_subcommand("mesh", "write the box mesh as text");
  auto* fom_cmd = app.add_subcommand("fom", "run one full-order trajectory");
  fom_cmd->add_option("--mu", mu_text, "parameter vector, comma separated (default: box centre)");
  auto* pod_cmd = app.add_subcommand("pod", "FOM sweep and POD basis");
  auto* collect_cmd = app.add_subcommand("rom-collect", "ROM sweep collecting reduced operators");
  auto* deim_cmd = app.add_subcommand("deim-build", "DEIM operators from collected residuals");
  auto* train_cmd = app.add_subcommand("train", "train the residual and Jacobian networks");
  auto* hyrom_cmd = app.add_subcommand("hyrom", "online Deep-HyROMnet solve");
  hyrom_cmd->add_option("--mu", mu_text, "parameter vector, comma separated (default: box centre)");
  hyrom_cmd->add_flag("--reduced", reduced_only, "store reduced coordinates instead of lifted states");
  auto* offline_cmd = app.add_subcommand("offline", "all offline stages in one go");
  auto* bench_cmd = app.add_subcommand("bench", "offline stages (unless present) and the online benchmark");
  auto* report_cmd = app.add_subcommand("report", "print the summary of a benchmark report");

  CLI11_PARSE(app, argc, argv);

  try {
    const fs::path out = g.out;
    fs::create_directories(out);
    const ExperimentConfig cfg = load_config(g);
    const Logger log = make_logger(g);

    if (*mesh_cmd) {
      const Mesh m = cfg.mesh();
      std::ofstream os(out / "mesh.txt");
      write_mesh_text(m, os);
      std::cout << "mesh: " << m.element_count() << " elements, " << m.dof_count() << " dofs -> "
                << (out / "mesh.txt").string() << '\n';
    } else if (*fom_cmd) {
      const auto mu = mu_or_center(cfg, mu_text);
      const Mesh m = cfg.mesh();
      const Assembler a(m);
      const auto tr = run_fom(a, cfg.setup(mu), cfg.grid(), cfg.newton, {SnapshotMode::None, mu});
      io::write_snapshots(out / "fom_trajectory.hyrs", trajectory_matrix(tr.states, tr.iterations, mu));
      write_timing(out / "fom_timing.csv", tr.phases);
      std::cout << "fom: " << tr.states.size() << " steps in " << tr.wall_seconds << " s\n";
    } else if (*pod_cmd) {
      const Mesh m = cfg.mesh();
      const Assembler a(m);
      const SnapshotMatrix S = offline_fom_sweep(cfg, a, log);
      const ReducedBasis b = pod(S, cfg.eps_pod, cfg.pod_method, cfg.seed);
      io::write_snapshots(out / "snapshots.hyrs", S);
      io::write_basis(out / "basis.hyrb", b);
      std::cout << "pod: N = " << b.dimension() << " from " << S.cols() << " snapshots\n";
    } else if (*collect_cmd) {
      const Mesh m = cfg.mesh();
      const Assembler a(m);
      const ReducedBasis b = io::read_basis(out / "basis.hyrb");
      const OperatorSnapshotSet d = offline_collect(cfg, a, b, log);
      io::write_snapshots(out / "resN.hyrs", d.residuals);
      io::write_snapshots(out / "jacN.hyrs", d.jacobians);
      io::write_snapshots(out / "inputs.hyrs", d.inputs);
      io::write_snapshots(out / "resfull.hyrs", d.full_residuals);
      std::cout << "rom-collect: " << d.count() << " operator snapshots\n";
    } else if (*deim_cmd) {
      const Mesh m = cfg.mesh();
      const ReducedBasis b = io::read_basis(out / "basis.hyrb");
      const SnapshotMatrix res = io::read_snapshots(out / "resfull.hyrs");
      std::ofstream eps(out / "deim_eps.txt");
      eps.precision(17);
      for (std::size_t i = 0; i < cfg.eps_deim.size(); ++i) {
        const DeimOperator op = build_deim_operator(res, cfg.eps_deim[i], b.V, m, cfg.pod_method, cfg.seed);
        io::write_deim(out / ("deim_" + std::to_string(i) + ".hyrb"), op);
        eps << cfg.eps_deim[i] << '\n';
        std::cout << "deim eps " << cfg.eps_deim[i] << ": m = " << op.size() << ", reduced mesh "
                  << op.reduced_mesh.element_subset.size() << "/" << m.element_count() << " elements, cond "
                  << op.condition_estimate << '\n';
      }
    } else if (*train_cmd) {
      const ReducedBasis b = io::read_basis(out / "basis.hyrb");
      OperatorSnapshotSet d;
      d.residuals = io::read_snapshots(out / "resN.hyrs");
      d.jacobians = io::read_snapshots(out / "jacN.hyrs");
      d.inputs = io::read_snapshots(out / "inputs.hyrs");
      const auto specs = cfg.network_specs(static_cast<int>(b.dimension()));
      if (log) {
        log("rho net: " + specs.first.descriptor());
        log("iota net: " + specs.second.descriptor());
      }
      const PairTrainResult r = train_pair(d, specs.first, specs.second, cfg.train);
      io::write_pair(out, r.pair);
      std::ofstream h1(out / "history_rho.csv"), h2(out / "history_iota.csv");
      write_history_csv(h1, r.rho_history);
      write_history_csv(h2, r.iota_history);
      std::cout << "train: rho " << r.rho_history.epochs.size() - 1 << " epochs (best " << r.rho_history.best_epoch
                << "), iota " << r.iota_history.epochs.size() - 1 << " epochs (best " << r.iota_history.best_epoch
                << ")\n";
      h1.close();
      h2.close();
      refresh_manifest(out);
    } else if (*hyrom_cmd) {
      const auto mu = mu_or_center(cfg, mu_text);
      const ReducedBasis b = io::read_basis(out / "basis.hyrb");
      const SurrogatePair pair = io::read_pair(out);
      const HyromnetRun run = run_hyromnet(pair, b.V, mu, cfg.grid(), cfg.online);
      const auto states = reduced_only ? run.traj.states : run.traj.lifted(b.V);
      io::write_snapshots(out / "hyrom_trajectory.hyrs", trajectory_matrix(states, run.traj.iterations, mu));
      write_timing(out / "hyrom_timing.csv", run.traj.phases);
      std::cout << "hyrom: " << run.traj.states.size() << " steps in " << run.traj.wall_seconds
                << " s, full-order assemblies " << run.assembly_calls << ", capped steps " << run.capped_steps
                << ", extrapolated network calls " << run.extrapolated_evals << '\n';
    } else if (*offline_cmd) {
      run_offline(cfg, out, log);
      std::cout << "offline artifacts written to " << out.string() << '\n';
    } else if (*bench_cmd) {
      OfflineArtifacts art = fs::exists(out / "manifest.txt") && fs::exists(out / "deim_eps.txt")
                                 ? load_offline(out)
                                 : run_offline(cfg, out, log);
      const auto tests = uniform_sample(cfg.params, cfg.n_test, cfg.test_seed);
      const ErrorReport rep = run_online_benchmark(cfg, art, tests, log);
      {
        std::ofstream os(out / "report.csv");
        write_report_csv(os, rep);
        std::ofstream ts(out / "report.txt");
        write_report_summary(ts, rep);
      }
      write_report_summary(std::cout, rep);
    } else if (*report_cmd) {
      std::ifstream is(out / "report.csv");
      if (!is) throw Error("no report.csv in " + out.string());
      write_report_summary(std::cout, read_report_csv(is));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
