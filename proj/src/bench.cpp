#include "hyrom/bench.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "hyrom/errors.hpp"
#include "hyrom/io.hpp"

namespace hyrom {

namespace fs = std::filesystem;

ErrorMetrics error_metrics(const std::vector<Vector>& fom, const std::vector<Vector>& reduced,
                           const SparseMatrix* mass) {
  if (fom.size() != reduced.size()) throw InvalidArgument("error_metrics: trajectories have different lengths");
  if (fom.empty()) throw InvalidArgument("error_metrics: empty trajectory");
  auto norm = [&](const Vector& v) { return mass ? std::sqrt(std::max(0.0, v.dot(*mass * v))) : v.norm(); };
  ErrorMetrics m;
  double rel_sum = 0.0;
  for (std::size_t n = 0; n < fom.size(); ++n) {
    if (fom[n].size() != reduced[n].size()) throw InvalidArgument("error_metrics: state sizes differ");
    const double e = norm(fom[n] - reduced[n]);
    const double ref = norm(fom[n]);
    m.abs_series.push_back(e);
    m.eps_abs += e;
    if (ref == 0.0) {
      ++m.skipped_steps;
      m.rel_series.push_back(std::numeric_limits<double>::quiet_NaN());
    } else {
      m.rel_series.push_back(e / ref);
      rel_sum += e / ref;
    }
  }
  m.eps_abs /= static_cast<double>(fom.size());
  const auto counted = static_cast<double>(fom.size()) - m.skipped_steps;
  m.eps_rel = counted > 0 ? rel_sum / counted : 0.0;
  return m;
}

namespace {

void say(const Logger& log, const std::string& s) {
  if (log) log(s);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::string deim_method_name(double eps) {
  std::ostringstream os;
  os << "DEIM(" << eps << ")";
  return os.str();
}

SnapshotMatrix offline_fom_sweep(const ExperimentConfig& cfg, const Assembler& assembler, const Logger& log) {
  SnapshotMatrix S;
  const auto grid = cfg.grid();
  const auto pts = lhs_sample(cfg.params, cfg.ns, cfg.seed);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    try {
      const auto tr = run_fom(assembler, cfg.setup(pts[i]), grid, cfg.newton, {cfg.snapshot_mode, pts[i]}, &S);
      say(log, "fom " + std::to_string(i + 1) + "/" + std::to_string(pts.size()) + " " +
                   std::to_string(tr.wall_seconds) + " s");
    } catch (const Error& e) {
      throw Error("offline fom sweep, sample " + std::to_string(i) + ": " + e.what());
    }
  }
  return S;
}

OperatorSnapshotSet offline_collect(const ExperimentConfig& cfg, const Assembler& assembler,
                                    const ReducedBasis& basis, const Logger& log) {
  OperatorSnapshotSet data;
  const GalerkinProjector proj(assembler, basis.V);
  const auto grid = cfg.grid();
  const auto pts = lhs_sample(cfg.params, cfg.ns_prime, cfg.seed + 1);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    try {
      run_rom(proj, cfg.setup(pts[i]), grid, cfg.newton, {true, true, pts[i]}, &data);
    } catch (const Error& e) {
      throw Error("offline rom collection, sample " + std::to_string(i) + ": " + e.what());
    }
    if ((i + 1) % 10 == 0 || i + 1 == pts.size())
      say(log, "rom-collect " + std::to_string(i + 1) + "/" + std::to_string(pts.size()));
  }
  return data;
}

OfflineArtifacts run_offline(const ExperimentConfig& cfg, const fs::path& out_dir, const Logger& log) {
  cfg.validate();
  OfflineArtifacts art;
  const bool write = !out_dir.empty();
  if (write) fs::create_directories(out_dir);
  std::vector<std::string> files;
  const Mesh mesh = cfg.mesh();
  const Assembler assembler(mesh);

  auto t0 = std::chrono::steady_clock::now();
  const SnapshotMatrix S = offline_fom_sweep(cfg, assembler, log);
  art.stage_seconds["fom_sweep"] = seconds_since(t0);
  t0 = std::chrono::steady_clock::now();
  try {
    art.basis = pod(S, cfg.eps_pod, cfg.pod_method, cfg.seed);
  } catch (const Error& e) {
    throw Error(std::string("offline pod: ") + e.what());
  }
  art.stage_seconds["pod"] = seconds_since(t0);
  say(log, "pod: N = " + std::to_string(art.basis.dimension()) + " from " + std::to_string(S.cols()) + " snapshots");
  if (write) {
    io::write_snapshots(out_dir / "snapshots.hyrs", S);
    io::write_basis(out_dir / "basis.hyrb", art.basis);
    files.insert(files.end(), {"snapshots.hyrs", "basis.hyrb"});
  }

  t0 = std::chrono::steady_clock::now();
  const OperatorSnapshotSet data = offline_collect(cfg, assembler, art.basis, log);
  art.stage_seconds["rom_collect"] = seconds_since(t0);
  if (write) {
    io::write_snapshots(out_dir / "resN.hyrs", data.residuals);
    io::write_snapshots(out_dir / "jacN.hyrs", data.jacobians);
    io::write_snapshots(out_dir / "inputs.hyrs", data.inputs);
    io::write_snapshots(out_dir / "resfull.hyrs", data.full_residuals);
    files.insert(files.end(), {"resN.hyrs", "jacN.hyrs", "inputs.hyrs", "resfull.hyrs"});
  }

  t0 = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < cfg.eps_deim.size(); ++i) {
    try {
      art.deim.push_back(
          build_deim_operator(data.full_residuals, cfg.eps_deim[i], art.basis.V, mesh, cfg.pod_method, cfg.seed));
    } catch (const Error& e) {
      throw Error(std::string("offline deim build: ") + e.what());
    }
    art.eps_deim.push_back(cfg.eps_deim[i]);
    const auto& op = art.deim.back();
    say(log, "deim eps " + std::to_string(cfg.eps_deim[i]) + ": m = " + std::to_string(op.size()) +
                 ", reduced mesh " + std::to_string(op.reduced_mesh.element_subset.size()) + "/" +
                 std::to_string(mesh.element_count()) + " elements, cond " + std::to_string(op.condition_estimate));
    if (write) {
      const std::string f = "deim_" + std::to_string(i) + ".hyrb";
      io::write_deim(out_dir / f, op);
      files.push_back(f);
    }
  }
  art.stage_seconds["deim_build"] = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  const auto specs = cfg.network_specs(static_cast<int>(art.basis.dimension()));
  say(log, "rho net: " + specs.first.descriptor());
  say(log, "iota net: " + specs.second.descriptor());
  PairTrainResult tr;
  try {
    tr = train_pair(data, specs.first, specs.second, cfg.train);
  } catch (const Error& e) {
    throw Error(std::string("offline training: ") + e.what());
  }
  art.pair = std::move(tr.pair);
  art.rho_history = std::move(tr.rho_history);
  art.iota_history = std::move(tr.iota_history);
  art.stage_seconds["train"] = seconds_since(t0);
  for (const auto* h : {&art.rho_history, &art.iota_history})
    say(log, "trained " + std::to_string(h->epochs.size() - 1) + " epochs, best " + std::to_string(h->best_epoch) +
                 " val loss " + std::to_string(h->epochs[static_cast<std::size_t>(h->best_epoch)].val_loss));

  if (write) {
    io::write_pair(out_dir, art.pair);
    {
      std::ofstream h1(out_dir / "history_rho.csv"), h2(out_dir / "history_iota.csv");
      write_history_csv(h1, art.rho_history);
      write_history_csv(h2, art.iota_history);
    }
    {
      std::ofstream os(out_dir / "offline_timing.csv");
      os << "phase,elapsed_seconds\n";
      for (const auto& [k, v] : art.stage_seconds) os << k << ',' << v << '\n';
    }
    {
      std::ofstream os(out_dir / "deim_eps.txt");
      os.precision(17);
      for (double e : art.eps_deim) os << e << '\n';
    }
    files.insert(files.end(), {"rho.hyrw", "iota.hyrw", "history_rho.csv", "history_iota.csv", "offline_timing.csv",
                               "deim_eps.txt"});
    io::write_manifest(out_dir, files);
  }
  return art;
}

OfflineArtifacts load_offline(const fs::path& dir) {
  const auto problems = io::verify_manifest(dir);
  if (!problems.empty()) {
    std::string msg = "artifact manifest check failed in " + dir.string() + ":";
    for (const auto& p : problems) msg += " [" + p + "]";
    throw FormatError(msg);
  }
  OfflineArtifacts art;
  art.basis = io::read_basis(dir / "basis.hyrb");
  std::ifstream is(dir / "deim_eps.txt");
  double e;
  for (std::size_t i = 0; is >> e; ++i) {
    art.eps_deim.push_back(e);
    art.deim.push_back(io::read_deim(dir / ("deim_" + std::to_string(i) + ".hyrb")));
  }
  art.pair = io::read_pair(dir);
  return art;
}

std::vector<MethodSummary> ErrorReport::summary() const {
  std::vector<MethodSummary> out;
  for (const auto& r : runs) {
    auto it = std::find_if(out.begin(), out.end(), [&](const MethodSummary& s) { return s.method == r.method; });
    if (it == out.end()) {
      out.push_back({r.method});
      it = out.end() - 1;
    }
    ++it->runs;
    if (!r.ok) {
      ++it->failures;
      continue;
    }
    it->mean_eps_abs += r.eps_abs;
    it->mean_eps_rel += r.eps_rel;
    it->mean_wall += r.wall_seconds;
  }
  for (auto& s : out) {
    const int n = s.runs - s.failures;
    if (n > 0) {
      s.mean_eps_abs /= n;
      s.mean_eps_rel /= n;
      s.mean_wall /= n;
    }
  }
  const auto fom = std::find_if(out.begin(), out.end(), [](const MethodSummary& s) { return s.method == "FOM"; });
  if (fom != out.end())
    for (auto& s : out) s.speedup = s.mean_wall > 0.0 ? fom->mean_wall / s.mean_wall : 0.0;
  return out;
}

const MethodSummary* ErrorReport::find(const std::string& method) const {
  cache_ = summary();
  for (const auto& s : cache_)
    if (s.method == method) return &s;
  return nullptr;
}

ErrorReport run_online_benchmark(const ExperimentConfig& cfg, const OfflineArtifacts& art,
                                 const std::vector<std::vector<double>>& test_params, const Logger& log) {
  ErrorReport rep;
  rep.test_params = test_params;
  const Mesh mesh = cfg.mesh();
  const Assembler assembler(mesh);
  const auto grid = cfg.grid();
  const DenseMatrix& V = art.basis.V;
  const GalerkinProjector proj(assembler, V);
  std::vector<HyperReducer> hyper;
  hyper.reserve(art.deim.size());
  for (const auto& op : art.deim) hyper.emplace_back(assembler, V, op);

  auto record = [&](const std::string& method, int id, const std::vector<Vector>* ref, auto&& body) {
    MethodRun r;
    r.method = method;
    r.param_id = id;
    try {
      const auto out = body();
      r.wall_seconds = out.wall;
      r.phases = out.phases;
      r.assembly_calls = out.assembly;
      if (ref) {
        const ErrorMetrics m = error_metrics(*ref, out.states);
        r.eps_abs = m.eps_abs;
        r.eps_rel = m.eps_rel;
      }
    } catch (const Error& e) {
      r.ok = false;
      r.message = e.what();
    }
    say(log, method + " param " + std::to_string(id) + (r.ok ? " eps_rel " + std::to_string(r.eps_rel) : " FAILED: " + r.message) +
                 " " + std::to_string(r.wall_seconds) + " s");
    rep.runs.push_back(std::move(r));
  };
  struct Out {
    std::vector<Vector> states;
    double wall;
    PhaseTimes phases;
    std::uint64_t assembly;
  };

  if (!test_params.empty()) {
    // warm-up, not recorded
    const auto s = cfg.setup(test_params.front());
    try {
      run_rom(proj, s, grid, cfg.newton);
      for (const auto& h : hyper) run_deim_rom(h, s, grid, cfg.newton);
      run_hyromnet(art.pair, V, test_params.front(), grid, cfg.online);
    } catch (const Error&) {
    }
  }

  for (std::size_t i = 0; i < test_params.size(); ++i) {
    const auto& mu = test_params[i];
    const int id = static_cast<int>(i);
    const auto setup = cfg.setup(mu);
    Trajectory fom;
    bool fom_ok = true;
    record("FOM", id, nullptr, [&] {
      try {
        fom = run_fom(assembler, setup, grid, cfg.newton, {SnapshotMode::None, mu});
      } catch (...) {
        fom_ok = false;
        throw;
      }
      return Out{{}, fom.wall_seconds, fom.phases, 0};
    });
    const std::vector<Vector>* ref = fom_ok ? &fom.states : nullptr;
    record("ROM", id, ref, [&] {
      const auto t = run_rom(proj, setup, grid, cfg.newton);
      return Out{t.lifted(V), t.wall_seconds, t.phases, 0};
    });
    for (std::size_t d = 0; d < hyper.size(); ++d)
      record(deim_method_name(art.eps_deim[d]), id, ref, [&] {
        const auto t = run_deim_rom(hyper[d], setup, grid, cfg.newton);
        return Out{t.lifted(V), t.wall_seconds, t.phases, 0};
      });
    record("Deep-HyROMnet", id, ref, [&] {
      const auto t = run_hyromnet(art.pair, V, mu, grid, cfg.online);
      if (t.capped_steps > 0)
        say(log, "Deep-HyROMnet param " + std::to_string(id) + ": " + std::to_string(t.capped_steps) +
                     " steps stopped at the iteration cap");
      return Out{t.traj.lifted(V), t.traj.wall_seconds, t.traj.phases, t.assembly_calls};
    });
  }
  return rep;
}

void write_report_csv(std::ostream& os, const ErrorReport& r) {
  os << "method,param_id,eps_abs,eps_rel,wall_seconds\n";
  os << std::setprecision(10);
  for (const auto& run : r.runs) {
    if (!run.ok) {
      os << run.method << ',' << run.param_id << ",nan,nan," << run.wall_seconds << '\n';
      continue;
    }
    os << run.method << ',' << run.param_id << ',' << run.eps_abs << ',' << run.eps_rel << ',' << run.wall_seconds
       << '\n';
  }
}

ErrorReport read_report_csv(std::istream& is) {
  ErrorReport r;
  std::string line;
  if (!std::getline(is, line) || line != "method,param_id,eps_abs,eps_rel,wall_seconds")
    throw FormatError("report: unexpected header");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string f[5];
    for (int i = 0; i < 5; ++i)
      if (!std::getline(ls, f[i], ',')) throw FormatError("report: malformed row '" + line + "'");
    MethodRun run;
    run.method = f[0];
    run.param_id = std::stoi(f[1]);
    run.ok = f[2] != "nan";
    if (run.ok) {
      run.eps_abs = std::stod(f[2]);
      run.eps_rel = std::stod(f[3]);
    }
    run.wall_seconds = std::stod(f[4]);
    r.runs.push_back(run);
  }
  return r;
}

void write_report_summary(std::ostream& os, const ErrorReport& r) {
  const auto rows = r.summary();
  os << std::left << std::setw(16) << "method" << std::right << std::setw(6) << "runs" << std::setw(6) << "fail"
     << std::setw(14) << "mean eps_abs" << std::setw(14) << "mean eps_rel" << std::setw(14) << "avg time [s]"
     << std::setw(11) << "speed-up" << '\n';
  for (const auto& s : rows) {
    os << std::left << std::setw(16) << s.method << std::right << std::setw(6) << s.runs << std::setw(6) << s.failures
       << std::setw(14) << std::setprecision(3) << std::scientific << s.mean_eps_abs << std::setw(14) << s.mean_eps_rel
       << std::setw(14) << std::defaultfloat << std::setprecision(4) << s.mean_wall << std::setw(11)
       << std::setprecision(4) << s.speedup << '\n';
  }
}

}  // namespace hyrom
