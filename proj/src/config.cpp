#include "hyrom/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "hyrom/errors.hpp"

namespace hyrom {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

double to_double(const std::string& s, bool& ok) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    ok = used == s.size();
    return v;
  } catch (const std::exception&) {
    ok = false;
    return 0.0;
  }
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& text, const std::string& origin) {
  KeyValueConfig c;
  c.origin_ = origin;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidArgument(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw InvalidArgument(origin + ":" + std::to_string(lineno) + ": empty key");
    c.values_[key] = trim(line.substr(eq + 1));
  }
  return c;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InvalidArgument("cannot read config " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse(ss.str(), path.string());
}

const std::string* KeyValueConfig::find(const std::string& key) const {
  read_[key] = true;
  const auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

void KeyValueConfig::bad(const std::string& key, const std::string& why) const {
  throw InvalidArgument(origin_ + ": key '" + key + "': " + why);
}

std::string KeyValueConfig::str(const std::string& key, const std::string& fallback) const {
  const auto* v = find(key);
  return v ? *v : fallback;
}

double KeyValueConfig::num(const std::string& key, double fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  bool ok = false;
  const double x = to_double(*v, ok);
  if (!ok) bad(key, "not a number: '" + *v + "'");
  return x;
}

long KeyValueConfig::integer(const std::string& key, long fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    const long x = std::stol(*v, &used);
    if (used != v->size()) bad(key, "not an integer: '" + *v + "'");
    return x;
  } catch (const std::logic_error&) {
    bad(key, "not an integer: '" + *v + "'");
  }
}

bool KeyValueConfig::flag(const std::string& key, bool fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
  if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
  bad(key, "not a boolean: '" + *v + "'");
}

std::vector<double> KeyValueConfig::nums(const std::string& key, const std::vector<double>& fallback) const {
  const auto* v = find(key);
  if (!v) return fallback;
  std::vector<double> out;
  for (const auto& w : split_list(*v)) {
    bool ok = false;
    out.push_back(to_double(w, ok));
    if (!ok) bad(key, "not a number: '" + w + "'");
  }
  return out;
}

std::vector<std::string> KeyValueConfig::words(const std::string& key, const std::vector<std::string>& fallback) const {
  const auto* v = find(key);
  return v ? split_list(*v) : fallback;
}

std::vector<std::string> KeyValueConfig::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_)
    if (!read_.count(k)) out.push_back(k);
  return out;
}

std::vector<double> parse_mu(const std::string& text) {
  std::vector<double> out;
  for (const auto& w : split_list(text)) {
    bool ok = false;
    out.push_back(to_double(w, ok));
    if (!ok) throw InvalidArgument("parameter vector: not a number: '" + w + "'");
  }
  return out;
}

ExperimentConfig ExperimentConfig::from(const KeyValueConfig& kv) {
  ExperimentConfig c;
  c.name = kv.str("name", c.name);
  const auto ext = kv.nums("mesh.extent", {c.extent[0], c.extent[1], c.extent[2]});
  const auto div = kv.nums("mesh.divisions", {10, 2, 2});
  if (ext.size() != 3 || div.size() != 3) throw InvalidArgument("mesh.extent and mesh.divisions need 3 values");
  for (int i = 0; i < 3; ++i) {
    c.extent[static_cast<std::size_t>(i)] = ext[static_cast<std::size_t>(i)];
    c.divisions[static_cast<std::size_t>(i)] = static_cast<int>(div[static_cast<std::size_t>(i)]);
  }

  const std::string law = kv.str("material.law", "neohookean");
  if (law == "neohookean") c.law = MaterialLaw::NeoHookean;
  else if (law == "guccione") c.law = MaterialLaw::Guccione;
  else throw InvalidArgument("material.law: unknown law '" + law + "'");
  c.neo.G = kv.num("material.G", c.neo.G);
  c.neo.K = kv.num("material.K", c.neo.K);
  auto& g = c.guccione;
  g.C_scale = kv.num("guccione.C", g.C_scale);
  g.b_f = kv.num("guccione.bf", g.b_f);
  g.b_s = kv.num("guccione.bs", g.b_s);
  g.b_n = kv.num("guccione.bn", g.b_n);
  g.b_fs = kv.num("guccione.bfs", g.b_fs);
  g.b_fn = kv.num("guccione.bfn", g.b_fn);
  g.b_sn = kv.num("guccione.bsn", g.b_sn);
  g.K = kv.num("guccione.K", g.K);
  const auto f = kv.nums("guccione.fiber", {g.fiber_frame.f[0], g.fiber_frame.f[1], g.fiber_frame.f[2]});
  const auto s = kv.nums("guccione.sheet", {g.fiber_frame.s[0], g.fiber_frame.s[1], g.fiber_frame.s[2]});
  if (f.size() != 3 || s.size() != 3) throw InvalidArgument("guccione.fiber and guccione.sheet need 3 values");
  g.fiber_frame = make_fiber_frame({f[0], f[1], f[2]}, {s[0], s[1], s[2]});
  c.active_amplitude = kv.num("guccione.Ta", c.active_amplitude);

  c.load_kind = parse_load_kind(kv.str("load.kind", to_string(c.load_kind)));
  c.load_amplitude = kv.num("load.amplitude", c.load_amplitude);
  c.T = kv.num("time.T", c.T);
  c.dt = kv.num("time.dt", c.dt);

  c.rho0 = kv.flag("fom.quasi_static", false) ? 0.0 : kv.num("fom.rho0", c.rho0);
  c.robin_alpha = kv.num("fom.robin_alpha", c.robin_alpha);
  c.robin_beta = kv.num("fom.robin_beta", c.robin_beta);
  c.newton.rel_tol = kv.num("newton.rel_tol", c.newton.rel_tol);
  c.newton.abs_tol = kv.num("newton.abs_tol", c.newton.abs_tol);
  c.newton.max_iters = static_cast<int>(kv.integer("newton.max_iters", c.newton.max_iters));
  c.newton.backtracking = kv.flag("newton.backtracking", c.newton.backtracking);
  c.newton.growth_limit = kv.num("newton.growth_limit", c.newton.growth_limit);

  c.params.names = kv.words("params.names", c.params.names);
  c.params.low = kv.nums("params.low", c.params.low);
  c.params.high = kv.nums("params.high", c.params.high);

  c.ns = static_cast<int>(kv.integer("offline.ns", c.ns));
  c.ns_prime = static_cast<int>(kv.integer("offline.ns_prime", c.ns_prime));
  c.n_test = static_cast<int>(kv.integer("bench.n_test", c.n_test));
  c.seed = static_cast<std::uint64_t>(kv.integer("seed", static_cast<long>(c.seed)));
  c.test_seed = static_cast<std::uint64_t>(kv.integer("bench.test_seed", static_cast<long>(c.test_seed)));
  c.eps_pod = kv.num("pod.eps", c.eps_pod);
  const std::string pm = kv.str("pod.method", "randomized");
  if (pm == "randomized") c.pod_method = PodMethod::Randomized;
  else if (pm == "deterministic") c.pod_method = PodMethod::Deterministic;
  else throw InvalidArgument("pod.method: expected randomized or deterministic");
  const std::string sm = kv.str("pod.snapshots", "iterates");
  if (sm == "iterates") c.snapshot_mode = SnapshotMode::Iterates;
  else if (sm == "converged") c.snapshot_mode = SnapshotMode::Converged;
  else throw InvalidArgument("pod.snapshots: expected iterates or converged");
  c.eps_deim = kv.nums("deim.eps", c.eps_deim);

  const std::string dec = kv.str("net.decoder", "auto");
  if (dec == "auto") c.decoder = DecoderKind::Auto;
  else if (dec == "conv") c.decoder = DecoderKind::Conv;
  else if (dec == "dense") c.decoder = DecoderKind::Dense;
  else throw InvalidArgument("net.decoder: expected auto, conv or dense");
  std::vector<double> widths(c.dfnn_widths.begin(), c.dfnn_widths.end());
  widths = kv.nums("net.dfnn", widths);
  c.dfnn_widths.assign(widths.begin(), widths.end());
  c.conv_channels = static_cast<int>(kv.integer("net.channels", c.conv_channels));

  auto& t = c.train;
  t.alpha = kv.num("train.alpha", t.alpha);
  t.eta = kv.num("train.eta", t.eta);
  t.Nb = static_cast<int>(kv.integer("train.batch", t.Nb));
  t.Ne = static_cast<int>(kv.integer("train.epochs", t.Ne));
  t.omega = kv.num("train.omega", t.omega);
  t.patience = static_cast<int>(kv.integer("train.patience", t.patience));
  t.max_seconds = kv.num("train.max_seconds", t.max_seconds);
  t.seed = static_cast<std::uint64_t>(kv.integer("train.seed", static_cast<long>(c.seed)));

  c.online.eps_stop = kv.num("online.eps", c.online.eps_stop);
  c.online.max_iters = static_cast<int>(kv.integer("online.max_iters", c.online.max_iters));
  c.online.k_cap = static_cast<int>(kv.integer("online.k_cap", c.online.k_cap));

  const auto unused = kv.unused_keys();
  if (!unused.empty()) {
    std::string msg = "unknown config keys:";
    for (const auto& k : unused) msg += " " + k;
    throw InvalidArgument(msg);
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  return from(KeyValueConfig::load(path));
}

void ExperimentConfig::validate() const {
  for (int d : divisions)
    if (d < 1) throw InvalidArgument("mesh.divisions must be >= 1");
  for (double e : extent)
    if (!(e > 0.0)) throw InvalidArgument("mesh.extent must be positive");
  params.validate();
  if (params.names.size() != params.low.size()) throw InvalidArgument("params.names count differs from bounds");
  for (const auto& n : params.names)
    if (n != "G" && n != "K" && n != "p" && n != "C" && n != "Ta")
      throw InvalidArgument("params.names: unknown parameter '" + n + "'");
  if (ns < 1 || ns_prime < 1 || n_test < 1) throw InvalidArgument("sample counts must be >= 1");
  if (!(eps_pod > 0.0 && eps_pod < 1.0)) throw InvalidArgument("pod.eps must lie in (0, 1)");
  for (double e : eps_deim)
    if (!(e > 0.0 && e < 1.0)) throw InvalidArgument("deim.eps entries must lie in (0, 1)");
  train.validate();
  online.validate();
  (void)TimeGrid::from_final_time(T, dt);
}

Mesh ExperimentConfig::mesh() const { return build_box_mesh(extent, divisions); }

TimeGrid ExperimentConfig::grid() const { return TimeGrid::from_final_time(T, dt); }

ProblemSetup ExperimentConfig::setup(const std::vector<double>& mu) const {
  if (mu.size() != params.names.size())
    throw InvalidArgument("parameter vector has " + std::to_string(mu.size()) + " entries, expected " +
                          std::to_string(params.names.size()));
  NeoHookeanParams n = neo;
  GuccioneParams g = guccione;
  ProblemSetup s;
  s.load = {load_kind, load_amplitude};
  s.active_amplitude = active_amplitude;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const auto& name = params.names[i];
    if (name == "G") n.G = mu[i];
    else if (name == "K") n.K = g.K = mu[i];
    else if (name == "p") s.load.amplitude = mu[i];
    else if (name == "C") g.C_scale = mu[i];
    else if (name == "Ta") s.active_amplitude = mu[i];
  }
  if (law == MaterialLaw::NeoHookean) s.material = n;
  else s.material = g;
  s.rho0 = rho0;
  s.robin_alpha = robin_alpha;
  s.robin_beta = robin_beta;
  return s;
}

std::vector<double> ExperimentConfig::center() const {
  std::vector<double> c(params.low.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = 0.5 * (params.low[i] + params.high[i]);
  return c;
}

std::pair<NetworkSpec, NetworkSpec> ExperimentConfig::network_specs(int N) const {
  auto specs = default_pair_specs(static_cast<int>(params.dimension()), N, decoder);
  for (auto* s : {&specs.first, &specs.second}) {
    s->dfnn_widths = dfnn_widths;
    s->conv_channels = conv_channels;
    s->validate();
  }
  return specs;
}

}  // namespace hyrom
