#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hyrom/dnn.hpp"
#include "hyrom/fom.hpp"
#include "hyrom/online.hpp"
#include "hyrom/pod.hpp"

namespace hyrom {

/// Flat `key = value` text; `#` starts a comment; later keys override earlier ones.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(const std::string& text, const std::string& origin = "<string>");
  static KeyValueConfig load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string>& values() const { return values_; }

  std::string str(const std::string& key, const std::string& fallback) const;
  double num(const std::string& key, double fallback) const;
  long integer(const std::string& key, long fallback) const;
  bool flag(const std::string& key, bool fallback) const;
  std::vector<double> nums(const std::string& key, const std::vector<double>& fallback) const;
  std::vector<std::string> words(const std::string& key, const std::vector<std::string>& fallback) const;

  /// Keys never read through the accessors above.
  std::vector<std::string> unused_keys() const;

 private:
  std::map<std::string, std::string> values_;
  std::string origin_;
  mutable std::map<std::string, bool> read_;
  const std::string* find(const std::string& key) const;
  [[noreturn]] void bad(const std::string& key, const std::string& why) const;
};

enum class MaterialLaw { NeoHookean, Guccione };

struct ExperimentConfig {
  std::string name = "experiment";
  std::array<double, 3> extent{1e-2, 1e-3, 1e-3};
  std::array<int, 3> divisions{10, 2, 2};

  MaterialLaw law = MaterialLaw::NeoHookean;
  NeoHookeanParams neo;
  GuccioneParams guccione;
  double active_amplitude = 0.0;

  LoadKind load_kind = LoadKind::Linear;
  double load_amplitude = 4.0;
  double T = 0.25;
  double dt = 5e-3;

  double rho0 = 1e3;
  double robin_alpha = 0.0;
  double robin_beta = 0.0;
  NewtonSettings newton;

  /// Names from {G, K, p, C, Ta}; each coordinate of mu overrides that quantity.
  ParameterSpace params{{0.5e4, 2.5e4, 2.0}, {1.5e4, 7.5e4, 6.0}, {"G", "K", "p"}};

  int ns = 20;
  int ns_prime = 100;
  int n_test = 10;
  std::uint64_t seed = 1;
  std::uint64_t test_seed = 99;
  double eps_pod = 1e-4;
  PodMethod pod_method = PodMethod::Randomized;
  SnapshotMode snapshot_mode = SnapshotMode::Iterates;
  std::vector<double> eps_deim{1e-5};

  DecoderKind decoder = DecoderKind::Auto;
  std::vector<int> dfnn_widths{50, 50, 50, 50};
  int conv_channels = 8;
  TrainConfig train;
  OnlineSettings online;

  static ExperimentConfig from(const KeyValueConfig& kv);
  static ExperimentConfig load(const std::filesystem::path& path);

  Mesh mesh() const;
  TimeGrid grid() const;
  ProblemSetup setup(const std::vector<double>& mu) const;
  /// Midpoint of the parameter box.
  std::vector<double> center() const;
  std::pair<NetworkSpec, NetworkSpec> network_specs(int N) const;
  void validate() const;
};

std::vector<double> parse_mu(const std::string& text);

}  // namespace hyrom
