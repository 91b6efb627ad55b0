#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hyrom/deim.hpp"
#include "hyrom/dnn.hpp"
#include "hyrom/pod.hpp"
#include "hyrom/snapshots.hpp"

namespace hyrom::io {

inline constexpr std::uint32_t kFormatVersion = 1;

void write_snapshots(const std::filesystem::path& path, const SnapshotMatrix& s);
SnapshotMatrix read_snapshots(const std::filesystem::path& path);

enum class BlockKind : std::uint32_t { Basis = 0, Deim = 1 };

void write_basis(const std::filesystem::path& path, const ReducedBasis& b);
ReducedBasis read_basis(const std::filesystem::path& path);

void write_deim(const std::filesystem::path& path, const DeimOperator& op);
DeimOperator read_deim(const std::filesystem::path& path);

void write_surrogate(const std::filesystem::path& path, const Surrogate& s);
Surrogate read_surrogate(const std::filesystem::path& path);

/// rho.hyrw and iota.hyrw inside dir.
void write_pair(const std::filesystem::path& dir, const SurrogatePair& p);
SurrogatePair read_pair(const std::filesystem::path& dir);

std::uint64_t fnv1a64(const std::string& bytes);
std::uint64_t file_hash(const std::filesystem::path& path);

struct ManifestEntry {
  std::string file;  // relative to the manifest directory
  std::uint64_t hash = 0;
  std::uintmax_t bytes = 0;
};

/// Hashes the given files (relative to dir) and writes dir/manifest.txt.
std::vector<ManifestEntry> write_manifest(const std::filesystem::path& dir, const std::vector<std::string>& files);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& dir);
/// Human-readable problems: missing files and hash mismatches. Empty when consistent.
std::vector<std::string> verify_manifest(const std::filesystem::path& dir);

}  // namespace hyrom::io
