#include "hyrom/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "hyrom/errors.hpp"

namespace hyrom::io {

namespace fs = std::filesystem;

namespace {

class Writer {
 public:
  explicit Writer(const fs::path& path) : path_(path), os_(path, std::ios::binary) {
    if (!os_) throw Error("cannot open " + path.string() + " for writing");
  }
  void magic(const char (&m)[5]) { os_.write(m, 4); }
  void u32(std::uint32_t v) { le(v); }
  void u64(std::uint64_t v) { le(v); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }
  void f64s(const double* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) f64(p[i]);
  }
  void matrix(const DenseMatrix& a) {
    u64(static_cast<std::uint64_t>(a.rows()));
    u64(static_cast<std::uint64_t>(a.cols()));
    f64s(a.data(), static_cast<std::size_t>(a.size()));
  }
  void vector(const Vector& v) {
    u64(static_cast<std::uint64_t>(v.size()));
    f64s(v.data(), static_cast<std::size_t>(v.size()));
  }
  void indices(const std::vector<std::int32_t>& v) {
    u64(v.size());
    for (auto i : v) u32(static_cast<std::uint32_t>(i));
  }
  void bytes(const std::string& s) { os_.write(s.data(), static_cast<std::streamsize>(s.size())); }
  void finish() {
    os_.flush();
    if (!os_) throw Error("write failed: " + path_.string());
  }

 private:
  template <class T>
  void le(T v) {
    unsigned char b[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os_.write(reinterpret_cast<const char*>(b), sizeof(T));
  }
  fs::path path_;
  std::ofstream os_;
};

class Reader {
 public:
  explicit Reader(const fs::path& path) : path_(path), is_(path, std::ios::binary) {
    if (!is_) throw FormatError("cannot open " + path.string());
  }
  void magic(const char (&m)[5]) {
    char got[4];
    raw(got, 4);
    if (std::memcmp(got, m, 4) != 0) fail(std::string("bad magic, expected ") + m);
  }
  void version() {
    const auto v = u32();
    if (v != kFormatVersion) fail("unsupported version " + std::to_string(v));
  }
  std::uint32_t u32() { return le<std::uint32_t>(); }
  std::uint64_t u64() { return le<std::uint64_t>(); }
  double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }
  std::uint64_t count(std::uint64_t limit, const char* what) {
    const auto n = u64();
    if (n > limit) fail(std::string("implausible ") + what + " " + std::to_string(n));
    return n;
  }
  DenseMatrix matrix() {
    const auto r = count(1ULL << 32, "rows");
    const auto c = count(1ULL << 32, "cols");
    check_remaining(r * c * 8);
    DenseMatrix a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = f64();
    return a;
  }
  Vector vector() {
    const auto n = count(1ULL << 40, "length");
    check_remaining(n * 8);
    Vector v(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = f64();
    return v;
  }
  std::vector<std::int32_t> indices() {
    const auto n = count(1ULL << 32, "index count");
    check_remaining(n * 4);
    std::vector<std::int32_t> v(n);
    for (auto& x : v) x = static_cast<std::int32_t>(u32());
    return v;
  }
  std::string bytes(std::size_t n) {
    check_remaining(n);
    std::string s(n, '\0');
    raw(s.data(), n);
    return s;
  }
  void expect_end() {
    if (is_.peek() != std::char_traits<char>::eof()) fail("trailing bytes");
  }
  [[noreturn]] void fail(const std::string& msg) const { throw FormatError(path_.string() + ": " + msg); }

  void check_remaining(std::uint64_t need) {
    const auto pos = is_.tellg();
    is_.seekg(0, std::ios::end);
    const auto end = is_.tellg();
    is_.seekg(pos);
    if (static_cast<std::uint64_t>(end - pos) < need) fail("truncated file");
  }

 private:
  void raw(char* p, std::size_t n) {
    is_.read(p, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is_.gcount()) != n) fail("truncated file");
  }
  template <class T>
  T le() {
    unsigned char b[sizeof(T)];
    raw(reinterpret_cast<char*>(b), sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(b[i]) << (8 * i);
    return v;
  }
  fs::path path_;
  std::ifstream is_;
};

void write_basis_payload(Writer& w, const ReducedBasis& b) {
  w.matrix(b.V);
  w.vector(b.singular_values);
  w.f64(b.ric_tolerance);
  w.f64(b.total_energy);
}

ReducedBasis read_basis_payload(Reader& r) {
  ReducedBasis b;
  b.V = r.matrix();
  b.singular_values = r.vector();
  b.ric_tolerance = r.f64();
  b.total_energy = r.f64();
  return b;
}

void write_stats(Writer& w, const NormStats& s) {
  w.vector(s.mean);
  w.vector(s.sd);
}

NormStats read_stats(Reader& r) {
  NormStats s;
  s.mean = r.vector();
  s.sd = r.vector();
  if (s.mean.size() != s.sd.size()) r.fail("statistics length mismatch");
  return s;
}

}  // namespace

void write_snapshots(const fs::path& path, const SnapshotMatrix& s) {
  const std::size_t P = s.parameter_dim();
  for (const auto& m : s.meta())
    if (m.mu.size() != P) throw InvalidArgument("write_snapshots: inconsistent parameter dimension in metadata");
  Writer w(path);
  w.magic("HYRS");
  w.u32(kFormatVersion);
  w.u64(static_cast<std::uint64_t>(s.rows()));
  w.u64(static_cast<std::uint64_t>(s.cols()));
  w.u32(static_cast<std::uint32_t>(8 * P + 8));
  const auto d = s.data();
  w.f64s(d.data(), static_cast<std::size_t>(d.size()));
  for (const auto& m : s.meta()) {
    w.f64s(m.mu.data(), m.mu.size());
    w.u32(m.n);
    w.u32(m.k);
  }
  w.finish();
}

SnapshotMatrix read_snapshots(const fs::path& path) {
  Reader r(path);
  r.magic("HYRS");
  r.version();
  const auto rows = r.count(1ULL << 32, "rows");
  const auto cols = r.count(1ULL << 32, "cols");
  const auto meta_size = r.u32();
  if (meta_size < 8 || (meta_size - 8) % 8 != 0) r.fail("bad meta-record size " + std::to_string(meta_size));
  const std::size_t P = (meta_size - 8) / 8;
  r.check_remaining(rows * cols * 8 + cols * meta_size);
  DenseMatrix data(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < data.size(); ++i) data.data()[i] = r.f64();
  std::vector<SnapshotMeta> meta(cols);
  for (auto& m : meta) {
    m.mu.resize(P);
    for (auto& x : m.mu) x = r.f64();
    m.n = r.u32();
    m.k = r.u32();
  }
  r.expect_end();
  SnapshotMatrix s(data, std::move(meta));
  if (cols == 0) s = SnapshotMatrix(static_cast<Eigen::Index>(rows));
  return s;
}

void write_basis(const fs::path& path, const ReducedBasis& b) {
  Writer w(path);
  w.magic("HYRB");
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(BlockKind::Basis));
  write_basis_payload(w, b);
  w.finish();
}

ReducedBasis read_basis(const fs::path& path) {
  Reader r(path);
  r.magic("HYRB");
  r.version();
  if (r.u32() != static_cast<std::uint32_t>(BlockKind::Basis)) r.fail("not a basis block");
  ReducedBasis b = read_basis_payload(r);
  r.expect_end();
  return b;
}

void write_deim(const fs::path& path, const DeimOperator& op) {
  Writer w(path);
  w.magic("HYRB");
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(BlockKind::Deim));
  w.matrix(op.Phi);
  w.indices(op.magic_rows);
  w.matrix(op.left_factor);
  w.f64(op.condition_estimate);
  w.indices(op.reduced_mesh.element_subset);
  w.indices(op.reduced_mesh.active_dofs);
  w.finish();
}

DeimOperator read_deim(const fs::path& path) {
  Reader r(path);
  r.magic("HYRB");
  r.version();
  if (r.u32() != static_cast<std::uint32_t>(BlockKind::Deim)) r.fail("not a DEIM block");
  DeimOperator op;
  op.Phi = r.matrix();
  op.magic_rows = r.indices();
  op.left_factor = r.matrix();
  op.condition_estimate = r.f64();
  op.reduced_mesh.element_subset = r.indices();
  op.reduced_mesh.active_dofs = r.indices();
  op.reduced_mesh.magic_dof_rows = op.magic_rows;
  r.expect_end();
  if (static_cast<Eigen::Index>(op.magic_rows.size()) != op.Phi.cols() || op.left_factor.cols() != op.Phi.cols())
    r.fail("DEIM block dimensions disagree");
  return op;
}

void write_surrogate(const fs::path& path, const Surrogate& s) {
  Writer w(path);
  w.magic("HYRW");
  w.u32(kFormatVersion);
  const std::string desc = s.spec.descriptor();
  w.u32(static_cast<std::uint32_t>(desc.size()));
  w.bytes(desc);
  w.u64(s.weights.values.size());
  w.f64s(s.weights.values.data(), s.weights.values.size());
  w.u64(s.weights.seed);
  w.u32(static_cast<std::uint32_t>(s.max_newton_index));
  write_stats(w, s.input_stats);
  write_stats(w, s.output_stats);
  w.finish();
}

Surrogate read_surrogate(const fs::path& path) {
  Reader r(path);
  r.magic("HYRW");
  r.version();
  const auto len = r.u32();
  if (len > (1U << 20)) r.fail("descriptor too long");
  Surrogate s;
  s.spec = NetworkSpec::parse(r.bytes(len));
  const auto n = r.count(1ULL << 32, "weight count");
  r.check_remaining(n * 8);
  s.weights.values.resize(n);
  for (auto& x : s.weights.values) x = r.f64();
  s.weights.seed = r.u64();
  s.max_newton_index = static_cast<int>(r.u32());
  s.input_stats = read_stats(r);
  s.output_stats = read_stats(r);
  r.expect_end();
  const NetworkModel model(s.spec);
  if (model.param_count() != static_cast<Eigen::Index>(n)) r.fail("weight count does not match the descriptor");
  s.weights.offsets = {0, model.decoder_offset(), model.encoder_offset()};
  if (s.input_stats.mean.size() != s.spec.input_dim || s.output_stats.mean.size() != s.spec.output_dim)
    r.fail("normalization statistics do not match the descriptor");
  return s;
}

void write_pair(const fs::path& dir, const SurrogatePair& p) {
  fs::create_directories(dir);
  write_surrogate(dir / "rho.hyrw", p.rho);
  write_surrogate(dir / "iota.hyrw", p.iota);
}

SurrogatePair read_pair(const fs::path& dir) {
  return {read_surrogate(dir / "rho.hyrw"), read_surrogate(dir / "iota.hyrw")};
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t file_hash(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return fnv1a64(ss.str());
}

namespace {

std::string hex(std::uint64_t h) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace

std::vector<ManifestEntry> write_manifest(const fs::path& dir, const std::vector<std::string>& files) {
  std::vector<ManifestEntry> entries;
  std::ofstream os(dir / "manifest.txt");
  if (!os) throw Error("cannot write manifest in " + dir.string());
  os << "# fnv1a64 bytes file\n";
  for (const auto& f : files) {
    ManifestEntry e{f, file_hash(dir / f), fs::file_size(dir / f)};
    os << hex(e.hash) << ' ' << e.bytes << ' ' << e.file << '\n';
    entries.push_back(e);
  }
  return entries;
}

std::vector<ManifestEntry> read_manifest(const fs::path& dir) {
  std::ifstream is(dir / "manifest.txt");
  if (!is) throw FormatError("no manifest in " + dir.string());
  std::vector<ManifestEntry> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string h;
    ManifestEntry e;
    if (!(ls >> h >> e.bytes) || !std::getline(ls >> std::ws, e.file) || h.size() != 16)
      throw FormatError("manifest: malformed line '" + line + "'");
    e.hash = std::stoull(h, nullptr, 16);
    out.push_back(e);
  }
  return out;
}

std::vector<std::string> verify_manifest(const fs::path& dir) {
  std::vector<std::string> problems;
  for (const auto& e : read_manifest(dir)) {
    const fs::path p = dir / e.file;
    if (!fs::exists(p)) {
      problems.push_back("missing: " + e.file);
      continue;
    }
    if (file_hash(p) != e.hash) problems.push_back("hash mismatch: " + e.file);
  }
  return problems;
}

}  // namespace hyrom::io
