#include <cstring>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "hyrom/errors.hpp"
#include "hyrom/io.hpp"
#include "support.hpp"

using namespace hyrom;
using namespace hyrom::testing;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("hyrom_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& bytes) {
  std::ofstream os(p, std::ios::binary);
  os << bytes;
}

template <class T>
T le_at(const std::string& b, std::size_t off) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<unsigned char>(b[off + i])) << (8 * i);
  return v;
}

}  // namespace

TEST_SUITE("bench-cli") {

TEST_CASE("fnv1a64 reference values") {
  CHECK(io::fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(io::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(io::fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("HYRS byte layout") {
  const fs::path d = scratch_dir("hyrs_layout");
  SnapshotMatrix s(2);
  s.append(Vector{{1.5, -2.0}}, {{10.0, 20.0, 30.0}, 4, 1});
  s.append(Vector{{0.25, 8.0}}, {{11.0, 21.0, 31.0}, 5, 0});
  io::write_snapshots(d / "s.hyrs", s);
  const std::string b = slurp(d / "s.hyrs");
  // header 4 + 4 + 8 + 8 + 4, payload 4 doubles, two meta records of 3 doubles + 2 u32
  REQUIRE(b.size() == 28 + 32 + 2 * 32);
  CHECK(b.substr(0, 4) == "HYRS");
  CHECK(le_at<std::uint32_t>(b, 4) == 1);
  CHECK(le_at<std::uint64_t>(b, 8) == 2);
  CHECK(le_at<std::uint64_t>(b, 16) == 2);
  CHECK(le_at<std::uint32_t>(b, 24) == 32);
  const double col_major[] = {1.5, -2.0, 0.25, 8.0};
  for (int i = 0; i < 4; ++i)
    CHECK(std::bit_cast<double>(le_at<std::uint64_t>(b, 28 + 8 * static_cast<std::size_t>(i))) == col_major[i]);
  CHECK(std::bit_cast<double>(le_at<std::uint64_t>(b, 60)) == 10.0);
  CHECK(le_at<std::uint32_t>(b, 84) == 4);
  CHECK(le_at<std::uint32_t>(b, 88) == 1);
  CHECK(le_at<std::uint32_t>(b, 120) == 0);
}

TEST_CASE("HYRS roundtrip and corruption") {
  const fs::path d = scratch_dir("hyrs_rt");
  CounterRng rng(1);
  SnapshotMatrix s(7);
  for (int j = 0; j < 5; ++j) s.append(random_vector(7, rng), {{rng.normal(), rng.normal()}, static_cast<std::uint32_t>(j), 2});
  io::write_snapshots(d / "s.hyrs", s);
  const SnapshotMatrix r = io::read_snapshots(d / "s.hyrs");
  CHECK(r.rows() == 7);
  CHECK(r.cols() == 5);
  CHECK(DenseMatrix(r.data()) == DenseMatrix(s.data()));
  CHECK(r.meta(3).mu == s.meta(3).mu);
  CHECK(r.meta(3).n == 3);
  CHECK(r.meta(3).k == 2);

  io::write_snapshots(d / "empty.hyrs", SnapshotMatrix(4));
  CHECK(io::read_snapshots(d / "empty.hyrs").rows() == 4);

  const std::string good = slurp(d / "s.hyrs");
  spit(d / "trunc.hyrs", good.substr(0, good.size() - 3));
  CHECK_THROWS_AS(io::read_snapshots(d / "trunc.hyrs"), FormatError);
  spit(d / "trail.hyrs", good + "x");
  CHECK_THROWS_AS(io::read_snapshots(d / "trail.hyrs"), FormatError);
  std::string magic = good;
  magic[0] = 'X';
  spit(d / "magic.hyrs", magic);
  CHECK_THROWS_AS(io::read_snapshots(d / "magic.hyrs"), FormatError);
  std::string ver = good;
  ver[4] = 9;
  spit(d / "ver.hyrs", ver);
  CHECK_THROWS_AS(io::read_snapshots(d / "ver.hyrs"), FormatError);
  CHECK_THROWS_AS(io::read_snapshots(d / "missing.hyrs"), FormatError);

  SnapshotMatrix mixed(1);
  mixed.append(Vector::Ones(1), {{1.0}, 0, 0});
  mixed.append(Vector::Ones(1), {{1.0, 2.0}, 0, 0});
  CHECK_THROWS_AS(io::write_snapshots(d / "mixed.hyrs", mixed), InvalidArgument);
}

TEST_CASE("HYRB basis and DEIM blocks") {
  const fs::path d = scratch_dir("hyrb");
  CounterRng rng(2);
  ReducedBasis b{random_orthonormal(12, 3, rng), Vector{{3.0, 2.0, 1.0, 0.1}}, 1e-4, 14.01};
  io::write_basis(d / "b.hyrb", b);
  const std::string bytes = slurp(d / "b.hyrb");
  CHECK(bytes.substr(0, 4) == "HYRB");
  CHECK(le_at<std::uint32_t>(bytes, 8) == 0);
  const ReducedBasis r = io::read_basis(d / "b.hyrb");
  CHECK(r.V == b.V);
  CHECK(r.singular_values == b.singular_values);
  CHECK(r.ric_tolerance == b.ric_tolerance);
  CHECK(r.total_energy == b.total_energy);

  const Mesh mesh = build_box_mesh({1e-2, 1e-3, 1e-3}, {10, 2, 2});
  const Assembler a(mesh);
  DenseMatrix Phi = random_orthonormal(a.dofs(), 4, rng);
  DenseMatrix V = random_orthonormal(a.dofs(), 3, rng);
  const DeimOperator op = make_deim_operator(Phi, V, mesh);
  io::write_deim(d / "d.hyrb", op);
  const DeimOperator q = io::read_deim(d / "d.hyrb");
  CHECK(q.Phi == op.Phi);
  CHECK(q.magic_rows == op.magic_rows);
  CHECK(q.left_factor == op.left_factor);
  CHECK(q.condition_estimate == op.condition_estimate);
  CHECK(q.reduced_mesh.element_subset == op.reduced_mesh.element_subset);
  CHECK(q.reduced_mesh.active_dofs == op.reduced_mesh.active_dofs);

  CHECK_THROWS_AS(io::read_deim(d / "b.hyrb"), FormatError);
  CHECK_THROWS_AS(io::read_basis(d / "d.hyrb"), FormatError);
}

TEST_CASE("HYRW surrogate roundtrip") {
  const fs::path d = scratch_dir("hyrw");
  Surrogate s;
  s.spec = NetworkSpec::make(5, 30);
  s.spec.conv_channels = 2;
  s.spec.dfnn_widths = {8, 8};
  s.weights = init_weights(s.spec, 4);
  s.max_newton_index = 3;
  CounterRng rng(3);
  s.input_stats = {random_vector(5, rng), Vector::Constant(5, 2.0)};
  s.output_stats = {random_vector(30, rng), Vector::Constant(30, 0.5)};
  io::write_surrogate(d / "w.hyrw", s);

  const std::string b = slurp(d / "w.hyrw");
  CHECK(b.substr(0, 4) == "HYRW");
  const auto len = le_at<std::uint32_t>(b, 8);
  CHECK(b.substr(12, len) == s.spec.descriptor());

  const Surrogate r = io::read_surrogate(d / "w.hyrw");
  CHECK(r.spec.descriptor() == s.spec.descriptor());
  CHECK(r.weights.values == s.weights.values);
  CHECK(r.weights.offsets == s.weights.offsets);
  CHECK(r.weights.seed == 4);
  CHECK(r.max_newton_index == 3);
  const DenseMatrix X = random_matrix(5, 4, rng);
  CHECK(r.forward(X) == s.forward(X));

  SurrogatePair p{s, s};
  io::write_pair(d / "pair", p);
  CHECK(fs::exists(d / "pair" / "rho.hyrw"));
  CHECK(io::read_pair(d / "pair").iota.weights.values == s.weights.values);

  // weight count must match the descriptor
  Surrogate bad = s;
  bad.weights.values.pop_back();
  io::write_surrogate(d / "bad.hyrw", bad);
  CHECK_THROWS_AS(io::read_surrogate(d / "bad.hyrw"), FormatError);
}

TEST_CASE("manifest detects missing and modified files") {
  const fs::path d = scratch_dir("manifest");
  spit(d / "a.txt", "alpha");
  spit(d / "b.bin", std::string("\0\1\2", 3));
  const auto entries = io::write_manifest(d, {"a.txt", "b.bin"});
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].hash == io::fnv1a64("alpha"));
  CHECK(entries[1].bytes == 3);
  CHECK(io::verify_manifest(d).empty());
  const auto back = io::read_manifest(d);
  CHECK(back[1].file == "b.bin");
  CHECK(back[1].hash == entries[1].hash);

  spit(d / "a.txt", "alphA");
  fs::remove(d / "b.bin");
  const auto problems = io::verify_manifest(d);
  REQUIRE(problems.size() == 2);
  CHECK(problems[0] == "hash mismatch: a.txt");
  CHECK(problems[1] == "missing: b.bin");
  CHECK_THROWS_AS(io::read_manifest(scratch_dir("nomanifest")), FormatError);
}

}  // TEST_SUITE
