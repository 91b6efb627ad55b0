#include "hyrom/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>
#include <string>

#include "hyrom/errors.hpp"

namespace hyrom {

Mesh build_box_mesh(const std::array<double, 3>& extent, const std::array<int, 3>& divisions,
                    const BoxTagging& tagging) {
  for (int d = 0; d < 3; ++d) {
    if (!(extent[d] > 0.0) || !std::isfinite(extent[d]))
      throw InvalidArgument("build_box_mesh: extent[" + std::to_string(d) + "] must be positive");
    if (divisions[d] < 1) throw InvalidArgument("build_box_mesh: divisions[" + std::to_string(d) + "] must be >= 1");
  }
  const int nx = divisions[0], ny = divisions[1], nz = divisions[2];
  Mesh mesh;
  mesh.extent = extent;
  mesh.divisions = divisions;
  const auto node_id = [&](int i, int j, int k) { return i + (nx + 1) * (j + (ny + 1) * k); };

  mesh.node_coords.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1) * (nz + 1)));
  for (int k = 0; k <= nz; ++k)
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i <= nx; ++i)
        mesh.node_coords.push_back({extent[0] * i / nx, extent[1] * j / ny, extent[2] * k / nz});

  mesh.hex_elements.reserve(static_cast<std::size_t>(nx * ny * nz));
  for (int k = 0; k < nz; ++k) {
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        std::array<std::int32_t, 8> conn{};
        for (int a = 0; a < 8; ++a) conn[a] = node_id(i + (a & 1), j + ((a >> 1) & 1), k + ((a >> 2) & 1));
        const auto e = static_cast<std::int32_t>(mesh.hex_elements.size());
        mesh.hex_elements.push_back(conn);
        const std::array<bool, 6> on_face{i == 0, i == nx - 1, j == 0, j == ny - 1, k == 0, k == nz - 1};
        for (std::uint8_t f = 0; f < 6; ++f)
          if (on_face[f]) mesh.boundary_facets.push_back({e, f, tagging.face_tags[f]});
      }
    }
  }
  return mesh;
}

std::vector<std::int32_t> Mesh::dirichlet_dofs() const {
  std::set<std::int32_t> dofs;
  const auto& faces = face_local_nodes();
  for (const auto& facet : boundary_facets) {
    if (facet.tag != BoundaryTag::Dirichlet) continue;
    for (int a : faces[facet.local_face]) {
      const std::int32_t node = hex_elements[static_cast<std::size_t>(facet.element)][a];
      for (int c = 0; c < 3; ++c) dofs.insert(3 * node + c);
    }
  }
  return {dofs.begin(), dofs.end()};
}

std::vector<std::vector<std::int32_t>> Mesh::node_to_elements() const {
  std::vector<std::vector<std::int32_t>> out(node_coords.size());
  for (std::size_t e = 0; e < hex_elements.size(); ++e)
    for (std::int32_t n : hex_elements[e]) out[static_cast<std::size_t>(n)].push_back(static_cast<std::int32_t>(e));
  return out;
}

const std::array<std::array<int, 4>, 6>& face_local_nodes() {
  // Each face lists its nodes in lexicographic order of the two free axes.
  static const std::array<std::array<int, 4>, 6> faces{{
      {0, 2, 4, 6},  // xi = -1   (eta, zeta)
      {1, 3, 5, 7},  // xi = +1
      {0, 1, 4, 5},  // eta = -1  (xi, zeta)
      {2, 3, 6, 7},  // eta = +1
      {0, 1, 2, 3},  // zeta = -1 (xi, eta)
      {4, 5, 6, 7},  // zeta = +1
  }};
  return faces;
}

ShapeEval shape_eval(const Point3& p) {
  ShapeEval out{};
  for (int a = 0; a < 8; ++a) {
    const double sx = node_sign(a, 0), sy = node_sign(a, 1), sz = node_sign(a, 2);
    const double fx = 0.5 * (1.0 + sx * p[0]);
    const double fy = 0.5 * (1.0 + sy * p[1]);
    const double fz = 0.5 * (1.0 + sz * p[2]);
    out.values[a] = fx * fy * fz;
    out.gradients[a] = {0.5 * sx * fy * fz, 0.5 * sy * fx * fz, 0.5 * sz * fx * fy};
  }
  return out;
}

const GaussRule& gauss2() {
  static const GaussRule rule{{-1.0 / std::sqrt(3.0), 1.0 / std::sqrt(3.0)}, {1.0, 1.0}};
  return rule;
}

ReducedMesh extract_reduced_mesh(const Mesh& mesh, std::span<const std::int32_t> magic_dofs) {
  if (magic_dofs.empty()) throw InvalidArgument("extract_reduced_mesh: empty magic-point set");
  const auto ndofs = static_cast<std::int32_t>(mesh.dof_count());
  std::vector<char> node_hit(mesh.node_count(), 0);
  for (std::int32_t d : magic_dofs) {
    if (d < 0 || d >= ndofs) throw InvalidArgument("extract_reduced_mesh: dof index " + std::to_string(d) + " out of range");
    node_hit[static_cast<std::size_t>(d / 3)] = 1;
  }
  ReducedMesh rm;
  rm.magic_dof_rows.assign(magic_dofs.begin(), magic_dofs.end());
  std::set<std::int32_t> active;
  for (std::size_t e = 0; e < mesh.hex_elements.size(); ++e) {
    const auto& conn = mesh.hex_elements[e];
    const bool touched = std::any_of(conn.begin(), conn.end(), [&](std::int32_t n) { return node_hit[static_cast<std::size_t>(n)] != 0; });
    if (!touched) continue;
    rm.element_subset.push_back(static_cast<std::int32_t>(e));
    for (std::int32_t n : conn)
      for (int c = 0; c < 3; ++c) active.insert(3 * n + c);
  }
  rm.active_dofs.assign(active.begin(), active.end());
  return rm;
}

void write_mesh_text(const Mesh& mesh, std::ostream& os) {
  os << "# hyrom mesh nodes " << mesh.node_count() << " elements " << mesh.element_count() << " facets "
     << mesh.boundary_facets.size() << " dofs " << mesh.dof_count() << '\n';
  os.precision(17);
  for (const auto& p : mesh.node_coords) os << "node " << p[0] << ' ' << p[1] << ' ' << p[2] << '\n';
  for (const auto& e : mesh.hex_elements) {
    os << "hex";
    for (auto n : e) os << ' ' << n;
    os << '\n';
  }
  static const char* tag_names[] = {"dirichlet", "pressure", "homogeneous"};
  for (const auto& f : mesh.boundary_facets)
    os << "facet " << f.element << ' ' << int(f.local_face) << ' ' << tag_names[static_cast<int>(f.tag)] << '\n';
}

}  // namespace hyrom
