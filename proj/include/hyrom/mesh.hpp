#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace hyrom {

using Point3 = std::array<double, 3>;

enum class BoundaryTag : std::uint8_t { Dirichlet, NeumannPressure, Homogeneous };

/// Local face numbering of the reference hexahedron:
/// 0: xi=-1, 1: xi=+1, 2: eta=-1, 3: eta=+1, 4: zeta=-1, 5: zeta=+1.
enum class BoxFace : std::uint8_t { XMin, XMax, YMin, YMax, ZMin, ZMax };

struct BoundaryFacet {
  std::int32_t element;
  std::uint8_t local_face;
  BoundaryTag tag;
};

/// Which tag each of the six box faces receives.
struct BoxTagging {
  std::array<BoundaryTag, 6> face_tags{BoundaryTag::Dirichlet,       BoundaryTag::Homogeneous,
                                       BoundaryTag::Homogeneous,     BoundaryTag::Homogeneous,
                                       BoundaryTag::NeumannPressure, BoundaryTag::Homogeneous};
};

/// Structured hexahedral mesh. Local node a of an element sits at reference
/// coordinates ((a&1)?+1:-1, (a&2)?+1:-1, (a&4)?+1:-1); node i owns dofs 3i..3i+2.
struct Mesh {
  std::vector<Point3> node_coords;
  std::vector<std::array<std::int32_t, 8>> hex_elements;
  std::vector<BoundaryFacet> boundary_facets;
  std::array<double, 3> extent{};
  std::array<int, 3> divisions{};

  std::size_t node_count() const { return node_coords.size(); }
  std::size_t element_count() const { return hex_elements.size(); }
  std::size_t dof_count() const { return 3 * node_coords.size(); }

  /// Sorted unique dofs lying on Dirichlet facets.
  std::vector<std::int32_t> dirichlet_dofs() const;
  /// For every node, the elements containing it.
  std::vector<std::vector<std::int32_t>> node_to_elements() const;
};

Mesh build_box_mesh(const std::array<double, 3>& extent, const std::array<int, 3>& divisions,
                    const BoxTagging& tagging = {});

/// Node indices (local) of each reference face, ordered so that the local
/// in-face coordinates (s, t) follow the two remaining reference axes.
const std::array<std::array<int, 4>, 6>& face_local_nodes();

struct ShapeEval {
  std::array<double, 8> values;
  std::array<std::array<double, 3>, 8> gradients;  // d/dxi, d/deta, d/dzeta
};

/// Trilinear Q1 basis on [-1,1]^3.
ShapeEval shape_eval(const Point3& local_point);

/// Sign (+-1) of local node a along reference axis d.
inline double node_sign(int a, int d) { return ((a >> d) & 1) ? 1.0 : -1.0; }

struct GaussRule {
  std::vector<double> points;
  std::vector<double> weights;
};

/// Two-point Gauss-Legendre on [-1, 1].
const GaussRule& gauss2();

struct ReducedMesh {
  std::vector<std::int32_t> element_subset;
  std::vector<std::int32_t> active_dofs;
  std::vector<std::int32_t> magic_dof_rows;
};

/// Elements touching any node that owns a magic dof, plus the dofs they support.
ReducedMesh extract_reduced_mesh(const Mesh& mesh, std::span<const std::int32_t> magic_dofs);

/// Plain-text listing: header line, node lines "x y z", element lines of 8 indices, facet lines.
void write_mesh_text(const Mesh& mesh, std::ostream& os);

}  // namespace hyrom
