#pragma once

#include <iosfwd>
#include <string>

#include "topoderiv/mesh.hpp"

namespace topoderiv {

/// Writes a mesh in the native exchange format: a `$Nodes` section
/// (id x y [z]), an `$Elements` section (id type region vertex-ids, type 2 for
/// triangles and 4 for tetrahedra), and a `$BoundaryFacets` section
/// (id tag vertex-ids). Ids are 1-based, coordinates are written with full
/// double precision so a write/read round trip is exact.
void write_mesh(const Mesh& mesh, std::ostream& out);
void write_mesh_file(const Mesh& mesh, const std::string& path);

/// Reads the native format back. Facet owning cells are reconstructed from
/// cell incidence rather than stored.
Mesh read_mesh(std::istream& in);
Mesh read_mesh_file(const std::string& path);

/// Imports a Gmsh 2.2 ASCII file. Full-dimensional elements become cells with
/// the first physical tag as region; codimension-one elements become tagged
/// boundary facets. Node ids may be sparse; they are renumbered densely.
Mesh import_gmsh(std::istream& in);
Mesh import_gmsh_file(const std::string& path);

}  // namespace topoderiv
