#ifndef VEMADAPT_MESH_IO_HPP
#define VEMADAPT_MESH_IO_HPP

#include "vemadapt/mesh.hpp"

#include <string>

namespace vemadapt {

// Mesh JSON:
//   {"nodes": [[x, y], ...],
//    "elements": [[i0, i1, ...], ...],
//    "boundary": [{"segment": [[x0, y0], [x1, y1]], "tag": "DirichletX",
//                  "value": [ux_or_null, uy_or_null]}, ...]}
// Neumann segments carry the traction [tx, ty] in "value". A Dirichlet
// segment with a free component may add "traction": [tx, ty].
// Indices are 0-based; doubles are written in shortest round-trip form.

std::string mesh_to_json(const PolyMesh& mesh, int indent = -1);
PolyMesh mesh_from_json(const std::string& text);

void write_mesh(const PolyMesh& mesh, const std::string& path);
PolyMesh read_mesh(const std::string& path);

}  // namespace vemadapt

#endif  // VEMADAPT_MESH_IO_HPP
