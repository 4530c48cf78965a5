#pragma once

#include "facegen/core/mesh.hpp"

#include <filesystem>
#include <iosfwd>

namespace facegen {

// Wavefront-style text: `v x y z`, `vt u v`, `f a/a b/b c/c`, 1-based,
// six decimals, LF endings. The texture image is not written here.
void write_obj(const FaceMesh& mesh, std::ostream& out);
void save_mesh(const FaceMesh& mesh, const std::filesystem::path& path);

// Throws ParseError (with line number) on malformed input and
// ValidationError on out-of-range indices.
FaceMesh read_obj(std::istream& in);
FaceMesh load_mesh(const std::filesystem::path& path);

}  // namespace facegen
