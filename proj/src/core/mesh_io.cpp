#include "facegen/core/mesh_io.hpp"

#include "facegen/core/error.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace facegen {

void write_obj(const FaceMesh& mesh, std::ostream& out) {
    char buf[128];
    for (Eigen::Index i = 0; i < mesh.vertices.rows(); ++i) {
        std::snprintf(buf, sizeof buf, "v %.6f %.6f %.6f\n", mesh.vertices(i, 0), mesh.vertices(i, 1),
                      mesh.vertices(i, 2));
        out << buf;
    }
    for (Eigen::Index i = 0; i < mesh.uv.rows(); ++i) {
        std::snprintf(buf, sizeof buf, "vt %.6f %.6f\n", mesh.uv(i, 0), mesh.uv(i, 1));
        out << buf;
    }
    const bool with_uv = mesh.uv.rows() > 0;
    for (Eigen::Index f = 0; f < mesh.faces.rows(); ++f) {
        const int a = mesh.faces(f, 0) + 1, b = mesh.faces(f, 1) + 1, c = mesh.faces(f, 2) + 1;
        if (with_uv)
            std::snprintf(buf, sizeof buf, "f %d/%d %d/%d %d/%d\n", a, a, b, b, c, c);
        else
            std::snprintf(buf, sizeof buf, "f %d %d %d\n", a, b, c);
        out << buf;
    }
}

void save_mesh(const FaceMesh& mesh, const std::filesystem::path& path) {
    mesh.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    write_obj(mesh, out);
    if (!out) throw IoError("failed writing " + path.string());
}

namespace {

double parse_double(const std::string& tok, std::size_t line) {
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) throw ParseError("bad number '" + tok + "'", line);
    return v;
}

long parse_index(const std::string& tok, std::size_t line) {
    long v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || tok.empty())
        throw ParseError("bad index '" + tok + "'", line);
    return v;
}

}  // namespace

FaceMesh read_obj(std::istream& in) {
    std::vector<double> v, vt;
    std::vector<long> f;
    std::string text;
    std::size_t lineno = 0;
    std::size_t face_line_of_max = 0;
    long max_index = 0;
    while (std::getline(in, text)) {
        ++lineno;
        if (!text.empty() && text.back() == '\r') text.pop_back();
        std::istringstream ls(text);
        std::string tag;
        if (!(ls >> tag) || tag[0] == '#') continue;
        std::vector<std::string> toks;
        for (std::string t; ls >> t;) toks.push_back(t);
        if (tag == "v") {
            if (toks.size() != 3) throw ParseError("vertex needs 3 coordinates", lineno);
            for (const auto& t : toks) v.push_back(parse_double(t, lineno));
        } else if (tag == "vt") {
            if (toks.size() != 2) throw ParseError("texture coordinate needs 2 values", lineno);
            for (const auto& t : toks) vt.push_back(parse_double(t, lineno));
        } else if (tag == "f") {
            if (toks.size() != 3) throw ParseError("only triangles are supported", lineno);
            for (const auto& t : toks) {
                const auto slash = t.find('/');
                const long a = parse_index(t.substr(0, slash), lineno);
                if (slash != std::string::npos) {
                    const auto rest = t.substr(slash + 1);
                    const auto tex = rest.substr(0, rest.find('/'));
                    if (!tex.empty() && parse_index(tex, lineno) != a)
                        throw ParseError("per-corner texture indices must equal vertex indices", lineno);
                }
                if (a < 1) throw ValidationError("line " + std::to_string(lineno) + ": face index " +
                                                 std::to_string(a) + " out of range");
                if (a > max_index) {
                    max_index = a;
                    face_line_of_max = lineno;
                }
                f.push_back(a - 1);
            }
        } else if (tag == "vn" || tag == "o" || tag == "g" || tag == "s" || tag == "mtllib" ||
                   tag == "usemtl") {
            continue;
        } else {
            throw ParseError("unknown record '" + tag + "'", lineno);
        }
    }
    if (v.empty()) throw ParseError("no vertices", lineno == 0 ? 1 : lineno);
    const auto n = static_cast<Eigen::Index>(v.size() / 3);
    if (max_index > n)
        throw ValidationError("line " + std::to_string(face_line_of_max) + ": face index " +
                              std::to_string(max_index) + " exceeds vertex count " + std::to_string(n));
    if (!vt.empty() && static_cast<Eigen::Index>(vt.size() / 2) != n)
        throw ValidationError("texture coordinate count does not match vertex count");

    FaceMesh mesh;
    mesh.vertices = Eigen::Map<const Vertices>(v.data(), n, 3);
    if (!vt.empty()) mesh.uv = Eigen::Map<const UvCoords>(vt.data(), n, 2);
    std::vector<int> fi(f.begin(), f.end());
    mesh.faces = Eigen::Map<const Faces>(fi.data(), static_cast<Eigen::Index>(fi.size() / 3), 3);
    mesh.validate();
    return mesh;
}

FaceMesh load_mesh(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return read_obj(in);
}

}  // namespace facegen
