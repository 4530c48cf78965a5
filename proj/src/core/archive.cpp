#include "facegen/core/archive.hpp"

#include "facegen/core/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace facegen {

static_assert(std::endian::native == std::endian::little, "archive I/O assumes a little-endian host");

void Archive::put(const std::string& name, const Eigen::MatrixXd& m) {
    ArrayData a;
    a.shape = {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())};
    a.data.resize(m.size());
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(a.data.data(), m.rows(),
                                                                                       m.cols()) = m;
    arrays_[name] = std::move(a);
}

void Archive::put(const std::string& name, const Eigen::VectorXd& v) {
    arrays_[name] = ArrayData{{static_cast<std::size_t>(v.size())}, std::vector<double>(v.begin(), v.end())};
}

const ArrayData& Archive::at(const std::string& name) const {
    auto it = arrays_.find(name);
    if (it == arrays_.end()) throw ValidationError("archive '" + kind_ + "' has no array '" + name + "'");
    return it->second;
}

Eigen::MatrixXd Archive::matrix(const std::string& name) const {
    const auto& a = at(name);
    if (a.shape.size() != 2) throw ValidationError("array '" + name + "' is not a matrix");
    return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        a.data.data(), static_cast<Eigen::Index>(a.shape[0]), static_cast<Eigen::Index>(a.shape[1]));
}

Eigen::VectorXd Archive::vector(const std::string& name) const {
    const auto& a = at(name);
    return Eigen::Map<const Eigen::VectorXd>(a.data.data(), static_cast<Eigen::Index>(a.data.size()));
}

void Archive::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    manifest["format_version"] = kFormatVersion;
    manifest["kind"] = kind_;
    manifest["meta"] = meta_;
    manifest["arrays"] = nlohmann::json::object();
    for (const auto& [name, a] : arrays_) {
        const std::string file = name + ".f64";
        manifest["arrays"][name] = {{"file", file}, {"shape", a.shape}, {"dtype", "float64-le"}};
        std::ofstream out(dir / file, std::ios::binary);
        if (!out) throw IoError("cannot write " + (dir / file).string());
        out.write(reinterpret_cast<const char*>(a.data.data()),
                  static_cast<std::streamsize>(a.data.size() * sizeof(double)));
    }
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
    out << manifest.dump(2) << "\n";
}

Archive Archive::load(const std::filesystem::path& dir, const std::string& expected_kind) {
    std::ifstream in(dir / "manifest.json", std::ios::binary);
    if (!in) throw IoError("no model archive at " + dir.string());
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("manifest: ") + e.what(), 1);
    }
    if (manifest.value("format_version", 0) != kFormatVersion)
        throw ValidationError("unsupported archive format_version in " + dir.string());
    Archive archive(manifest.at("kind").get<std::string>());
    if (!expected_kind.empty() && archive.kind_ != expected_kind)
        throw ValidationError("expected a '" + expected_kind + "' archive, found '" + archive.kind_ + "'");
    archive.meta_ = manifest.value("meta", nlohmann::json::object());
    for (const auto& [name, spec] : manifest.at("arrays").items()) {
        ArrayData a;
        a.shape = spec.at("shape").get<std::vector<std::size_t>>();
        std::size_t count = 1;
        for (auto s : a.shape) count *= s;
        a.data.resize(count);
        const auto path = dir / spec.at("file").get<std::string>();
        std::ifstream f(path, std::ios::binary);
        if (!f) throw IoError("missing array file " + path.string());
        f.read(reinterpret_cast<char*>(a.data.data()), static_cast<std::streamsize>(count * sizeof(double)));
        if (f.gcount() != static_cast<std::streamsize>(count * sizeof(double)))
            throw ValidationError("array file " + path.string() + " is shorter than its declared shape");
        archive.arrays_[name] = std::move(a);
    }
    return archive;
}

}  // namespace facegen
