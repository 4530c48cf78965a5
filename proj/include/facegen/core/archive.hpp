#pragma once

#include <Eigen/Core>
#include <json.hpp>

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace facegen {

// A model archive is a directory holding `manifest.json` and one raw
// little-endian float64 file per array:
//
//   {"format_version": 1, "kind": "...", "meta": {...},
//    "arrays": {"name": {"file": "name.f64", "shape": [r, c], "dtype": "float64-le"}}}
//
// Matrices are stored row-major.
struct ArrayData {
    std::vector<std::size_t> shape;
    std::vector<double> data;
};

class Archive {
   public:
    static constexpr int kFormatVersion = 1;

    Archive() = default;
    explicit Archive(std::string kind) : kind_(std::move(kind)) {}

    const std::string& kind() const { return kind_; }
    nlohmann::json& meta() { return meta_; }
    const nlohmann::json& meta() const { return meta_; }

    void put(const std::string& name, const Eigen::MatrixXd& m);
    void put(const std::string& name, const Eigen::VectorXd& v);
    bool has(const std::string& name) const { return arrays_.count(name) != 0; }
    const ArrayData& at(const std::string& name) const;
    Eigen::MatrixXd matrix(const std::string& name) const;
    Eigen::VectorXd vector(const std::string& name) const;

    const std::map<std::string, ArrayData>& arrays() const { return arrays_; }
    std::map<std::string, ArrayData>& arrays() { return arrays_; }

    // Throws IoError / ParseError; `expected_kind` empty accepts any kind.
    void save(const std::filesystem::path& dir) const;
    static Archive load(const std::filesystem::path& dir, const std::string& expected_kind = {});

   private:
    std::string kind_;
    nlohmann::json meta_ = nlohmann::json::object();
    std::map<std::string, ArrayData> arrays_;
};

}  // namespace facegen
