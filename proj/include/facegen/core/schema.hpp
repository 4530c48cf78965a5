#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace facegen {

inline constexpr std::size_t kNumAttributes = 24;
inline constexpr std::size_t kMaxOptions = 8;
inline constexpr int kUnspecified = 0;

enum class Category { shape, color, general };

// Which synthesis branch consumes an attribute's row. Shape and color
// attributes map to their own branch; each general attribute is assigned to
// exactly one of them so the split is a partition.
enum class Branch { shape, texture };

std::string_view to_string(Category c);
std::string_view to_string(Branch b);

struct Attribute {
    std::string name;
    Category category = Category::shape;
    Branch branch = Branch::shape;
    std::vector<std::string> options;  // options[0] == "unspecified"
    std::vector<std::pair<int, int>> antonyms;

    std::size_t option_count() const { return options.size(); }
    // -1 when the option has no antonym.
    int antonym_of(int option) const;
};

class AttributeSchema {
   public:
    // Validates every schema invariant; throws SchemaError.
    explicit AttributeSchema(std::vector<Attribute> attributes);

    // The 24-attribute schema used throughout the project.
    static const AttributeSchema& standard();

    std::size_t size() const { return attributes_.size(); }
    const Attribute& operator[](std::size_t i) const { return attributes_[i]; }
    const std::vector<Attribute>& attributes() const { return attributes_; }

    std::optional<std::size_t> find(std::string_view name) const;
    std::size_t index_of(std::string_view name) const;
    int option_index(std::size_t attribute, std::string_view label) const;

    // Rows in schema order whose branch is `b`.
    std::vector<std::size_t> rows_of(Branch b) const;

    // Stable hex digest of names, categories, branches and options.
    std::string fingerprint() const;

   private:
    std::vector<Attribute> attributes_;
};

// One option index per attribute. The one-hot p x q matrix view is produced
// on demand; storing indices makes "exactly one hot entry per row" hold by
// construction.
class DescriptiveCode {
   public:
    DescriptiveCode() = default;
    explicit DescriptiveCode(std::vector<int> options) : options_(std::move(options)) {}

    static DescriptiveCode unspecified(const AttributeSchema& schema);
    // Rows must be exactly one-hot; throws ValidationError otherwise.
    static DescriptiveCode from_onehot(const Eigen::MatrixXd& onehot);

    std::size_t size() const { return options_.size(); }
    int operator[](std::size_t row) const { return options_[row]; }
    int& operator[](std::size_t row) { return options_[row]; }
    const std::vector<int>& options() const { return options_; }

    // Throws ValidationError on arity mismatch or out-of-range option.
    void validate(const AttributeSchema& schema) const;

    std::size_t specified_count() const;
    Eigen::MatrixXd onehot() const;  // size() x kMaxOptions

    // Row-major flattening of the selected rows' one-hot vectors.
    Eigen::VectorXd flatten(const std::vector<std::size_t>& rows) const;

    bool operator==(const DescriptiveCode&) const = default;

   private:
    std::vector<int> options_;
};

struct SplitCode {
    std::vector<std::size_t> shape_rows;
    std::vector<std::size_t> texture_rows;
    Eigen::MatrixXd shape;    // shape_rows.size() x kMaxOptions
    Eigen::MatrixXd texture;  // texture_rows.size() x kMaxOptions
};

// Partition of the code's rows into the shape-related and texture-related
// submatrices.
SplitCode split_code(const DescriptiveCode& code, const AttributeSchema& schema);
DescriptiveCode merge_code(const SplitCode& split, const AttributeSchema& schema);

}  // namespace facegen
