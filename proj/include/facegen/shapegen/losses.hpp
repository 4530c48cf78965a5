#pragma once

#include "facegen/core/face_template.hpp"
#include "facegen/core/mesh.hpp"
#include "facegen/core/schema.hpp"

#include <Eigen/Core>

#include <array>
#include <vector>

namespace facegen {

// Per-vertex weights by Region: landmark, feature, face_other, back_head.
struct RegionWeights {
    std::array<double, 4> alpha{16.0, 4.0, 3.0, 0.0};
};

inline constexpr std::size_t kNumFeatureRegions = 4;

// sum_v alpha(region(v)) * |pred_v - gt_v|_1 / N over flattened (3N) vertex
// vectors. Writes d loss / d pred (subgradient 0 at equality) when `grad` is
// set. Throws ValidationError on size mismatch or an unknown region label.
double weighted_l1(const Eigen::Ref<const Eigen::VectorXd>& pred, const Eigen::Ref<const Eigen::VectorXd>& gt,
                   const RegionMasks& masks, const RegionWeights& weights, Eigen::VectorXd* grad = nullptr);

// Mean |a - b| over the coordinates of the listed vertices.
double region_l1(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
                 const std::vector<int>& vertices);

// lambda * max(l1_R(pred, pos) - l1_R(pred, neg) + margin, 0) with l1_R the
// mean per vertex-coordinate over region R. Adds into `grad` when set.
double rst_loss(const Eigen::Ref<const Eigen::VectorXd>& pred, const Eigen::Ref<const Eigen::VectorXd>& pos,
                const Eigen::Ref<const Eigen::VectorXd>& neg, const std::vector<int>& region, double margin,
                double lambda, Eigen::VectorXd* grad = nullptr);

struct RstCalibration {
    std::array<double, kNumFeatureRegions> margin{};
    std::array<double, kNumFeatureRegions> lambda{1.0, 1.0, 1.0, 1.0};
};

// Feature region whose geometry an attribute controls.
FeatureRegion region_of_attribute(const std::string& name);

// For every sample and attribute: the sample whose option is the antonym of
// this sample's option and which is nearest in Hamming distance over the other
// attributes (lowest index on ties), or -1.
std::vector<std::vector<int>> antonym_negatives(const std::vector<DescriptiveCode>& codes,
                                                const AttributeSchema& schema);

// margin_i = mean region l1 between antonym-paired samples; lambda_i = 1 /
// mean region l1 between each sample and the sample mean (1 when that is 0).
RstCalibration calibrate_rst(const std::vector<FaceMesh>& meshes, const std::vector<DescriptiveCode>& codes,
                             const AttributeSchema& schema, const RegionMasks& masks);

}  // namespace facegen
