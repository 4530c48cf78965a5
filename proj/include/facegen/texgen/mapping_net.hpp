#pragma once

#include "facegen/morphable/linear_model.hpp"
#include "facegen/shapegen/shape_net.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace facegen {

struct TextureTrainConfig {
    int noise_dim = 64;
    int hidden = 128;
    int hidden_layers = 2;  // 4 layers of units: input, 2 hidden, output
    int epochs = 200;
    int batch = 16;
    double lr = 1e-3;
    double drop_prob = 0.0;  // chance of hiding each code row during training
    double code_gain = 8.0;
    std::uint64_t seed = 1;
};

// A training texture in model coordinates: x = mean + B c + r, r orthogonal
// to B. ||synthesize(t) - x||^2 = ||sigma .* t - c||^2 + ||r||^2.
struct TextureTarget {
    Eigen::VectorXd coeffs;  // c = B^T (x - mean)
    double residual_sq = 0.0;
};

TextureTarget texture_target(const TextureModel& model, const RgbImage& image);

// Mean squared pixel error between synthesize(t) and the target image,
// evaluated in coefficient space; writes d loss / d t.
double texture_l2(const Eigen::VectorXd& t, const TextureModel& model, const TextureTarget& target,
                  Eigen::VectorXd* grad = nullptr);

struct TextureTrainResult {
    CodeRegressor net;
    std::vector<TrainLogRecord> log;  // l1 field holds the l2 loss; rst is 0
};

TextureTrainResult train_mapping_net(const std::vector<RgbImage>& textures, const std::vector<DescriptiveCode>& codes,
                                     const TextureModel& model, const AttributeSchema& schema,
                                     const TextureTrainConfig& cfg, const TrainLogCallback& on_epoch = {});

struct TexturePrediction {
    Eigen::VectorXd t;
    RgbImage image;  // clamped to [0, 1]
};

TexturePrediction predict_texture(const CodeRegressor& net, const TextureModel& model, const DescriptiveCode& code,
                                  std::uint64_t noise_seed);
TexturePrediction predict_texture(const CodeRegressor& net, const TextureModel& model, const DescriptiveCode& code,
                                  const Eigen::VectorXd& noise);

}  // namespace facegen
