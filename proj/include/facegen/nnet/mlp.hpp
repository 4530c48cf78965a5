#pragma once

#include "facegen/core/archive.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace facegen {

enum class Activation { relu, identity };

struct DenseLayer {
    Eigen::MatrixXd weights;  // out x in
    Eigen::VectorXd bias;     // out
    Activation activation = Activation::relu;
};

struct LayerGrad {
    Eigen::MatrixXd weights;
    Eigen::VectorXd bias;
};

using NetGrad = std::vector<LayerGrad>;

// Values saved by forward() for backward(); samples are columns.
struct Tape {
    std::vector<Eigen::MatrixXd> inputs;  // input to each layer
    std::vector<Eigen::MatrixXd> pre;     // pre-activation of each layer
};

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Standard Adam update with bias correction. `step` is the 1-based step index
// after increment.
void adam_update(Eigen::Ref<Eigen::MatrixXd> param, Eigen::Ref<Eigen::MatrixXd> m,
                 Eigen::Ref<Eigen::MatrixXd> v, const Eigen::Ref<const Eigen::MatrixXd>& grad, long step,
                 double lr, const AdamConfig& cfg = {});

class MlpNet {
   public:
    MlpNet() = default;
    // dims = {in, h1, ..., out}; hidden layers use `hidden`, the last `output`.
    // Weights uniform in +-sqrt(6 / (in + out)), biases zero.
    MlpNet(const std::vector<int>& dims, std::uint64_t seed, Activation hidden = Activation::relu,
           Activation output = Activation::identity);
    explicit MlpNet(std::vector<DenseLayer> layers);

    int input_dim() const;
    int output_dim() const;
    std::size_t num_layers() const { return layers_.size(); }
    std::size_t parameter_count() const;
    const std::vector<DenseLayer>& layers() const { return layers_; }
    std::vector<DenseLayer>& layers() { return layers_; }
    std::vector<int> dims() const;

    // x: input_dim x batch.
    Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Tape* tape = nullptr) const;
    // Gradient of a loss given dL/dy; optionally writes dL/dx.
    NetGrad backward(const Tape& tape, const Eigen::MatrixXd& dy, Eigen::MatrixXd* dx = nullptr) const;

    NetGrad zero_grad() const;

    // Throws NumericalError naming the layer when a gradient is not finite.
    void adam_step(const NetGrad& grads, double lr, const AdamConfig& cfg = {});
    long adam_steps() const { return step_; }

    Archive to_archive(const std::string& kind) const;
    static MlpNet from_archive(const Archive& archive);

    // Flat parameter access (layer by layer, weights column-major then bias).
    double& parameter(std::size_t index);
    static double& grad_entry(NetGrad& g, std::size_t index);

   private:
    std::vector<DenseLayer> layers_;
    NetGrad m_, v_;
    long step_ = 0;
};

// Sum of squared entries of every gradient tensor.
double grad_norm_sq(const NetGrad& g);

}  // namespace facegen
