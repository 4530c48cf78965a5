#include "facegen/nnet/mlp.hpp"

#include "facegen/core/error.hpp"
#include "facegen/core/rng.hpp"

#include <cmath>

namespace facegen {

void adam_update(Eigen::Ref<Eigen::MatrixXd> param, Eigen::Ref<Eigen::MatrixXd> m, Eigen::Ref<Eigen::MatrixXd> v,
                 const Eigen::Ref<const Eigen::MatrixXd>& grad, long step, double lr, const AdamConfig& cfg) {
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg.eps);
}

MlpNet::MlpNet(const std::vector<int>& dims, std::uint64_t seed, Activation hidden, Activation output) {
    if (dims.size() < 2) throw ArgumentError("an MLP needs at least an input and an output size");
    for (int d : dims)
        if (d < 1) throw ArgumentError("MLP layer sizes must be positive");
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        DenseLayer layer;
        const int in = dims[l], out = dims[l + 1];
        const double a = std::sqrt(6.0 / (in + out));
        layer.weights.resize(out, in);
        for (Eigen::Index j = 0; j < in; ++j)
            for (Eigen::Index i = 0; i < out; ++i) layer.weights(i, j) = rng.uniform(-a, a);
        layer.bias = Eigen::VectorXd::Zero(out);
        layer.activation = l + 2 == dims.size() ? output : hidden;
        layers_.push_back(std::move(layer));
    }
    m_ = zero_grad();
    v_ = zero_grad();
}

MlpNet::MlpNet(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw ArgumentError("an MLP needs at least one layer");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        if (layers_[l].bias.size() != layers_[l].weights.rows())
            throw ValidationError("layer " + std::to_string(l) + ": bias size does not match weights");
        if (l > 0 && layers_[l].weights.cols() != layers_[l - 1].weights.rows())
            throw ValidationError("layer " + std::to_string(l) + ": input size does not chain");
    }
    m_ = zero_grad();
    v_ = zero_grad();
}

int MlpNet::input_dim() const { return static_cast<int>(layers_.front().weights.cols()); }
int MlpNet::output_dim() const { return static_cast<int>(layers_.back().weights.rows()); }

std::vector<int> MlpNet::dims() const {
    std::vector<int> d{input_dim()};
    for (const auto& l : layers_) d.push_back(static_cast<int>(l.weights.rows()));
    return d;
}

std::size_t MlpNet::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
    return n;
}

Eigen::MatrixXd MlpNet::forward(const Eigen::MatrixXd& x, Tape* tape) const {
    if (x.rows() != input_dim())
        throw ArgumentError("MLP input has " + std::to_string(x.rows()) + " rows, expected " +
                            std::to_string(input_dim()));
    if (tape) {
        tape->inputs.clear();
        tape->pre.clear();
    }
    Eigen::MatrixXd h = x;
    for (const auto& layer : layers_) {
        Eigen::MatrixXd z = layer.weights * h;
        z.colwise() += layer.bias;
        if (tape) {
            tape->inputs.push_back(std::move(h));
            tape->pre.push_back(z);
        }
        if (layer.activation == Activation::relu) z = z.cwiseMax(0.0);
        h = std::move(z);
    }
    return h;
}

NetGrad MlpNet::backward(const Tape& tape, const Eigen::MatrixXd& dy, Eigen::MatrixXd* dx) const {
    if (tape.pre.size() != layers_.size()) throw ArgumentError("backward() needs the tape of a forward() pass");
    NetGrad grads(layers_.size());
    Eigen::MatrixXd g = dy;
    for (std::size_t k = layers_.size(); k-- > 0;) {
        const auto& layer = layers_[k];
        if (layer.activation == Activation::relu) g = (tape.pre[k].array() > 0.0).select(g, 0.0);
        grads[k].weights.noalias() = g * tape.inputs[k].transpose();
        grads[k].bias = g.rowwise().sum();
        if (k > 0 || dx) {
            Eigen::MatrixXd next = layer.weights.transpose() * g;
            g = std::move(next);
        }
    }
    if (dx) *dx = std::move(g);
    return grads;
}

NetGrad MlpNet::zero_grad() const {
    NetGrad g(layers_.size());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        g[l].weights = Eigen::MatrixXd::Zero(layers_[l].weights.rows(), layers_[l].weights.cols());
        g[l].bias = Eigen::VectorXd::Zero(layers_[l].bias.size());
    }
    return g;
}

void MlpNet::adam_step(const NetGrad& grads, double lr, const AdamConfig& cfg) {
    if (grads.size() != layers_.size()) throw ArgumentError("gradient does not match the network");
    for (std::size_t l = 0; l < grads.size(); ++l)
        if (!grads[l].weights.allFinite() || !grads[l].bias.allFinite())
            throw NumericalError("non-finite gradient in layer " + std::to_string(l));
    if (m_.size() != layers_.size()) {
        m_ = zero_grad();
        v_ = zero_grad();
    }
    ++step_;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        adam_update(layers_[l].weights, m_[l].weights, v_[l].weights, grads[l].weights, step_, lr, cfg);
        adam_update(layers_[l].bias, m_[l].bias, v_[l].bias, grads[l].bias, step_, lr, cfg);
    }
}

namespace {
template <class Layers, class Fn>
auto& flat_entry(Layers& layers, std::size_t index, Fn&& pick) {
    for (auto& l : layers) {
        auto& w = pick(l).first;
        auto& b = pick(l).second;
        if (index < static_cast<std::size_t>(w.size())) return w.data()[index];
        index -= w.size();
        if (index < static_cast<std::size_t>(b.size())) return b.data()[index];
        index -= b.size();
    }
    throw ArgumentError("parameter index out of range");
}
}  // namespace

double& MlpNet::parameter(std::size_t index) {
    return flat_entry(layers_, index, [](DenseLayer& l) { return std::pair<Eigen::MatrixXd&, Eigen::VectorXd&>(l.weights, l.bias); });
}

double& MlpNet::grad_entry(NetGrad& g, std::size_t index) {
    return flat_entry(g, index, [](LayerGrad& l) { return std::pair<Eigen::MatrixXd&, Eigen::VectorXd&>(l.weights, l.bias); });
}

Archive MlpNet::to_archive(const std::string& kind) const {
    Archive a(kind);
    std::vector<std::string> acts;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        a.put("W" + std::to_string(l), layers_[l].weights);
        a.put("b" + std::to_string(l), layers_[l].bias);
        acts.push_back(layers_[l].activation == Activation::relu ? "relu" : "identity");
    }
    a.meta()["dims"] = dims();
    a.meta()["activations"] = acts;
    return a;
}

MlpNet MlpNet::from_archive(const Archive& archive) {
    const auto acts = archive.meta().at("activations").get<std::vector<std::string>>();
    std::vector<DenseLayer> layers;
    for (std::size_t l = 0; l < acts.size(); ++l) {
        DenseLayer layer;
        layer.weights = archive.matrix("W" + std::to_string(l));
        layer.bias = archive.vector("b" + std::to_string(l));
        if (acts[l] == "relu")
            layer.activation = Activation::relu;
        else if (acts[l] == "identity")
            layer.activation = Activation::identity;
        else
            throw ValidationError("unknown activation '" + acts[l] + "'");
        layers.push_back(std::move(layer));
    }
    return MlpNet(std::move(layers));
}

double grad_norm_sq(const NetGrad& g) {
    double s = 0.0;
    for (const auto& l : g) s += l.weights.squaredNorm() + l.bias.squaredNorm();
    return s;
}

}  // namespace facegen
