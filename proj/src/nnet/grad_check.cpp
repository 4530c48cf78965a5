#include "facegen/nnet/grad_check.hpp"

#include "facegen/core/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace facegen {

double relative_error(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

namespace {

double eval_loss(const MlpNet& net, const OutputLoss& loss, const Eigen::MatrixXd& x, Tape* tape) {
    Eigen::MatrixXd dy;
    return loss(net.forward(x, tape), dy);
}

bool same_relu_pattern(const MlpNet& net, const Tape& a, const Tape& b) {
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
        if (net.layers()[l].activation != Activation::relu) continue;
        if (((a.pre[l].array() > 0.0) != (b.pre[l].array() > 0.0)).any()) return false;
    }
    return true;
}

}  // namespace

GradCheckResult grad_check(const MlpNet& net, const OutputLoss& loss, const Eigen::MatrixXd& x, double eps,
                           std::size_t max_params, std::uint64_t seed) {
    Tape tape;
    Eigen::MatrixXd dy;
    loss(net.forward(x, &tape), dy);
    NetGrad grads = net.backward(tape, dy);

    const std::size_t total = net.parameter_count();
    std::vector<std::size_t> indices(total);
    std::iota(indices.begin(), indices.end(), 0);
    if (total > max_params) {
        Rng rng(seed);
        rng.shuffle(indices);
        indices.resize(max_params);
    }

    GradCheckResult result;
    MlpNet probe = net;
    for (std::size_t idx : indices) {
        double& p = probe.parameter(idx);
        const double orig = p;
        Tape tp, tm;
        p = orig + eps;
        const double lp = eval_loss(probe, loss, x, &tp);
        p = orig - eps;
        const double lm = eval_loss(probe, loss, x, &tm);
        p = orig;
        if (!same_relu_pattern(net, tp, tape) || !same_relu_pattern(net, tm, tape)) {
            ++result.skipped_kinks;
            continue;
        }
        const double numeric = (lp - lm) / (2.0 * eps);
        result.max_rel_error = std::max(result.max_rel_error, relative_error(MlpNet::grad_entry(grads, idx), numeric));
        ++result.checked;
    }
    return result;
}

double check_gradient(const VectorFunction& f, const Eigen::VectorXd& x, double eps,
                      const std::vector<Eigen::Index>& coords) {
    Eigen::VectorXd grad(x.size()), scratch(x.size());
    f(x, grad);
    std::vector<Eigen::Index> idx = coords;
    if (idx.empty()) {
        idx.resize(x.size());
        std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    }
    double worst = 0.0;
    Eigen::VectorXd xp = x;
    for (auto i : idx) {
        xp[i] = x[i] + eps;
        const double fp = f(xp, scratch);
        xp[i] = x[i] - eps;
        const double fm = f(xp, scratch);
        xp[i] = x[i];
        worst = std::max(worst, relative_error(grad[i], (fp - fm) / (2.0 * eps)));
    }
    return worst;
}

}  // namespace facegen
