#pragma once

#include "facegen/nnet/mlp.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>

namespace facegen {

// loss(y, dy): returns the loss of net output y and writes dL/dy.
using OutputLoss = std::function<double(const Eigen::MatrixXd& y, Eigen::MatrixXd& dy)>;

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    std::size_t skipped_kinks = 0;  // probes that crossed a relu kink
};

double relative_error(double analytic, double numeric);

// Central finite differences against backward() on at most `max_params`
// randomly sampled parameters. Probes whose +-eps perturbation changes any
// relu's active set are skipped and counted.
GradCheckResult grad_check(const MlpNet& net, const OutputLoss& loss, const Eigen::MatrixXd& x, double eps = 1e-5,
                           std::size_t max_params = 200, std::uint64_t seed = 1);

// f(x, grad): value and analytic gradient of a scalar function of a vector.
using VectorFunction = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

// Max relative error over the listed coordinates (all when empty).
double check_gradient(const VectorFunction& f, const Eigen::VectorXd& x, double eps = 1e-6,
                      const std::vector<Eigen::Index>& coords = {});

}  // namespace facegen
