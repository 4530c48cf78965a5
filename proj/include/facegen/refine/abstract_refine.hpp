#pragma once

#include "facegen/morphable/linear_model.hpp"
#include "facegen/refine/renderer.hpp"
#include "facegen/refine/scorers.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace facegen {

struct RefineConfig {
    double beta1 = 3.0;
    double beta2 = 0.003;
    int iterations = 200;
    double step = 0.05;
    int max_halvings = 5;
    int fd_components = 16;
    double fd_h = 1e-2;
    std::vector<RenderView> views = default_views();
};

struct RefineTraceRecord {
    int iter = 0;
    double loss = 0.0;
    double score = 0.0;  // mean score over the views
    double reg_s = 0.0;  // ||s - s_o||
    double reg_t = 0.0;  // ||t - t_o||
};

struct RefineResult {
    Eigen::VectorXd s, t;
    std::vector<RefineTraceRecord> trace;  // iter 0 is the starting point
    bool aborted = false;                  // non-finite loss
};

// Minimizes mean_views(1 - score) + beta1 ||s - s_o|| + beta2 ||t - t_o|| by
// gradient descent with backtracking (a step that raises the loss is halved
// up to max_halvings times, then rejected). The t gradient is analytic through
// the renderer's texture map; the s gradient is a central difference over the
// leading fd_components coefficients.
RefineResult abstract_refine(const Eigen::VectorXd& s_o, const Eigen::VectorXd& t_o, const std::string& prompt,
                             const PromptScorer& scorer, const ShapeModel& shape_model,
                             const TextureModel& texture_model, const TextureLayout& layout,
                             const RefineConfig& cfg = {});

// Score term mean_views(1 - score) and, optionally, its gradient wrt t.
double refine_score_term(const Eigen::VectorXd& s, const Eigen::VectorXd& t, const std::string& prompt,
                         const PromptScorer& scorer, const ShapeModel& shape_model,
                         const TextureModel& texture_model, const TextureLayout& layout,
                         const std::vector<RenderView>& views, Eigen::VectorXd* grad_t = nullptr,
                         double* mean_score = nullptr);

}  // namespace facegen
