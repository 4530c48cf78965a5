#include "facegen/refine/abstract_refine.hpp"

#include "facegen/core/error.hpp"

#include <cmath>

namespace facegen {

namespace {

// Score term of an already synthesized mesh and model-space texture.
double score_term(const FaceMesh& mesh, const RgbImage& tex, const std::string& prompt, const PromptScorer& scorer,
                  const TextureModel& texture_model, const TextureLayout& layout,
                  const std::vector<RenderView>& views, Eigen::VectorXd* grad_t, double* mean_score) {
    const double nv = static_cast<double>(views.size());
    double term = 0.0, score_sum = 0.0;
    RgbImage tex_grad;
    if (grad_t) tex_grad = RgbImage(tex.width, tex.height);
    for (const auto& view : views) {
        const RenderResult r = render(mesh, &tex, view);
        RgbImage g;
        const double sc = scorer.score(r.image, r.labels(layout), prompt, grad_t ? &g : nullptr);
        term += (1.0 - sc) / nv;
        score_sum += sc;
        if (grad_t) {
            const RgbImage tg = r.texture_gradient(g, tex.width, tex.height);
            tex_grad.flat() -= tg.flat() / nv;
        }
    }
    if (grad_t) {
        // Renders sample the clamped texture.
        for (std::size_t i = 0; i < tex.data.size(); ++i)
            if (tex.data[i] < 0.0 || tex.data[i] > 1.0) tex_grad.data[i] = 0.0;
        *grad_t = texture_model.linear().pullback(tex_grad.flat());
    }
    if (mean_score) *mean_score = score_sum / nv;
    return term;
}

void check_inputs(const TextureModel& texture_model, const TextureLayout& layout,
                  const std::vector<RenderView>& views) {
    if (views.empty()) throw ArgumentError("refinement needs at least one view");
    if (layout.width != texture_model.width() || layout.height != texture_model.height())
        throw ValidationError("texture layout does not match the texture model");
}

}  // namespace

double refine_score_term(const Eigen::VectorXd& s, const Eigen::VectorXd& t, const std::string& prompt,
                         const PromptScorer& scorer, const ShapeModel& shape_model,
                         const TextureModel& texture_model, const TextureLayout& layout,
                         const std::vector<RenderView>& views, Eigen::VectorXd* grad_t, double* mean_score) {
    check_inputs(texture_model, layout, views);
    return score_term(shape_model.synthesize(s), texture_model.synthesize(t), prompt, scorer, texture_model, layout,
                      views, grad_t, mean_score);
}

namespace {

// Minimum-norm element of grad + beta * subdifferential of ||x - x_o||.
Eigen::VectorXd regularized_grad(const Eigen::VectorXd& grad, const Eigen::VectorXd& offset, double beta) {
    const double n = offset.norm();
    if (n > 0.0) return grad + beta * offset / n;
    const double gn = grad.norm();
    if (gn <= beta) return Eigen::VectorXd::Zero(grad.size());
    return grad * (1.0 - beta / gn);
}

}  // namespace

RefineResult abstract_refine(const Eigen::VectorXd& s_o, const Eigen::VectorXd& t_o, const std::string& prompt,
                             const PromptScorer& scorer, const ShapeModel& shape_model,
                             const TextureModel& texture_model, const TextureLayout& layout,
                             const RefineConfig& cfg) {
    if (s_o.size() != shape_model.components() || t_o.size() != texture_model.components())
        throw ArgumentError("initial parameters do not match the models");
    check_inputs(texture_model, layout, cfg.views);
    RefineResult res{s_o, t_o, {}, false};

    auto evaluate = [&](const Eigen::VectorXd& s, const Eigen::VectorXd& t, Eigen::VectorXd* gt, double* score) {
        const double term =
            refine_score_term(s, t, prompt, scorer, shape_model, texture_model, layout, cfg.views, gt, score);
        return term + cfg.beta1 * (s - s_o).norm() + cfg.beta2 * (t - t_o).norm();
    };

    double score = 0.0;
    Eigen::VectorXd gt;
    double loss = evaluate(res.s, res.t, &gt, &score);
    res.trace.push_back({0, loss, score, 0.0, 0.0});
    if (!std::isfinite(loss)) {
        res.aborted = true;
        return res;
    }
    const int k_fd = std::min<int>(cfg.fd_components, static_cast<int>(s_o.size()));
    for (int it = 1; it <= cfg.iterations; ++it) {
        Eigen::VectorXd gs = Eigen::VectorXd::Zero(s_o.size());
        const RgbImage tex = texture_model.synthesize(res.t);  // fixed across the probes
        auto probe = [&](const Eigen::VectorXd& s) {
            return score_term(shape_model.synthesize(s), tex, prompt, scorer, texture_model, layout, cfg.views,
                              nullptr, nullptr);
        };
        for (int k = 0; k < k_fd; ++k) {
            Eigen::VectorXd sp = res.s, sm = res.s;
            sp[k] += cfg.fd_h;
            sm[k] -= cfg.fd_h;
            const double lp = probe(sp);
            const double lm = probe(sm);
            gs[k] = (lp - lm) / (2.0 * cfg.fd_h);
        }
        const Eigen::VectorXd ds = regularized_grad(gs, res.s - s_o, cfg.beta1);
        const Eigen::VectorXd dt = regularized_grad(gt, res.t - t_o, cfg.beta2);

        double step = cfg.step;
        bool accepted = false;
        if (ds.squaredNorm() + dt.squaredNorm() > 0.0) {
            for (int h = 0; h <= cfg.max_halvings; ++h, step *= 0.5) {
                const Eigen::VectorXd s_new = res.s - step * ds, t_new = res.t - step * dt;
                Eigen::VectorXd g_new;
                double sc_new = 0.0;
                const double l_new = evaluate(s_new, t_new, &g_new, &sc_new);
                if (!std::isfinite(l_new)) {
                    res.aborted = true;
                    return res;
                }
                if (l_new <= loss) {
                    res.s = s_new;
                    res.t = t_new;
                    loss = l_new;
                    gt = std::move(g_new);
                    score = sc_new;
                    accepted = true;
                    break;
                }
            }
        }
        (void)accepted;
        res.trace.push_back({it, loss, score, (res.s - s_o).norm(), (res.t - t_o).norm()});
    }
    return res;
}

}  // namespace facegen
