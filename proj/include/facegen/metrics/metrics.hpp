#pragma once

#include "facegen/align/registration.hpp"
#include "facegen/core/face_template.hpp"
#include "facegen/core/mesh.hpp"
#include "facegen/refine/renderer.hpp"

#include <Eigen/Core>

#include <array>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

namespace facegen {

// mean_a min_b |a - b| + mean_b min_a |a - b| over vertices, in mm. Throws
// ArgumentError when either set is empty.
double chamfer(const Vertices& a, const Vertices& b);
double chamfer(const FaceMesh& a, const FaceMesh& b);

// Fraction of `a` vertices whose nearest `b` vertex is closer than threshold.
double complete_rate(const Vertices& a, const Vertices& b, double threshold = 10.0);
double complete_rate(const FaceMesh& a, const FaceMesh& b, double threshold = 10.0);

// A rendered face plus its landmark positions in the same camera frame.
struct FaceRender {
    RgbImage image;
    Vertices landmarks;
};

FaceRender render_for_identity(const FaceMesh& mesh, const RgbImage* texture, const std::vector<int>& landmarks,
                               const RenderView& view = {});

class IdentityEmbedder {
   public:
    virtual ~IdentityEmbedder() = default;
    virtual Eigen::VectorXd embed(const FaceRender& r) const = 0;
};

// Unit inter-landmark distance vector concatenated with a mean-centred unit
// 8x8 gray thumbnail, each half weighted 1/sqrt(2).
class GeometricPhotometricEmbedder : public IdentityEmbedder {
   public:
    explicit GeometricPhotometricEmbedder(int thumb = 8) : thumb_(thumb) {}
    Eigen::VectorXd embed(const FaceRender& r) const override;
    Eigen::VectorXd geometric(const Vertices& landmarks) const;
    Eigen::VectorXd photometric(const RgbImage& image) const;

   private:
    int thumb_;
};

// Cosine of the two embeddings; 0 when either is the zero vector.
double identity_similarity(const IdentityEmbedder& embedder, const FaceRender& a, const FaceRender& b);

struct EvalConfig {
    std::array<int, 2> pupils{};
    std::vector<int> landmarks;   // shared-topology indices for the rigid pre-alignment
    std::vector<int> front_mask;  // if non-empty, metrics use only these vertices
    double cr_threshold = 10.0;
    IcpConfig icp{100, 1e-10, false};
    RenderView view{};
    std::shared_ptr<const IdentityEmbedder> embedder;  // default embedder when null

    static EvalConfig for_template(const FaceTemplate& face, bool front_only = false);
};

struct EvalReport {
    double cd = 0.0;
    double cr = 0.0;
    double id_sim = 0.0;
    SimilarityTransform alignment;  // maps pred into the gt frame
};

// Interpupillary scaling, landmark-based rigid alignment (when topologies
// match), rigid ICP, then the metrics. Textures default to mid gray.
EvalReport evaluate(const FaceMesh& pred, const FaceMesh& gt, const EvalConfig& cfg);

}  // namespace facegen
