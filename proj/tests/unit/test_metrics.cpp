#include "facegen/align/registration.hpp"
#include "facegen/core/error.hpp"
#include "facegen/core/rng.hpp"
#include "facegen/metrics/metrics.hpp"
#include "facegen/morphable/linear_model.hpp"
#include "test_support.hpp"

#include <Eigen/Geometry>
#include <gtest/gtest.h>

#include <limits>
#include <numbers>

using namespace facegen;

namespace {

const AttributeSchema& S() { return AttributeSchema::standard(); }
const FaceTemplate& tmpl() { return test::generator().face(); }

Vertices random_points(int n, std::uint64_t seed) {
    Rng rng(seed);
    Vertices v(n, 3);
    for (int i = 0; i < v.size(); ++i) v.data()[i] = 30.0 * rng.normal();
    return v;
}

FaceMesh textured(const CorpusEntry& e) {
    FaceMesh m = e.mesh;
    m.texture = e.texture;
    return m;
}

SimilarityTransform random_similarity(Rng& rng) {
    SimilarityTransform t;
    const Eigen::Vector3d axis(rng.normal(), rng.normal(), rng.normal());
    t.rotation = Eigen::AngleAxisd(rng.uniform(-30.0, 30.0) * std::numbers::pi / 180.0, axis.normalized())
                     .toRotationMatrix();
    const Eigen::Vector3d dir = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()).normalized();
    t.translation = rng.uniform(0.0, 30.0) * dir;
    t.scale = rng.uniform(0.7, 1.4);
    return t;
}

}  // namespace

TEST(Chamfer, ZeroOnSelf) {
    const Vertices x = random_points(200, 1);
    EXPECT_EQ(chamfer(x, x), 0.0);
}

TEST(Chamfer, Symmetric) {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const Vertices a = random_points(100, s), b = random_points(150, s + 100);
        EXPECT_DOUBLE_EQ(chamfer(a, b), chamfer(b, a));
        EXPECT_GE(chamfer(a, b), 0.0);
    }
}

TEST(Chamfer, TwoPointsAtDistanceD) {
    Vertices a(1, 3), b(1, 3);
    a << 1, 2, 3;
    b << 1, 2, 3 + 4.5;
    EXPECT_DOUBLE_EQ(chamfer(a, b), 9.0);
}

TEST(Chamfer, EmptyIsArgumentError) {
    EXPECT_THROW(chamfer(Vertices(0, 3), random_points(3, 1)), ArgumentError);
    EXPECT_THROW(complete_rate(random_points(3, 1), Vertices(0, 3)), ArgumentError);
}

TEST(CompleteRate, IdenticalIsOne) {
    const Vertices x = random_points(100, 2);
    EXPECT_EQ(complete_rate(x, x), 1.0);
}

TEST(CompleteRate, DistantPatchIsZero) {
    Vertices patch(25, 3);
    for (int i = 0; i < 25; ++i) patch.row(i) << i % 5, i / 5, 0.0;
    Vertices moved = patch;
    moved.col(2).array() += 20.0;
    EXPECT_EQ(complete_rate(patch, moved, 10.0), 0.0);
    EXPECT_EQ(complete_rate(patch, moved, std::numeric_limits<double>::infinity()), 1.0);
}

TEST(CompleteRate, MonotoneInThreshold) {
    const Vertices a = random_points(200, 3), b = random_points(200, 4);
    double prev = 0.0;
    for (double t = 0.0; t <= 80.0; t += 2.5) {
        const double cr = complete_rate(a, b, t);
        EXPECT_GE(cr, prev);
        prev = cr;
    }
}

TEST(IdentitySimilarity, SameRenderIsOne) {
    const auto& e = test::corpus256().entries[0];
    const auto r = render_for_identity(e.mesh, &e.texture, tmpl().masks().landmark_indices);
    EXPECT_NEAR(identity_similarity(GeometricPhotometricEmbedder{}, r, r), 1.0, 1e-9);
}

TEST(IdentitySimilarity, GeometricPartIgnoresBrightness) {
    const auto& e = test::corpus256().entries[1];
    const auto r = render_for_identity(e.mesh, &e.texture, tmpl().masks().landmark_indices);
    FaceRender dim = r;
    for (double& v : dim.image.data) v *= 0.5;
    const GeometricPhotometricEmbedder emb;
    const Eigen::VectorXd a = emb.embed(r), b = emb.embed(dim);
    const Eigen::Index n = emb.geometric(r.landmarks).size();
    EXPECT_EQ(a.head(n), b.head(n));
}

TEST(IdentitySimilarity, AntonymFaceShapesLessSimilarThanResynthesis) {
    const auto& gen = test::generator();
    const auto face_shape = S().index_of("face_shape");
    const auto& lm = tmpl().masks().landmark_indices;
    const GeometricPhotometricEmbedder emb;
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        IdentityParams a = IdentityParams::random(S(), seed);
        int anti = S()[face_shape].antonym_of(a.options[face_shape]);
        if (anti < 0) anti = S()[face_shape].antonym_of(a.options[face_shape] = 1);
        IdentityParams b = a;
        b.options[face_shape] = anti;
        IdentityParams resynth = a;
        for (double& j : resynth.jitter) j *= 0.9;
        const auto ra = render_for_identity(gen.mesh(a), nullptr, lm);
        const auto rb = render_for_identity(gen.mesh(b), nullptr, lm);
        const auto rr = render_for_identity(gen.mesh(resynth), nullptr, lm);
        ok += identity_similarity(emb, ra, rb) < identity_similarity(emb, ra, rr);
    }
    EXPECT_EQ(ok, 10);
}

TEST(Evaluate, SelfIsPerfect) {
    const FaceMesh gt = textured(test::corpus256().entries[5]);
    const auto rep = evaluate(gt, gt, EvalConfig::for_template(tmpl()));
    EXPECT_LT(rep.cd, 1e-9);
    EXPECT_EQ(rep.cr, 1.0);
    EXPECT_NEAR(rep.id_sim, 1.0, 1e-9);
}

TEST(Evaluate, UndoesRandomSimilarity) {
    const FaceMesh gt = test::corpus256().entries[6].mesh;
    Rng rng(8);
    for (int k = 0; k < 10; ++k) {
        const FaceMesh pred = random_similarity(rng).apply(gt);
        EXPECT_LT(evaluate(pred, gt, EvalConfig::for_template(tmpl())).cd, 1e-3);
    }
}

TEST(Evaluate, InvariantToPreAppliedSimilarity) {
    const auto& c = test::corpus256();
    const FaceMesh gt = c.entries[c.test[0]].mesh, pred = c.entries[c.test[1]].mesh;
    const auto cfg = EvalConfig::for_template(tmpl());
    const double base = evaluate(pred, gt, cfg).cd;
    Rng rng(9);
    for (int k = 0; k < 10; ++k) {
        const double cd = evaluate(random_similarity(rng).apply(pred), gt, cfg).cd;
        EXPECT_LT(std::abs(cd - base), 1e-6);
    }
}

TEST(Evaluate, MeanFaceWorseThanResynthesis) {
    const auto& c = test::corpus256();
    const ShapeModel model = ShapeModel::build(c.meshes(c.train), 32);
    const auto cfg = EvalConfig::for_template(tmpl());
    for (std::size_t i : {c.test[0], c.test[1], c.test[2], c.test[3]}) {
        const FaceMesh& gt = c.entries[i].mesh;
        const FaceMesh resynth = model.synthesize(model.fit(gt));
        EXPECT_GT(evaluate(model.mean_mesh(), gt, cfg).cd, evaluate(resynth, gt, cfg).cd);
    }
}

TEST(Evaluate, FrontMaskRestrictsVertices) {
    const auto& c = test::corpus256();
    const FaceMesh gt = c.entries[0].mesh;
    FaceMesh pred = gt;
    for (int v : tmpl().masks().select(Region::back_head)) pred.vertices(v, 2) -= 5.0;
    EXPECT_LT(evaluate(pred, gt, EvalConfig::for_template(tmpl(), true)).cd,
              evaluate(pred, gt, EvalConfig::for_template(tmpl(), false)).cd);
}
