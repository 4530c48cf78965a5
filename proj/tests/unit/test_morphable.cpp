#include "facegen/core/error.hpp"
#include "facegen/core/rng.hpp"
#include "facegen/morphable/linear_model.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace facegen;

namespace {

const ShapeModel& shape32() {
    static const ShapeModel m = [] {
        const auto& c = test::corpus256();
        return ShapeModel::build(c.meshes(c.train), 32);
    }();
    return m;
}

Eigen::VectorXd gaussian(int n, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.normal();
    return v;
}

Eigen::MatrixXd low_rank_samples(int dim, int rank, int m, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd a(dim, rank), b(rank, m);
    for (int i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
    for (int i = 0; i < b.size(); ++i) b.data()[i] = rng.normal();
    Eigen::VectorXd offset = gaussian(dim, seed + 1);
    return (a * b).colwise() + offset;
}

// Coefficients of components with a degenerate sigma carry no geometry.
Eigen::VectorXd on_span(const LinearModel& lm, Eigen::VectorXd c) {
    for (int k = 0; k < lm.components(); ++k)
        if (lm.sigma()[k] < kSigmaFloor) c[k] = 0.0;
    return c;
}

}  // namespace

TEST(LinearModel, ExactReconstructionWithinSpan) {
    const Eigen::MatrixXd x = low_rank_samples(60, 5, 12, 3);
    const LinearModel lm = LinearModel::build(x, 5);
    for (int j = 0; j < x.cols(); ++j)
        EXPECT_LE((lm.synthesize(lm.fit(x.col(j))) - x.col(j)).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_NEAR(lm.retained_variance(), 1.0, 1e-9);
}

TEST(LinearModel, ZeroCoefficientsGiveMean) {
    const Eigen::MatrixXd x = low_rank_samples(30, 4, 10, 5);
    const LinearModel lm = LinearModel::build(x, 4);
    EXPECT_EQ(lm.synthesize(Eigen::VectorXd::Zero(4)), lm.mean());
    EXPECT_LE((lm.mean() - x.rowwise().mean()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(LinearModel, OrthonormalBasisAndSignConvention) {
    const LinearModel& lm = shape32().linear();
    const Eigen::MatrixXd g = lm.basis().transpose() * lm.basis();
    EXPECT_LE((g - Eigen::MatrixXd::Identity(32, 32)).cwiseAbs().maxCoeff(), 1e-9);
    for (int k = 0; k < 32; ++k) {
        Eigen::Index i;
        lm.basis().col(k).cwiseAbs().maxCoeff(&i);
        EXPECT_GT(lm.basis()(i, k), 0.0);
    }
    for (int k = 1; k < 32; ++k) EXPECT_GE(lm.sigma()[k - 1], lm.sigma()[k]);
}

TEST(LinearModel, SynthesizeIsAffineAndFitInvertsIt) {
    const LinearModel& lm = shape32().linear();
    const Eigen::VectorXd a = on_span(lm, gaussian(32, 1)), b = on_span(lm, gaussian(32, 2));
    const double alpha = 0.3;
    const Eigen::VectorXd lhs = lm.synthesize(alpha * a + (1 - alpha) * b);
    const Eigen::VectorXd rhs = alpha * lm.synthesize(a) + (1 - alpha) * lm.synthesize(b);
    EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE((lm.fit(lm.synthesize(a)) - a).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(LinearModel, ProjectionIsIdempotent) {
    const auto& c = test::corpus256();
    const LinearModel& lm = shape32().linear();
    for (std::size_t i : {c.test[0], c.test[1], c.test[2]}) {
        const Eigen::VectorXd x = c.entries[i].mesh.flat();
        const Eigen::VectorXd p1 = lm.synthesize(lm.fit(x)), p2 = lm.synthesize(lm.fit(p1));
        EXPECT_LE((p1 - p2).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(LinearModel, RetainedVarianceMonotoneInComponents) {
    const auto& c = test::corpus256();
    const auto meshes = c.meshes(c.train);
    double prev = 0.0;
    for (int m : {1, 4, 8, 16, 32}) {
        const double r = ShapeModel::build(meshes, m).linear().retained_variance();
        EXPECT_GE(r, prev);
        prev = r;
    }
    EXPECT_GE(prev, 0.99);
}

TEST(LinearModel, FitOfProjectionEqualsFit) {
    const auto& c = test::corpus256();
    const LinearModel& lm = shape32().linear();
    const Eigen::VectorXd x = c.entries[c.test[3]].mesh.flat();
    const Eigen::VectorXd f = lm.fit(x);
    EXPECT_LE((lm.fit(lm.synthesize(f)) - f).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(LinearModel, PullbackMatchesFiniteDifference) {
    const LinearModel& lm = shape32().linear();
    const Eigen::VectorXd w = gaussian(lm.dim(), 9);
    const Eigen::VectorXd g = lm.pullback(w);
    const Eigen::VectorXd s = gaussian(32, 10);
    for (int k = 0; k < 32; k += 7) {
        Eigen::VectorXd sp = s, sm = s;
        sp[k] += 1e-4;
        sm[k] -= 1e-4;
        const double fd = (w.dot(lm.synthesize(sp)) - w.dot(lm.synthesize(sm))) / 2e-4;
        EXPECT_NEAR(g[k], fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
}

TEST(LinearModel, IdenticalSamplesGiveZeroSigma) {
    Eigen::MatrixXd x(20, 6);
    x.colwise() = gaussian(20, 4);
    const LinearModel lm = LinearModel::build(x, 3);
    EXPECT_LT(lm.sigma().cwiseAbs().maxCoeff(), kSigmaFloor);
    EXPECT_EQ(lm.fit(x.col(0)), Eigen::VectorXd::Zero(3));
    EXPECT_EQ(lm.synthesize(Eigen::VectorXd::Ones(3)), x.col(0));
}

TEST(LinearModel, TooFewSamplesIsRankError) {
    EXPECT_THROW(LinearModel::build(low_rank_samples(10, 3, 4, 1), 4), RankError);
}

TEST(LinearModel, WrongCoefficientCountIsArgumentError) {
    EXPECT_THROW(shape32().linear().synthesize(Eigen::VectorXd::Zero(31)), ArgumentError);
}

TEST(ShapeModel, MeshLevelFitSynth) {
    const ShapeModel& sm = shape32();
    EXPECT_EQ(sm.mean_mesh().faces, test::generator().face().mesh().faces);
    const Eigen::VectorXd s = on_span(sm.linear(), gaussian(32, 3));
    const FaceMesh m = sm.synthesize(s);
    EXPECT_LE((sm.fit(m) - s).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_EQ(sm.synthesize(Eigen::VectorXd::Zero(32)).vertices, sm.mean_mesh().vertices);
}

TEST(ShapeModel, MismatchedTopologyRejected) {
    const auto& c = test::corpus256();
    auto meshes = c.meshes({0, 1, 2, 3, 4});
    meshes[2].faces.row(0) << 0, 2, 1;
    EXPECT_THROW(ShapeModel::build(meshes, 2), ValidationError);
}

TEST(ShapeModel, ArchiveRoundTrip) {
    const ShapeModel back = ShapeModel::from_archive(shape32().to_archive());
    EXPECT_EQ(back.linear().basis(), shape32().linear().basis());
    EXPECT_EQ(back.linear().sigma(), shape32().linear().sigma());
    EXPECT_EQ(back.topology().faces, shape32().topology().faces);
}

TEST(TextureModel, ReconstructsTrainingSpanAndMean) {
    const FaceGenerator gen(AttributeSchema::standard(), GeneratorConfig{{}, 32});
    const Corpus c = generate_corpus(gen, 40, 2);
    const auto tex = c.textures(c.train);
    const TextureModel tm = TextureModel::build(tex, static_cast<int>(tex.size()) - 1);
    for (const auto& t : tex) {
        const RgbImage r = tm.synthesize(tm.fit(t));
        EXPECT_LE((r.flat() - t.flat()).cwiseAbs().maxCoeff(), 1e-6);
    }
    const RgbImage mean = tm.synthesize(Eigen::VectorXd::Zero(tm.components()));
    EXPECT_EQ(mean.width, 32);
    EXPECT_EQ(mean.flat(), tm.linear().mean());
    const Eigen::VectorXd t = on_span(tm.linear(), gaussian(tm.components(), 5));
    EXPECT_LE((tm.fit(tm.synthesize(t)) - t).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(TextureModel, ArchiveRoundTrip) {
    const FaceGenerator gen(AttributeSchema::standard(), GeneratorConfig{{}, 16});
    const Corpus c = generate_corpus(gen, 12, 2);
    const TextureModel tm = TextureModel::build(c.textures(c.train), 4);
    const TextureModel back = TextureModel::from_archive(tm.to_archive());
    EXPECT_EQ(back.width(), 16);
    EXPECT_EQ(back.linear().basis(), tm.linear().basis());
}
