#include "facegen/core/error.hpp"
#include "facegen/core/image_io.hpp"
#include "facegen/corpus/corpus.hpp"
#include "facegen/corpus/generator.hpp"
#include "facegen/textparse/rule_parser.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace facegen;
using test::generator;

namespace {
const AttributeSchema& S() { return AttributeSchema::standard(); }
}  // namespace

TEST(Identity, SameSeedIsBitIdentical) {
    const auto a = IdentityParams::random(S(), 99), b = IdentityParams::random(S(), 99);
    EXPECT_EQ(a.options, b.options);
    EXPECT_EQ(a.jitter, b.jitter);
    const FaceMesh ma = generator().mesh(a), mb = generator().mesh(b);
    EXPECT_EQ(ma.vertices, mb.vertices);
    EXPECT_EQ(generator().texture(a).data, generator().texture(b).data);
}

TEST(Identity, EveryAttributeSpecifiedAndJitterBounded) {
    for (std::uint64_t s = 0; s < 50; ++s) {
        const auto p = IdentityParams::random(S(), s);
        EXPECT_NO_THROW(p.validate(S()));
        EXPECT_EQ(p.options.specified_count(), S().size());
        for (double j : p.jitter) {
            EXPECT_GE(j, -0.5);
            EXPECT_LE(j, 0.5);
        }
    }
}

TEST(Identity, ValidateRejectsBadJitter) {
    auto p = IdentityParams::random(S(), 1);
    p.jitter[0] = 0.7;
    EXPECT_THROW(p.validate(S()), ValidationError);
}

TEST(Generator, WideMouthHasLargerCornerDistance) {
    auto p = IdentityParams::random(S(), 5);
    const auto mouth = S().index_of("mouth_width");
    const MeasurementTable mt(generator());
    p.options[mouth] = S().option_index(mouth, "wide");
    const double wide = *mt.measure("mouth_width", generator().mesh(p));
    p.options[mouth] = S().option_index(mouth, "narrow");
    const double narrow = *mt.measure("mouth_width", generator().mesh(p));
    EXPECT_GT(wide, narrow);
}

TEST(Generator, DeepSkinIsDarkerThanPale) {
    auto p = IdentityParams::random(S(), 8);
    const auto skin = S().index_of("skin_tone");
    p.options[skin] = S().option_index(skin, "deep");
    const double deep = mean_skin_luminance(generator().texture(p), generator().layout());
    p.options[skin] = S().option_index(skin, "pale");
    const double pale = mean_skin_luminance(generator().texture(p), generator().layout());
    EXPECT_LT(deep, pale);
}

TEST(Generator, MeasurementsStrictlyMonotoneInOptionRank) {
    const MeasurementTable mt(generator());
    const auto names = mt.attributes();
    EXPECT_GE(names.size(), 10u);
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        const auto base = IdentityParams::random(S(), seed);
        for (const auto& name : names) {
            const auto a = S().index_of(name);
            double prev = -std::numeric_limits<double>::infinity();
            for (int o = 1; o < static_cast<int>(S()[a].option_count()); ++o) {
                auto p = base;
                p.options[a] = o;
                const double m = *mt.measure(name, generator().mesh(p));
                EXPECT_GT(m, prev) << name << " option " << o << " seed " << seed;
                prev = m;
            }
        }
    }
}

TEST(Generator, DisplacementFromMeanIsBounded) {
    const auto& mean = generator().face().mesh().vertices;
    for (const auto& e : test::corpus256().entries)
        EXPECT_LE((e.mesh.vertices - mean).rowwise().norm().maxCoeff(), 25.0) << e.id;
}

TEST(Corpus, DeterministicSplit) {
    const Corpus a = generate_corpus(generator(), 256, 7);
    EXPECT_EQ(a.train, test::corpus256().train);
    EXPECT_EQ(a.test, test::corpus256().test);
}

TEST(Corpus, TenIdentitiesSplitEightTwo) {
    const Corpus c = generate_corpus(generator(), 10, 3);
    EXPECT_EQ(c.train.size(), 8u);
    EXPECT_EQ(c.test.size(), 2u);
}

TEST(Corpus, CountBelowTwoThrows) { EXPECT_THROW(generate_corpus(generator(), 1, 3), ArgumentError); }

TEST(Corpus, SharedTopologyAndFullAnnotation) {
    const auto& c = test::corpus256();
    for (const auto& e : c.entries) {
        EXPECT_EQ(e.mesh.faces, generator().face().mesh().faces);
        EXPECT_EQ(e.annotation.specified_count(), S().size());
        EXPECT_EQ(e.annotation, e.identity.options);
        EXPECT_EQ(parse_rules(e.freeform), e.annotation);
    }
}

TEST(Corpus, OptionMarginalsNearUniform) {
    const auto& c = test::corpus256();
    const double n = static_cast<double>(c.entries.size());
    for (std::size_t a = 0; a < S().size(); ++a) {
        const int k = static_cast<int>(S()[a].option_count()) - 1;
        const double p = 1.0 / k, sigma = std::sqrt(n * p * (1 - p));
        for (int o = 1; o <= k; ++o) {
            double count = 0;
            for (const auto& e : c.entries) count += e.annotation[a] == o;
            EXPECT_LE(std::abs(count - n * p), 5 * sigma) << S()[a].name << " option " << o;
        }
    }
}

TEST(Corpus, SaveLoadRoundTrip) {
    const Corpus c = generate_corpus(FaceGenerator(S(), GeneratorConfig{{}, 32}), 6, 4);
    const auto dir = test::scratch_dir("corpus");
    save_corpus(c, S(), dir);
    EXPECT_TRUE(std::filesystem::exists(dir / "manifest.json"));
    EXPECT_TRUE(std::filesystem::exists(dir / c.entries[0].id / "mesh.obj"));
    EXPECT_TRUE(std::filesystem::exists(dir / c.entries[0].id / "tex.png"));
    const Corpus back = load_corpus(dir, S());
    ASSERT_EQ(back.entries.size(), c.entries.size());
    EXPECT_EQ(back.train, c.train);
    EXPECT_EQ(back.test, c.test);
    for (std::size_t i = 0; i < c.entries.size(); ++i) {
        EXPECT_LE((back.entries[i].mesh.vertices - c.entries[i].mesh.vertices).cwiseAbs().maxCoeff(), 1e-6);
        EXPECT_EQ(back.entries[i].annotation, c.entries[i].annotation);
        EXPECT_EQ(back.entries[i].texture.width, 32);
    }
}
