#include "facegen/core/error.hpp"
#include "facegen/core/rng.hpp"
#include "facegen/textparse/embedding.hpp"
#include "facegen/textparse/learned_parser.hpp"
#include "facegen/textparse/pairs.hpp"
#include "facegen/textparse/rule_parser.hpp"
#include "facegen/textparse/templates.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

using namespace facegen;

namespace {

const AttributeSchema& S() { return AttributeSchema::standard(); }

DescriptiveCode random_code(Rng& rng) {
    DescriptiveCode c = DescriptiveCode::unspecified(S());
    for (std::size_t a = 0; a < S().size(); ++a) c[a] = static_cast<int>(rng.below(S()[a].option_count()));
    return c;
}

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return a.dot(b) / (a.norm() * b.norm()); }

}  // namespace

TEST(Compose, UnspecifiedCodeIsEmpty) { EXPECT_EQ(compose_text(DescriptiveCode::unspecified(S()), 1), ""); }

TEST(Compose, SingleAttributeSentence) {
    DescriptiveCode c = DescriptiveCode::unspecified(S());
    const auto eye = S().index_of("eye_size");
    c[eye] = S().option_index(eye, "medium-sized");
    EXPECT_EQ(TemplateSet::standard().render(eye, c[eye], 0, false), "His eyes are medium-sized.");
    bool seen = false;
    for (std::uint64_t s = 0; s < 20; ++s) seen |= compose_text(c, s) == "His eyes are medium-sized.";
    EXPECT_TRUE(seen);
}

TEST(Compose, EveryPatternReparsesForEveryOption) {
    const auto& t = TemplateSet::standard();
    for (std::size_t a = 0; a < S().size(); ++a)
        for (int o = 1; o < static_cast<int>(S()[a].option_count()); ++o)
            for (int pattern = 0; pattern < TemplateSet::kPatterns; ++pattern)
                for (bool female : {false, true}) {
                    const std::string text = t.render(a, o, pattern, female);
                    DescriptiveCode expect = DescriptiveCode::unspecified(S());
                    expect[a] = o;
                    EXPECT_EQ(parse_rules(text), expect) << text;
                }
}

TEST(Compose, SeedsOnlyReorder) {
    Rng rng(4);
    for (int k = 0; k < 50; ++k) {
        const auto c = random_code(rng);
        EXPECT_EQ(parse_rules(compose_text(c, 1)), parse_rules(compose_text(c, 2)));
        auto count = [](const std::string& s) { return std::count(s.begin(), s.end(), '.'); };
        EXPECT_EQ(count(compose_text(c, 1)), static_cast<long>(c.specified_count()));
        EXPECT_EQ(count(compose_text(c, 1)), count(compose_text(c, 9)));
    }
}

TEST(RuleParser, RoundTripsComposedText) {
    Rng rng(12);
    for (int k = 0; k < 2000; ++k) {
        const auto c = random_code(rng);
        ASSERT_EQ(parse_rules(compose_text(c, rng.next_u64())), c);
    }
}

TEST(RuleParser, EmptyTextIsUnspecified) { EXPECT_EQ(parse_rules(""), DescriptiveCode::unspecified(S())); }

TEST(RuleParser, ContradictionIsAmbiguityError) {
    try {
        parse_rules("His eyes are big. His eyes are small.");
        FAIL() << "expected AmbiguityError";
    } catch (const AmbiguityError& e) {
        EXPECT_FALSE(e.first_phrase().empty());
        EXPECT_FALSE(e.second_phrase().empty());
        EXPECT_NE(e.first_phrase(), e.second_phrase());
    }
}

TEST(RuleParser, SynonymsResolvedByNoun) {
    const auto c = parse_rules("His eyes are big. His nose is small.");
    EXPECT_EQ(c[S().index_of("eye_size")], S().option_index(S().index_of("eye_size"), "big"));
    EXPECT_EQ(c[S().index_of("nose_size")], S().option_index(S().index_of("nose_size"), "tiny"));
    EXPECT_EQ(c.specified_count(), 2u);
}

TEST(RuleParser, Tokenization) {
    EXPECT_EQ(tokenize_words("His Eyes are WIDE-set, he's"), (std::vector<std::string>{"his", "eyes", "are",
                                                                                        "wide-set", "he's"}));
    EXPECT_EQ(split_sentences("a. b! c? d; e\nf").size(), 6u);
}

TEST(Embedding, UnitNormAndDeterministic) {
    const auto a = embed_text("His eyes are big."), b = embed_text("His eyes are big.");
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.size(), kEmbeddingDim);
    EXPECT_NEAR(a.norm(), 1.0, 1e-9);
}

TEST(Embedding, EmptyIsFirstBasisVector) {
    const auto e = embed_text("");
    EXPECT_EQ(e[0], 1.0);
    EXPECT_EQ(e.squaredNorm(), 1.0);
}

TEST(Embedding, PunctuationSuffixCloserThanUnrelatedText) {
    Rng rng(31);
    int ok = 0;
    for (int k = 0; k < 100; ++k) {
        const auto c = random_code(rng);
        DescriptiveCode perm = c;
        for (std::size_t a = 0; a < S().size(); ++a)
            perm[a] = static_cast<int>((c[a] + 1) % static_cast<int>(S()[a].option_count()));
        const std::string t = compose_text(c, k), u = compose_text(perm, k + 1000);
        if (t.empty() || u.empty()) {
            ++ok;
            continue;
        }
        ok += cosine(embed_text(t), embed_text(t + " .")) > cosine(embed_text(t), embed_text(u));
    }
    EXPECT_EQ(ok, 100);
}

TEST(Pairs, EachPairRoundTripsThroughRuleParser) {
    const auto pairs = gen_training_pairs(2000, 5);
    for (const auto& p : pairs) ASSERT_EQ(parse_rules(p.text), p.code) << p.text;
}

TEST(Pairs, DeterministicStream) {
    const auto a = make_training_pair(1, 49999), b = make_training_pair(1, 49999);
    EXPECT_EQ(a.text, b.text);
    EXPECT_EQ(a.code, b.code);
    const auto first = gen_training_pairs(1, 1);
    EXPECT_EQ(first[0].text, make_training_pair(1, 0).text);
}

TEST(Pairs, AttributeCountSupportedOnThreeToTwentyFour) {
    const auto pairs = gen_training_pairs(10000, 8);
    std::vector<int> hist(25, 0);
    for (const auto& p : pairs) ++hist[p.code.specified_count()];
    for (int k = 0; k < 3; ++k) EXPECT_EQ(hist[k], 0);
    for (int k = 3; k <= 24; ++k) EXPECT_GT(hist[k], 0) << k;
}

TEST(Pairs, JsonlRoundTrip) {
    const auto pairs = gen_training_pairs(50, 3);
    std::stringstream ss;
    write_pairs_jsonl(ss, pairs, S());
    const auto back = read_pairs_jsonl(ss, S());
    ASSERT_EQ(back.size(), pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        EXPECT_EQ(back[i].text, pairs[i].text);
        EXPECT_EQ(back[i].code, pairs[i].code);
    }
}

TEST(Pairs, JsonlBadLineReportsLine) {
    std::stringstream ss("{\"text\": \"a\", \"code\": {}}\nnot json\n");
    try {
        read_pairs_jsonl(ss, S());
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
}

TEST(CrossEntropy, NonNegativeAndSmallWhenConfident) {
    const int rows = 24;
    Eigen::MatrixXd target = Eigen::MatrixXd::Zero(rows * 8, 1);
    for (int r = 0; r < rows; ++r) target(r * 8 + 1, 0) = 1.0;
    Eigen::MatrixXd logits = Eigen::MatrixXd::Zero(rows * 8, 1);
    EXPECT_NEAR(row_softmax_cross_entropy(logits, target, rows, nullptr), std::log(8.0), 1e-12);
    logits = 30.0 * target;
    const double l = row_softmax_cross_entropy(logits, target, rows, nullptr);
    EXPECT_GE(l, 0.0);
    EXPECT_LT(l, 1e-3);
}

TEST(LearnedParser, SinglePairOverfit) {
    std::vector<TextCodePair> pairs{make_training_pair(3, 0)};
    ParserTrainConfig cfg;
    cfg.epochs = 500;
    cfg.batch = 1;
    cfg.decay_epoch = 1000;
    std::vector<double> curve;
    const auto res = train_parser(pairs, S(), cfg, [&](int, double l) { curve.push_back(l); });
    EXPECT_EQ(res.parser.parse(pairs[0].text), pairs[0].code);
    EXPECT_LT(res.epoch_loss.back(), 1e-3);
    EXPECT_LT(curve.back(), curve.front());
}

TEST(LearnedParser, ShortTrainingLossDecreasesAndArchiveRoundTrips) {
    const auto pairs = gen_training_pairs(2000, 4);
    ParserTrainConfig cfg;
    cfg.epochs = 3;
    const auto res = train_parser(pairs, S(), cfg);
    EXPECT_LT(res.epoch_loss.back(), res.epoch_loss.front());
    const LearnedParser back = LearnedParser::from_archive(res.parser.to_archive(), S());
    for (int i = 0; i < 20; ++i) EXPECT_EQ(back.parse(pairs[i].text), res.parser.parse(pairs[i].text));
}

TEST(LearnedParser, DecodeRespectsOptionCounts) {
    const auto pairs = gen_training_pairs(10, 4);
    ParserTrainConfig cfg;
    cfg.epochs = 1;
    const auto res = train_parser(pairs, S(), cfg);
    Eigen::VectorXd logits = Eigen::VectorXd::Zero(24 * 8);
    for (int r = 0; r < 24; ++r) logits[r * 8 + 7] = 100.0;  // invalid for most rows
    EXPECT_NO_THROW(res.parser.decode(logits).validate(S()));
}

TEST(LearnedParser, MismatchedSchemaArchiveRejected) {
    const auto pairs = gen_training_pairs(10, 4);
    ParserTrainConfig cfg;
    cfg.epochs = 1;
    Archive a = train_parser(pairs, S(), cfg).parser.to_archive();
    a.meta()["schema"] = "different";
    EXPECT_THROW(LearnedParser::from_archive(a, S()), ValidationError);
}
