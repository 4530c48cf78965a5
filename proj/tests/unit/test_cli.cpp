#include "facegen/cli/cli.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <fstream>
#include <sstream>

using namespace facegen;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliRun {
    int code;
    std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
    args.insert(args.begin(), "facegen");
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

// Byte-level snapshot of every file under a directory, keyed by relative path.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = slurp(e.path());
    return files;
}

// A small end-to-end run shared by the pipeline tests.
const fs::path& pipeline() {
    static const fs::path root = [] {
        const fs::path dir = test::scratch_dir("cli_pipeline");
        const std::string out = dir.string();
        const std::vector<std::vector<std::string>> stages = {
            {"corpus-gen", "--count", "40", "--texture-size", "32"},
            {"build-3dmm", "--components", "8"},
            {"build-texmodel", "--components", "8"},
            {"gen-pairs", "--count", "2000"},
            {"train-parser", "--epochs", "2", "--eval-count", "200"},
            {"train-shape", "--epochs", "3", "--noise-dim", "16"},
            {"train-texture", "--epochs", "3", "--noise-dim", "8"},
            {"synth", "--text", "His eyes are big. His nose is small.", "--seed", "1", "--parser", "rule",
             "--preview-size", "32"},
        };
        for (auto args : stages) {
            args.insert(args.begin(), {"--out", out});
            const CliRun r = cli(args);
            EXPECT_EQ(r.code, 0) << args[2] << ": " << r.err;
        }
        return dir;
    }();
    return root;
}

}  // namespace

TEST(CliHelp, MainMatchesGolden) {
    const CliRun r = cli({"--help"});
    EXPECT_EQ(r.code, kExitOk);
    EXPECT_EQ(r.out, slurp(fs::path(FACEGEN_GOLDEN_DIR) / "help.txt"));
}

TEST(CliHelp, SubcommandsMatchGolden) {
    for (const char* sub : {"corpus-gen", "build-3dmm", "build-texmodel", "gen-pairs", "train-parser", "train-shape",
                            "train-texture", "synth", "refine", "eval", "render"}) {
        const CliRun r = cli({sub, "--help"});
        EXPECT_EQ(r.code, kExitOk) << sub;
        EXPECT_EQ(r.out, slurp(fs::path(FACEGEN_GOLDEN_DIR) / ("help_" + std::string(sub) + ".txt"))) << sub;
    }
}

TEST(CliExit, MissingSubcommandIsUsageError) { EXPECT_EQ(cli({}).code, kExitUsage); }

TEST(CliExit, UnknownSubcommandIsUsageError) { EXPECT_EQ(cli({"bogus"}).code, kExitUsage); }

TEST(CliExit, BadIntegerPrintsHelpAndIsUsageError) {
    const CliRun r = cli({"synth", "--seed", "x"});
    EXPECT_EQ(r.code, kExitUsage);
    EXPECT_NE(r.err.find("Usage: facegen synth"), std::string::npos);
}

TEST(CliExit, OutOfRangeValueIsUsageError) {
    const auto dir = test::scratch_dir("cli_range");
    EXPECT_EQ(cli({"--out", dir.string(), "corpus-gen", "--count", "1"}).code, kExitUsage);
    EXPECT_EQ(cli({"--out", dir.string(), "refine", "--prompt", "x", "--scorer", "joker"}).code, kExitUsage);
}

TEST(CliExit, MissingInputIsRuntimeError) {
    const auto dir = test::scratch_dir("cli_missing");
    const CliRun r = cli({"--out", dir.string(), "render", "--mesh", (dir / "nope.obj").string()});
    EXPECT_EQ(r.code, kExitRuntime);
    EXPECT_NE(r.err.find("facegen render: error"), std::string::npos);
}

TEST(CliConfig, FileSuppliesDefaultsAndFlagsOverride) {
    const auto dir = test::scratch_dir("cli_config");
    std::ofstream(dir / "cfg.json") << R"({"corpus-gen": {"count": 6, "seed": 3, "texture_size": 16}})";
    const CliRun r = cli({"--config", (dir / "cfg.json").string(), "--out", (dir / "out").string(), "corpus-gen",
                       "--seed", "9"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const json echoed = read_json(dir / "out" / "corpus" / "config.json");
    EXPECT_EQ(echoed["corpus-gen"]["count"], 6);
    EXPECT_EQ(echoed["corpus-gen"]["seed"], 9);
    EXPECT_EQ(echoed["corpus-gen"]["texture_size"], 16);
    EXPECT_EQ(echoed["out"], (dir / "out").string());
    EXPECT_NE(r.err.find("[facegen]"), std::string::npos);
}

TEST(CliConfig, UnknownKeyAndWrongTypeAreUsageErrors) {
    const auto dir = test::scratch_dir("cli_config_bad");
    std::ofstream(dir / "a.json") << R"({"corpus-gen": {"cuont": 6}})";
    std::ofstream(dir / "b.json") << R"({"corpus-gen": {"count": "six"}})";
    std::ofstream(dir / "c.json") << R"({"corpus-gen": {"count": 6.5}})";
    std::ofstream(dir / "d.json") << "{not json";
    for (const char* f : {"a.json", "b.json", "c.json", "d.json"})
        EXPECT_EQ(cli({"--config", (dir / f).string(), "--out", dir.string(), "corpus-gen"}).code, kExitUsage) << f;
}

TEST(CliPipeline, StagesWriteArtifactsAndConfigs) {
    const auto& root = pipeline();
    for (const char* stage : {"corpus", "3dmm", "texmodel", "pairs", "parser", "shape", "texture", "synth"})
        EXPECT_TRUE(fs::exists(root / stage / "config.json")) << stage;
    EXPECT_TRUE(fs::exists(root / "synth" / "mesh.obj"));
    EXPECT_TRUE(fs::exists(root / "synth" / "texture.png"));
    EXPECT_TRUE(fs::exists(root / "parser" / "accuracy.json"));
    const json code = read_json(root / "synth" / "code.json");
    EXPECT_EQ(code["eye_size"], "big");
    EXPECT_EQ(code["nose_size"], "tiny");
}

TEST(CliPipeline, SynthIsByteIdenticalOnRerun) {
    const auto& root = pipeline();
    const auto first = snapshot(root / "synth");
    const CliRun r = cli({"--out", root.string(), "synth", "--text", "His eyes are big. His nose is small.", "--seed",
                       "1", "--parser", "rule", "--preview-size", "32"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_EQ(snapshot(root / "synth"), first);
}

TEST(CliPipeline, LearnedParserPathRuns) {
    const auto& root = pipeline();
    const auto dir = test::scratch_dir("cli_learned");
    const CliRun r = cli({"--out", root.string(), "synth", "--text", "Her lips are thick.", "--seed", "2",
                       "--preview-size", "32"});
    EXPECT_EQ(r.code, kExitOk) << r.err;
}

TEST(CliPipeline, EvalOfMeshAgainstItself) {
    const auto& root = pipeline();
    const std::string mesh = (root / "synth" / "mesh.obj").string();
    const CliRun r = cli({"--out", root.string(), "eval", "--pred", mesh, "--gt", mesh});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const json rep = read_json(root / "eval" / "report.json");
    EXPECT_LT(rep["mean"]["cd"].get<double>(), 1e-9);
    EXPECT_EQ(rep["mean"]["cr"].get<double>(), 1.0);
    EXPECT_FALSE(r.out.empty());
}

TEST(CliPipeline, EvalPairCountMismatchIsUsageError) {
    const auto& root = pipeline();
    const std::string mesh = (root / "synth" / "mesh.obj").string();
    EXPECT_EQ(cli({"--out", root.string(), "eval", "--pred", mesh, "--pred", mesh, "--gt", mesh}).code, kExitUsage);
}

TEST(CliPipeline, RefineWritesTrace) {
    const auto& root = pipeline();
    const CliRun r = cli({"--out", root.string(), "refine", "--prompt", "wearing makeup", "--iterations", "3",
                       "--view-size", "32", "--fd-components", "2"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    std::ifstream trace(root / "refine" / "trace.jsonl");
    int lines = 0;
    for (std::string line; std::getline(trace, line);) ++lines;
    EXPECT_EQ(lines, 4);
    EXPECT_TRUE(fs::exists(root / "refine" / "mesh.obj"));
}

TEST(CliPipeline, RenderWritesOneImagePerYaw) {
    const auto& root = pipeline();
    const CliRun r = cli({"--out", root.string(), "render", "--mesh", (root / "synth" / "mesh.obj").string(), "--texture",
                       (root / "synth" / "texture.png").string(), "--yaw", "-20,20", "--size", "32"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_TRUE(fs::exists(root / "render" / "view_0.png"));
    EXPECT_TRUE(fs::exists(root / "render" / "view_1.png"));
    EXPECT_FALSE(fs::exists(root / "render" / "view_2.png"));
}

TEST(CliDeterminism, CorpusStageByteIdentical) {
    const auto a = test::scratch_dir("cli_det_a"), b = test::scratch_dir("cli_det_b");
    for (const auto& d : {a, b})
        ASSERT_EQ(cli({"--out", d.string(), "corpus-gen", "--count", "6", "--texture-size", "16"}).code, kExitOk);
    auto sa = snapshot(a / "corpus"), sb = snapshot(b / "corpus");
    sa.erase("config.json");
    sb.erase("config.json");
    EXPECT_EQ(sa, sb);
}
