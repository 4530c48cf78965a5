#include "facegen/cli/cli.hpp"

#include "facegen/core/archive.hpp"
#include "facegen/core/code_io.hpp"
#include "facegen/core/error.hpp"
#include "facegen/core/image_io.hpp"
#include "facegen/core/mesh_io.hpp"
#include "facegen/core/rng.hpp"
#include "facegen/corpus/corpus.hpp"
#include "facegen/metrics/metrics.hpp"
#include "facegen/morphable/linear_model.hpp"
#include "facegen/refine/abstract_refine.hpp"
#include "facegen/refine/renderer.hpp"
#include "facegen/refine/scorers.hpp"
#include "facegen/shapegen/losses.hpp"
#include "facegen/shapegen/shape_net.hpp"
#include "facegen/texgen/mapping_net.hpp"
#include "facegen/textparse/learned_parser.hpp"
#include "facegen/textparse/pairs.hpp"
#include "facegen/textparse/rule_parser.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

namespace facegen {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// Built-in defaults; a config file section of the same name overrides them and
// command-line flags override both.
json builtin_defaults() {
    return json::parse(R"({
  "out": "out",
  "template": {"columns": 49, "rows": 40},
  "corpus-gen": {"count": 256, "seed": 7, "texture_size": 256},
  "build-3dmm": {"corpus": "", "components": 32},
  "build-texmodel": {"corpus": "", "components": 24},
  "gen-pairs": {"count": 50000, "seed": 1},
  "train-parser": {"pairs": "", "epochs": 20, "batch": 128, "lr": 0.001, "decay_epoch": 10,
                   "hidden": 128, "hidden_layers": 6, "input_gain": 8.0, "seed": 1,
                   "eval_count": 5000, "eval_seed": 2},
  "train-shape": {"corpus": "", "model": "", "epochs": 200, "batch": 16, "lr": 0.001, "hidden": 128,
                  "hidden_layers": 6, "noise_dim": 512, "rst_weight": 0.1, "code_gain": 8.0,
                  "drop_prob": 0.0, "seed": 1},
  "train-texture": {"corpus": "", "model": "", "epochs": 200, "batch": 16, "lr": 0.001, "hidden": 128,
                    "hidden_layers": 2, "noise_dim": 64, "code_gain": 8.0, "drop_prob": 0.0, "seed": 1},
  "synth": {"text": "", "seed": 0, "parser": "learned", "parser_dir": "", "shape_model": "",
            "texture_model": "", "shape_net": "", "texture_net": "", "preview_size": 128},
  "refine": {"prompt": "", "scorer": "makeup", "from": "", "shape_model": "", "texture_model": "",
             "beta1": 3.0, "beta2": 0.003, "iterations": 200, "step": 0.05, "fd_components": 16,
             "view_size": 128},
  "eval": {"pred": [], "gt": [], "pred_texture": [], "gt_texture": [], "threshold": 10.0,
           "front_only": false},
  "render": {"mesh": "", "texture": "", "yaw": [-30.0, 0.0, 30.0], "size": 128, "mm_per_pixel": 1.6}
})");
}

// Directory under the output root written by each subcommand.
const std::map<std::string, std::string>& stage_dirs() {
    static const std::map<std::string, std::string> dirs = {
        {"corpus-gen", "corpus"}, {"build-3dmm", "3dmm"},     {"build-texmodel", "texmodel"},
        {"gen-pairs", "pairs"},   {"train-parser", "parser"}, {"train-shape", "shape"},
        {"train-texture", "texture"}, {"synth", "synth"},     {"refine", "refine"},
        {"eval", "eval"},         {"render", "render"}};
    return dirs;
}

bool same_kind(const json& a, const json& b) {
    if (a.is_number() && b.is_number()) return true;
    return a.type() == b.type();
}

// Overlays `over` onto `base`, rejecting unknown keys and type changes.
void overlay(json& base, const json& over, const std::string& where) {
    if (!over.is_object()) throw ValidationError("config: '" + where + "' must be an object");
    for (const auto& [k, v] : over.items()) {
        if (!base.contains(k)) throw ValidationError("config: unknown key '" + where + "." + k + "'");
        json& slot = base[k];
        if (slot.is_object()) {
            overlay(slot, v, where + "." + k);
        } else {
            if (!same_kind(slot, v)) throw ValidationError("config: wrong type for '" + where + "." + k + "'");
            if (slot.is_number_integer() && !v.is_number_integer())
                throw ValidationError("config: '" + where + "." + k + "' must be an integer");
            slot = v;
        }
    }
}

std::string describe_default(const json& v) {
    if (v.is_string()) return v.get<std::string>().empty() ? "" : " (default: " + v.get<std::string>() + ")";
    if (v.is_array()) {
        if (v.empty()) return "";
        std::string s;
        for (const auto& e : v) s += (s.empty() ? "" : ",") + e.dump();
        return " (default: " + s + ")";
    }
    return " (default: " + v.dump() + ")";
}

// Binds command-line flags to keys of a stage section.
// Validator without a help-text suffix; the type name already says it.
CLI::Validator quiet(CLI::Validator v) { return v.description(""); }

class FlagSet {
   public:
    FlagSet(CLI::App* app, const json& defaults) : app_(app), defaults_(defaults) {}

    void add(const std::string& flag, const std::string& key, const std::string& help) {
        const json& d = defaults_.at(key);
        Binding& b = bindings_.emplace_back();
        b.key = key;
        b.kind = d.type();
        const std::string text = help + describe_default(d);
        if (d.is_boolean()) {
            b.opt = app_->add_flag(flag, b.flag, text);
        } else if (d.is_array()) {
            b.opt = app_->add_option(flag, b.list, text)->delimiter(',');
            b.opt->type_name(d.empty() ? "PATH" : "NUM");
            b.numeric = !d.empty();
            if (b.numeric) b.opt->check(quiet(CLI::Number));
        } else {
            b.opt = app_->add_option(flag, b.text, text);
            if (d.is_number_integer()) b.opt->type_name("INT")->check(quiet(CLI::TypeValidator<std::int64_t>()));
            else if (d.is_number()) b.opt->type_name("NUM")->check(quiet(CLI::Number));
            else b.opt->type_name(key == "text" || key == "prompt" || key == "parser" || key == "scorer" ? "TEXT"
                                                                                                         : "PATH");
        }
    }

    void apply(json& section) const {
        for (const auto& b : bindings_) {
            if (b.opt->count() == 0) continue;
            if (b.kind == json::value_t::boolean) {
                section[b.key] = b.flag;
            } else if (b.kind == json::value_t::array) {
                json arr = json::array();
                for (const auto& s : b.list) {
                    if (b.numeric) arr.push_back(std::stod(s));
                    else arr.push_back(s);
                }
                section[b.key] = arr;
            } else if (b.kind == json::value_t::number_integer || b.kind == json::value_t::number_unsigned) {
                section[b.key] = std::stoll(b.text);
            } else if (b.kind == json::value_t::number_float) {
                section[b.key] = std::stod(b.text);
            } else {
                section[b.key] = b.text;
            }
        }
    }

   private:
    struct Binding {
        std::string key;
        json::value_t kind{};
        CLI::Option* opt = nullptr;
        std::string text;
        std::vector<std::string> list;
        bool flag = false;
        bool numeric = false;
    };
    CLI::App* app_;
    const json& defaults_;
    std::deque<Binding> bindings_;
};

// State shared by the stage runners.
struct Context {
    json config;  // effective config (globals + the active stage section)
    json stage;   // effective stage section
    fs::path out_root;
    std::ostream& out;
    std::ostream& err;

    void log(const std::string& msg) const { err << "[facegen] " << msg << '\n'; }

    fs::path stage_dir(const std::string& stage) const { return out_root / stage_dirs().at(stage); }

    // A path setting, or the default stage directory when empty.
    fs::path input(const std::string& key, const std::string& producer) const {
        const std::string v = stage.at(key).get<std::string>();
        return v.empty() ? stage_dir(producer) : fs::path(v);
    }

    long long integer(const std::string& key, long long lo, long long hi) const {
        const long long v = stage.at(key).get<long long>();
        if (v < lo || v > hi)
            throw ValidationError(key + " must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        return v;
    }
    double real(const std::string& key, double lo, double hi) const {
        const double v = stage.at(key).get<double>();
        if (!std::isfinite(v) || v < lo || v > hi) throw ValidationError(key + " is out of range");
        return v;
    }
    std::uint64_t seed(const std::string& key) const {
        return static_cast<std::uint64_t>(integer(key, 0, std::numeric_limits<long long>::max()));
    }

    GeneratorConfig generator_config(int texture_size) const {
        GeneratorConfig g;
        g.mesh.columns = config.at("template").at("columns").get<int>();
        g.mesh.rows = config.at("template").at("rows").get<int>();
        g.texture_size = texture_size;
        return g;
    }
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    f << text;
    if (!f) throw IoError("failed writing " + path.string());
}

json read_json(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot read " + path.string());
    try {
        return json::parse(f);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what(), 1);
    }
}

fs::path prepare_stage(const Context& ctx, const std::string& stage) {
    const fs::path dir = ctx.stage_dir(stage);
    fs::create_directories(dir);
    json echo = ctx.config;
    echo["stage"] = stage;
    write_text(dir / "config.json", echo.dump(2) + "\n");
    return dir;
}

std::vector<DescriptiveCode> annotations(const Corpus& c, const std::vector<std::size_t>& which) {
    std::vector<DescriptiveCode> out;
    out.reserve(which.size());
    for (auto i : which) out.push_back(c.entries[i].annotation);
    return out;
}

Corpus load_corpus_at(const Context& ctx, const fs::path& dir) {
    ctx.log("loading corpus from " + dir.string());
    return load_corpus(dir, AttributeSchema::standard());
}

json vector_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

Eigen::VectorXd json_vector(const json& a) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
    return v;
}

void write_previews(const FaceMesh& mesh, const RgbImage& tex, int size, const fs::path& dir) {
    for (const auto& view : default_views(size)) {
        std::ostringstream name;
        name << "preview_yaw" << std::showpos << static_cast<int>(view.yaw) << ".png";
        write_png(render(mesh, &tex, view).image, dir / name.str());
    }
}

void write_log_jsonl(const fs::path& path, const std::vector<TrainLogRecord>& log) {
    std::ostringstream s;
    for (const auto& r : log)
        s << json{{"epoch", r.epoch}, {"step", r.step}, {"loss", r.l1}, {"rst", r.rst}, {"total", r.total}}.dump()
          << '\n';
    write_text(path, s.str());
}

int run_corpus_gen(const Context& ctx) {
    const auto count = static_cast<std::size_t>(ctx.integer("count", 2, 1000000));
    const int size = static_cast<int>(ctx.integer("texture_size", 16, 4096));
    const fs::path dir = prepare_stage(ctx, "corpus-gen");
    const FaceGenerator gen(AttributeSchema::standard(), ctx.generator_config(size));
    ctx.log("generating " + std::to_string(count) + " identities");
    const Corpus c = generate_corpus(gen, count, ctx.seed("seed"));
    save_corpus(c, AttributeSchema::standard(), dir);
    ctx.log("wrote " + dir.string());
    return kExitOk;
}

int run_build_3dmm(const Context& ctx) {
    const int m = static_cast<int>(ctx.integer("components", 1, 100000));
    const Corpus c = load_corpus_at(ctx, ctx.input("corpus", "corpus-gen"));
    const fs::path dir = prepare_stage(ctx, "build-3dmm");
    const ShapeModel model = ShapeModel::build(c.meshes(c.train), m);
    model.to_archive().save(dir);
    ctx.log("shape model: " + std::to_string(m) + " components, retained variance " +
            std::to_string(model.linear().retained_variance()));
    return kExitOk;
}

int run_build_texmodel(const Context& ctx) {
    const int m = static_cast<int>(ctx.integer("components", 1, 100000));
    const Corpus c = load_corpus_at(ctx, ctx.input("corpus", "corpus-gen"));
    const fs::path dir = prepare_stage(ctx, "build-texmodel");
    const TextureModel model = TextureModel::build(c.textures(c.train), m);
    model.to_archive().save(dir);
    ctx.log("texture model: " + std::to_string(m) + " components, retained variance " +
            std::to_string(model.linear().retained_variance()));
    return kExitOk;
}

int run_gen_pairs(const Context& ctx) {
    const auto n = static_cast<std::size_t>(ctx.integer("count", 1, 100000000));
    const fs::path dir = prepare_stage(ctx, "gen-pairs");
    const auto pairs = gen_training_pairs(n, ctx.seed("seed"));
    std::ostringstream s;
    write_pairs_jsonl(s, pairs, AttributeSchema::standard());
    write_text(dir / "pairs.jsonl", s.str());
    ctx.log("wrote " + std::to_string(n) + " pairs");
    return kExitOk;
}

int run_train_parser(const Context& ctx) {
    ParserTrainConfig cfg;
    cfg.epochs = static_cast<int>(ctx.integer("epochs", 1, 100000));
    cfg.batch = static_cast<int>(ctx.integer("batch", 1, 1000000));
    cfg.lr = ctx.real("lr", 1e-12, 10.0);
    cfg.decay_epoch = static_cast<int>(ctx.integer("decay_epoch", 0, 100000));
    cfg.hidden = static_cast<int>(ctx.integer("hidden", 1, 100000));
    cfg.hidden_layers = static_cast<int>(ctx.integer("hidden_layers", 0, 1000));
    cfg.input_gain = ctx.real("input_gain", 1e-12, 1e6);
    cfg.seed = ctx.seed("seed");
    const auto eval_count = static_cast<std::size_t>(ctx.integer("eval_count", 0, 100000000));

    const fs::path pairs_path = ctx.input("pairs", "gen-pairs") / "pairs.jsonl";
    std::ifstream in(pairs_path, std::ios::binary);
    if (!in) throw IoError("cannot read " + pairs_path.string());
    const auto& schema = AttributeSchema::standard();
    const auto pairs = read_pairs_jsonl(in, schema);
    const fs::path dir = prepare_stage(ctx, "train-parser");
    ctx.log("training parser on " + std::to_string(pairs.size()) + " pairs");
    const auto res = train_parser(pairs, schema, cfg, [&](int epoch, double loss) {
        ctx.log("epoch " + std::to_string(epoch) + " loss " + std::to_string(loss));
    });
    res.parser.to_archive().save(dir);
    std::ostringstream curve;
    for (std::size_t e = 0; e < res.epoch_loss.size(); ++e)
        curve << json{{"epoch", e + 1}, {"loss", res.epoch_loss[e]}}.dump() << '\n';
    write_text(dir / "loss.jsonl", curve.str());

    if (eval_count > 0) {
        const auto held = gen_training_pairs(eval_count, ctx.seed("eval_seed"));
        std::vector<std::string_view> texts;
        std::vector<DescriptiveCode> truth;
        for (const auto& p : held) {
            texts.push_back(p.text);
            truth.push_back(parse_rules(p.text));
        }
        const auto acc = per_attribute_accuracy(res.parser.parse_batch(texts), truth);
        json report = json::object();
        double worst = 1.0;
        for (std::size_t a = 0; a < acc.size(); ++a) {
            report["per_attribute"][schema[a].name] = acc[a];
            worst = std::min(worst, acc[a]);
        }
        report["min_accuracy"] = worst;
        report["held_out"] = eval_count;
        write_text(dir / "accuracy.json", report.dump(2) + "\n");
        ctx.log("held-out min per-attribute accuracy " + std::to_string(worst));
    }
    return kExitOk;
}

int run_train_shape(const Context& ctx) {
    ShapeTrainConfig cfg;
    cfg.epochs = static_cast<int>(ctx.integer("epochs", 1, 1000000));
    cfg.batch = static_cast<int>(ctx.integer("batch", 1, 1000000));
    cfg.lr = ctx.real("lr", 1e-12, 10.0);
    cfg.hidden = static_cast<int>(ctx.integer("hidden", 1, 100000));
    cfg.hidden_layers = static_cast<int>(ctx.integer("hidden_layers", 0, 1000));
    cfg.noise_dim = static_cast<int>(ctx.integer("noise_dim", 0, 1000000));
    cfg.rst_weight = ctx.real("rst_weight", 0.0, 1e6);
    cfg.code_gain = ctx.real("code_gain", 1e-12, 1e6);
    cfg.drop_prob = ctx.real("drop_prob", 0.0, 1.0);
    cfg.seed = ctx.seed("seed");

    const auto& schema = AttributeSchema::standard();
    const Corpus c = load_corpus_at(ctx, ctx.input("corpus", "corpus-gen"));
    const ShapeModel model = ShapeModel::from_archive(Archive::load(ctx.input("model", "build-3dmm"), "shape_model"));
    const FaceGenerator gen(schema, c.config);
    const fs::path dir = prepare_stage(ctx, "train-shape");
    const auto meshes = c.meshes(c.train);
    const auto codes = annotations(c, c.train);
    cfg.rst = calibrate_rst(meshes, codes, schema, gen.face().masks());
    const auto res = train_shape_net(meshes, codes, model, schema, gen.face().masks(), cfg,
                                     [&](const TrainLogRecord& r) {
                                         if (r.epoch == 1 || r.epoch % 20 == 0)
                                             ctx.log("epoch " + std::to_string(r.epoch) + " l1 " +
                                                     std::to_string(r.l1) + " rst " + std::to_string(r.rst));
                                     });
    Archive a = res.net.to_archive("shape_net");
    json rst = json::object();
    for (std::size_t r = 0; r < kNumFeatureRegions; ++r) {
        rst["margin"].push_back(cfg.rst.margin[r]);
        rst["lambda"].push_back(cfg.rst.lambda[r]);
    }
    a.meta()["rst"] = rst;
    a.save(dir);
    write_log_jsonl(dir / "log.jsonl", res.log);
    return kExitOk;
}

int run_train_texture(const Context& ctx) {
    TextureTrainConfig cfg;
    cfg.epochs = static_cast<int>(ctx.integer("epochs", 1, 1000000));
    cfg.batch = static_cast<int>(ctx.integer("batch", 1, 1000000));
    cfg.lr = ctx.real("lr", 1e-12, 10.0);
    cfg.hidden = static_cast<int>(ctx.integer("hidden", 1, 100000));
    cfg.hidden_layers = static_cast<int>(ctx.integer("hidden_layers", 0, 1000));
    cfg.noise_dim = static_cast<int>(ctx.integer("noise_dim", 0, 1000000));
    cfg.code_gain = ctx.real("code_gain", 1e-12, 1e6);
    cfg.drop_prob = ctx.real("drop_prob", 0.0, 1.0);
    cfg.seed = ctx.seed("seed");

    const auto& schema = AttributeSchema::standard();
    const Corpus c = load_corpus_at(ctx, ctx.input("corpus", "corpus-gen"));
    const TextureModel model =
        TextureModel::from_archive(Archive::load(ctx.input("model", "build-texmodel"), "texture_model"));
    const fs::path dir = prepare_stage(ctx, "train-texture");
    const auto res = train_mapping_net(c.textures(c.train), annotations(c, c.train), model, schema, cfg,
                                       [&](const TrainLogRecord& r) {
                                           if (r.epoch == 1 || r.epoch % 20 == 0)
                                               ctx.log("epoch " + std::to_string(r.epoch) + " l2 " +
                                                       std::to_string(r.l1));
                                       });
    res.net.to_archive("texture_net").save(dir);
    write_log_jsonl(dir / "log.jsonl", res.log);
    return kExitOk;
}

int run_synth(const Context& ctx) {
    const auto& schema = AttributeSchema::standard();
    const std::string text = ctx.stage.at("text").get<std::string>();
    if (text.empty()) throw ArgumentError("synth needs --text");
    const std::string parser = ctx.stage.at("parser").get<std::string>();
    if (parser != "learned" && parser != "rule") throw ArgumentError("parser must be 'learned' or 'rule'");
    const std::uint64_t seed = ctx.seed("seed");
    const int preview = static_cast<int>(ctx.integer("preview_size", 16, 4096));

    DescriptiveCode code;
    if (parser == "rule") {
        code = parse_rules(text);
    } else {
        const auto p = LearnedParser::from_archive(
            Archive::load(ctx.input("parser_dir", "train-parser"), "text_parser"), schema);
        code = p.parse(text);
    }
    const ShapeModel sm =
        ShapeModel::from_archive(Archive::load(ctx.input("shape_model", "build-3dmm"), "shape_model"));
    const TextureModel tm =
        TextureModel::from_archive(Archive::load(ctx.input("texture_model", "build-texmodel"), "texture_model"));
    const CodeRegressor shape_net =
        CodeRegressor::from_archive(Archive::load(ctx.input("shape_net", "train-shape")), schema, "shape_net");
    const CodeRegressor tex_net =
        CodeRegressor::from_archive(Archive::load(ctx.input("texture_net", "train-texture")), schema, "texture_net");
    const fs::path dir = prepare_stage(ctx, "synth");

    // Each branch sees only its rows of the code.
    const SplitCode split = split_code(code, schema);
    SplitCode shape_only = split, tex_only = split;
    shape_only.texture.setZero();
    shape_only.texture.col(0).setOnes();
    tex_only.shape.setZero();
    tex_only.shape.col(0).setOnes();
    const Eigen::VectorXd s = shape_net.predict(merge_code(shape_only, schema), Rng::mix(seed, 1));
    const auto tex = predict_texture(tex_net, tm, merge_code(tex_only, schema), Rng::mix(seed, 2));
    const FaceMesh mesh = sm.synthesize(s);

    ctx.log("code has " + std::to_string(code.specified_count()) + " specified attributes");
    write_text(dir / "code.json", code_to_json(code, schema).dump(2) + "\n");
    const json params{{"text", text}, {"seed", seed}, {"s", vector_json(s)}, {"t", vector_json(tex.t)}};
    write_text(dir / "params.json", params.dump(2) + "\n");
    save_mesh(mesh, dir / "mesh.obj");
    write_png(tex.image, dir / "texture.png");
    write_previews(mesh, tex.image, preview, dir);
    return kExitOk;
}

int run_refine(const Context& ctx) {
    const std::string prompt = ctx.stage.at("prompt").get<std::string>();
    if (prompt.empty()) throw ArgumentError("refine needs --prompt");
    const auto scorer = make_scorer(ctx.stage.at("scorer").get<std::string>());
    RefineConfig cfg;
    cfg.beta1 = ctx.real("beta1", 0.0, 1e12);
    cfg.beta2 = ctx.real("beta2", 0.0, 1e12);
    cfg.iterations = static_cast<int>(ctx.integer("iterations", 0, 1000000));
    cfg.step = ctx.real("step", 1e-12, 1e6);
    cfg.fd_components = static_cast<int>(ctx.integer("fd_components", 0, 100000));
    cfg.views = default_views(static_cast<int>(ctx.integer("view_size", 16, 4096)));

    const json params = read_json(ctx.input("from", "synth") / "params.json");
    if (!params.contains("s") || !params.contains("t")) throw ValidationError("params.json lacks s or t");
    const Eigen::VectorXd s0 = json_vector(params.at("s")), t0 = json_vector(params.at("t"));
    const ShapeModel sm =
        ShapeModel::from_archive(Archive::load(ctx.input("shape_model", "build-3dmm"), "shape_model"));
    const TextureModel tm =
        TextureModel::from_archive(Archive::load(ctx.input("texture_model", "build-texmodel"), "texture_model"));
    GeneratorConfig gc = ctx.generator_config(tm.width());
    if (tm.width() != tm.height()) throw ValidationError("texture model must be square");
    const FaceTemplate face(gc.mesh);
    const TextureLayout layout = make_texture_layout(face, tm.width(), tm.height());
    const fs::path dir = prepare_stage(ctx, "refine");

    const RefineResult res = abstract_refine(s0, t0, prompt, *scorer, sm, tm, layout, cfg);
    std::ostringstream trace;
    for (const auto& r : res.trace)
        trace << json{{"iter", r.iter}, {"loss", r.loss}, {"score", r.score}, {"reg_s", r.reg_s}, {"reg_t", r.reg_t}}
                     .dump()
              << '\n';
    write_text(dir / "trace.jsonl", trace.str());
    const FaceMesh mesh = sm.synthesize(res.s);
    const RgbImage tex = tm.synthesize(res.t).clamped();
    const json out{{"prompt", prompt}, {"scorer", scorer->name()}, {"s", vector_json(res.s)}, {"t", vector_json(res.t)}};
    write_text(dir / "params.json", out.dump(2) + "\n");
    save_mesh(mesh, dir / "mesh.obj");
    write_png(tex, dir / "texture.png");
    write_previews(mesh, tex, cfg.views.front().width, dir);
    ctx.log("loss " + std::to_string(res.trace.front().loss) + " -> " + std::to_string(res.trace.back().loss));
    if (res.aborted) throw NumericalError("refinement produced a non-finite loss; trace written");
    return kExitOk;
}

int run_eval(const Context& ctx) {
    const auto preds = ctx.stage.at("pred").get<std::vector<std::string>>();
    const auto gts = ctx.stage.at("gt").get<std::vector<std::string>>();
    const auto ptex = ctx.stage.at("pred_texture").get<std::vector<std::string>>();
    const auto gtex = ctx.stage.at("gt_texture").get<std::vector<std::string>>();
    if (preds.empty() || preds.size() != gts.size())
        throw ArgumentError("eval needs the same number of --pred and --gt meshes (at least one)");
    if ((!ptex.empty() && ptex.size() != preds.size()) || (!gtex.empty() && gtex.size() != gts.size()))
        throw ArgumentError("texture lists must match the mesh lists");
    const double threshold = ctx.real("threshold", 0.0, std::numeric_limits<double>::infinity());

    const FaceTemplate face(ctx.generator_config(16).mesh);
    EvalConfig cfg = EvalConfig::for_template(face, ctx.stage.at("front_only").get<bool>());
    cfg.cr_threshold = threshold;
    const fs::path dir = prepare_stage(ctx, "eval");

    json records = json::array();
    double cd = 0.0, cr = 0.0, id = 0.0;
    std::ostringstream table;
    table << std::left << std::setw(8) << "pair" << std::setw(14) << "cd_mm" << std::setw(10) << "cr" << "id_sim"
          << '\n';
    for (std::size_t k = 0; k < preds.size(); ++k) {
        FaceMesh pred = load_mesh(preds[k]), gt = load_mesh(gts[k]);
        if (pred.num_vertices() != face.mesh().num_vertices() || gt.num_vertices() != face.mesh().num_vertices())
            throw ValidationError("eval expects meshes with the template topology (" +
                                  std::to_string(face.mesh().num_vertices()) + " vertices)");
        if (!ptex.empty()) pred.texture = read_png(ptex[k]);
        if (!gtex.empty()) gt.texture = read_png(gtex[k]);
        const EvalReport r = evaluate(pred, gt, cfg);
        records.push_back({{"pred", preds[k]}, {"gt", gts[k]}, {"cd", r.cd}, {"cr", r.cr}, {"id_sim", r.id_sim},
                           {"alignment_scale", r.alignment.scale}});
        cd += r.cd;
        cr += r.cr;
        id += r.id_sim;
        table << std::setw(8) << k << std::setw(14) << std::setprecision(6) << r.cd << std::setw(10) << r.cr
                << r.id_sim << '\n';
    }
    const double n = static_cast<double>(preds.size());
    const json report{{"pairs", records},
                      {"mean", {{"cd", cd / n}, {"cr", cr / n}, {"id_sim", id / n}}},
                      {"threshold_mm", threshold},
                      {"front_only", !cfg.front_mask.empty()}};
    write_text(dir / "report.json", report.dump(2) + "\n");
    ctx.out << table.str();
    return kExitOk;
}

int run_render(const Context& ctx) {
    const std::string mesh_path = ctx.stage.at("mesh").get<std::string>();
    if (mesh_path.empty()) throw ArgumentError("render needs --mesh");
    const std::string tex_path = ctx.stage.at("texture").get<std::string>();
    const auto yaws = ctx.stage.at("yaw").get<std::vector<double>>();
    if (yaws.empty()) throw ArgumentError("render needs at least one yaw");
    const int size = static_cast<int>(ctx.integer("size", 16, 4096));
    const double mpp = ctx.real("mm_per_pixel", 1e-6, 1e6);
    const FaceMesh mesh = load_mesh(mesh_path);
    const RgbImage tex = tex_path.empty() ? RgbImage(8, 8, 0.7, 0.7, 0.7) : read_png(tex_path);
    const fs::path dir = prepare_stage(ctx, "render");
    for (std::size_t k = 0; k < yaws.size(); ++k) {
        RenderView v;
        v.yaw = yaws[k];
        v.width = v.height = size;
        v.mm_per_pixel = mpp;
        write_png(render(mesh, &tex, v).image, dir / ("view_" + std::to_string(k) + ".png"));
    }
    ctx.log("rendered " + std::to_string(yaws.size()) + " views");
    return kExitOk;
}

struct Subcommand {
    std::string name;
    std::string description;
    std::vector<std::array<std::string, 3>> flags;  // flag, key, help
    std::function<int(const Context&)> run;
};

std::vector<Subcommand> subcommands() {
    return {
        {"corpus-gen",
         "Generate the synthetic face corpus (meshes, textures, annotations).",
         {{"--count", "count", "Number of identities"},
          {"--seed", "seed", "Master seed"},
          {"--texture-size", "texture_size", "Texture width and height in pixels"}},
         run_corpus_gen},
        {"build-3dmm",
         "Build the PCA shape model from the corpus training split.",
         {{"--corpus", "corpus", "Corpus directory (default: <out>/corpus)"},
          {"--components", "components", "Number of retained components"}},
         run_build_3dmm},
        {"build-texmodel",
         "Build the linear texture model from the corpus training split.",
         {{"--corpus", "corpus", "Corpus directory (default: <out>/corpus)"},
          {"--components", "components", "Number of retained components"}},
         run_build_texmodel},
        {"gen-pairs",
         "Compose text/code training pairs for the parser.",
         {{"--count", "count", "Number of pairs"}, {"--seed", "seed", "Pair stream seed"}},
         run_gen_pairs},
        {"train-parser",
         "Train the learned text parser.",
         {{"--pairs", "pairs", "Pairs directory (default: <out>/pairs)"},
          {"--epochs", "epochs", "Training epochs"},
          {"--batch", "batch", "Batch size"},
          {"--lr", "lr", "Adam learning rate"},
          {"--decay-epoch", "decay_epoch", "Epoch after which the learning rate halves"},
          {"--hidden", "hidden", "Hidden layer width"},
          {"--hidden-layers", "hidden_layers", "Number of hidden layers"},
          {"--input-gain", "input_gain", "Scale applied to the text embedding"},
          {"--seed", "seed", "Initialization and shuffling seed"},
          {"--eval-count", "eval_count", "Held-out texts for the accuracy report (0 skips it)"},
          {"--eval-seed", "eval_seed", "Seed of the held-out texts"}},
         run_train_parser},
        {"train-shape",
         "Train the shape regressor (code + noise -> shape parameters).",
         {{"--corpus", "corpus", "Corpus directory (default: <out>/corpus)"},
          {"--model", "model", "Shape model directory (default: <out>/3dmm)"},
          {"--epochs", "epochs", "Training epochs"},
          {"--batch", "batch", "Batch size"},
          {"--lr", "lr", "Adam learning rate"},
          {"--hidden", "hidden", "Hidden layer width"},
          {"--hidden-layers", "hidden_layers", "Number of hidden layers"},
          {"--noise-dim", "noise_dim", "Noise vector length"},
          {"--rst-weight", "rst_weight", "Weight of the region triplet term"},
          {"--code-gain", "code_gain", "Scale applied to the one-hot code"},
          {"--drop-prob", "drop_prob", "Chance of hiding each code row during training"},
          {"--seed", "seed", "Initialization and sampling seed"}},
         run_train_shape},
        {"train-texture",
         "Train the texture mapping net (code + noise -> texture parameters).",
         {{"--corpus", "corpus", "Corpus directory (default: <out>/corpus)"},
          {"--model", "model", "Texture model directory (default: <out>/texmodel)"},
          {"--epochs", "epochs", "Training epochs"},
          {"--batch", "batch", "Batch size"},
          {"--lr", "lr", "Adam learning rate"},
          {"--hidden", "hidden", "Hidden layer width"},
          {"--hidden-layers", "hidden_layers", "Number of hidden layers"},
          {"--noise-dim", "noise_dim", "Noise vector length"},
          {"--code-gain", "code_gain", "Scale applied to the one-hot code"},
          {"--drop-prob", "drop_prob", "Chance of hiding each code row during training"},
          {"--seed", "seed", "Initialization and sampling seed"}},
         run_train_texture},
        {"synth",
         "Synthesize a textured face from a concrete description.",
         {{"--text", "text", "Description, e.g. \"Her eyes are big. Her nose is tiny.\""},
          {"--seed", "seed", "Noise seed"},
          {"--parser", "parser", "Parser to use: learned or rule"},
          {"--parser-dir", "parser_dir", "Parser directory (default: <out>/parser)"},
          {"--shape-model", "shape_model", "Shape model directory (default: <out>/3dmm)"},
          {"--texture-model", "texture_model", "Texture model directory (default: <out>/texmodel)"},
          {"--shape-net", "shape_net", "Shape regressor directory (default: <out>/shape)"},
          {"--texture-net", "texture_net", "Texture net directory (default: <out>/texture)"},
          {"--preview-size", "preview_size", "Preview image size in pixels"}},
         run_synth},
        {"refine",
         "Refine a synthesized face toward an abstract prompt.",
         {{"--prompt", "prompt", "Abstract description, e.g. \"wearing makeup\""},
          {"--scorer", "scorer", "Prompt scorer: makeup, aging, brightness or constant"},
          {"--from", "from", "Directory with params.json (default: <out>/synth)"},
          {"--shape-model", "shape_model", "Shape model directory (default: <out>/3dmm)"},
          {"--texture-model", "texture_model", "Texture model directory (default: <out>/texmodel)"},
          {"--beta1", "beta1", "Shape regularizer weight"},
          {"--beta2", "beta2", "Texture regularizer weight"},
          {"--iterations", "iterations", "Gradient steps"},
          {"--step", "step", "Initial step size"},
          {"--fd-components", "fd_components", "Shape components probed by finite differences"},
          {"--view-size", "view_size", "Render size in pixels"}},
         run_refine},
        {"eval",
         "Compare predicted and ground-truth meshes (CD, CR, identity similarity).",
         {{"--pred", "pred", "Predicted mesh (OBJ); repeat for several pairs"},
          {"--gt", "gt", "Ground-truth mesh (OBJ); repeat for several pairs"},
          {"--pred-texture", "pred_texture", "Texture PNG of each predicted mesh"},
          {"--gt-texture", "gt_texture", "Texture PNG of each ground-truth mesh"},
          {"--threshold", "threshold", "Complete-rate distance threshold in mm"},
          {"--front-only", "front_only", "Score only front-face vertices"}},
         run_eval},
        {"render",
         "Render a mesh from one or more yaw angles.",
         {{"--mesh", "mesh", "Mesh to render (OBJ)"},
          {"--texture", "texture", "Texture PNG (default: flat gray)"},
          {"--yaw", "yaw", "Yaw angles in degrees, comma separated"},
          {"--size", "size", "Image width and height in pixels"},
          {"--mm-per-pixel", "mm_per_pixel", "Orthographic scale"}},
         run_render},
    };
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    const json defaults = builtin_defaults();
    CLI::App app{"Text-to-3D face pipeline: corpus, models, training, synthesis, refinement and evaluation.",
                 "facegen"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path, out_dir;
    app.add_option("--config", config_path, "JSON config file supplying defaults")->type_name("PATH");
    app.add_option("--out", out_dir, "Output root (default: out)")->type_name("PATH");

    const auto subs = subcommands();
    std::deque<FlagSet> flagsets;
    std::vector<CLI::App*> apps;
    for (const auto& s : subs) {
        CLI::App* sub = app.add_subcommand(s.name, s.description);
        FlagSet& fs_ = flagsets.emplace_back(sub, defaults.at(s.name));
        for (const auto& [flag, key, help] : s.flags) fs_.add(flag, key, help);
        apps.push_back(sub);
    }

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        if (code == 0) return kExitOk;
        const CLI::App* failed = &app;
        for (const auto* sub : apps)
            if (sub->parsed()) failed = sub;
        err << (failed == &app ? app.help() : failed->help("facegen"));
        return kExitUsage;
    }

    std::size_t which = 0;
    while (!apps[which]->parsed()) ++which;
    const Subcommand& sub = subs[which];

    try {
        json effective = defaults;
        if (!config_path.empty()) {
            const json file = read_json(config_path);
            overlay(effective, file, "config");
        }
        if (!out_dir.empty()) effective["out"] = out_dir;
        flagsets[which].apply(effective[sub.name]);

        json config{{"out", effective["out"]}, {"template", effective["template"]}, {sub.name, effective[sub.name]}};
        Context ctx{config, effective[sub.name], fs::path(effective["out"].get<std::string>()), out, err};
        return sub.run(ctx);
    } catch (const ValidationError& e) {
        err << "facegen " << sub.name << ": error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const json::exception& e) {
        err << "facegen " << sub.name << ": error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "facegen " << sub.name << ": error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

}  // namespace facegen
