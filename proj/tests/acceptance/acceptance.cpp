// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include "facegen/align/registration.hpp"
#include "facegen/cli/cli.hpp"
#include "facegen/core/rng.hpp"
#include "facegen/corpus/corpus.hpp"
#include "facegen/corpus/generator.hpp"
#include "facegen/metrics/metrics.hpp"
#include "facegen/morphable/linear_model.hpp"
#include "facegen/nnet/grad_check.hpp"
#include "facegen/refine/abstract_refine.hpp"
#include "facegen/refine/scorers.hpp"
#include "facegen/shapegen/losses.hpp"
#include "facegen/shapegen/shape_net.hpp"
#include "facegen/textparse/learned_parser.hpp"
#include "facegen/textparse/pairs.hpp"
#include "facegen/textparse/rule_parser.hpp"
#include "facegen/textparse/templates.hpp"

#include <Eigen/Geometry>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <unistd.h>

using namespace facegen;
namespace fs = std::filesystem;

namespace {

const AttributeSchema& S() { return AttributeSchema::standard(); }

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    // Records a sub-check; the criterion fails if any sub-check fails.
    void require(bool ok, const std::string& what) {
        if (!ok) pass = false;
        detail << (ok ? "" : "FAILED ") << what << "; ";
    }
};

std::string fmt(double v) {
    std::ostringstream s;
    s << std::setprecision(3) << v;
    return s.str();
}

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Eigen::VectorXd gaussian(int n, Rng& rng, double scale = 1.0) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = scale * rng.normal();
    return v;
}

Eigen::Matrix3d rotation(double degrees, const Eigen::Vector3d& axis) {
    return Eigen::AngleAxisd(degrees * std::numbers::pi / 180.0, axis.normalized()).toRotationMatrix();
}

std::vector<DescriptiveCode> annotations(const Corpus& c, const std::vector<std::size_t>& which) {
    std::vector<DescriptiveCode> out;
    for (auto i : which) out.push_back(c.entries[i].annotation);
    return out;
}

// Weighted l1 and RST gradients, alone and through the shape model, plus
// back-head invariance.
void gradient_checks(Outcome& o) {
    const FaceGenerator gen(S(), GeneratorConfig{{}, 16});
    const Corpus c = generate_corpus(gen, 64, 7);
    const ShapeModel model = ShapeModel::build(c.meshes(c.train), 32);
    const RegionMasks& masks = gen.face().masks();
    const auto mouth = masks.select(FeatureRegion::mouth);
    // Both losses are piecewise linear in pred and the 2 mm offsets keep every
    // probe away from the kinks, so a wide step avoids rounding noise.
    Rng rng(1);
    double worst_l1 = 0, worst_rst = 0, worst_composed = 0;
    for (int k = 0; k < 20; ++k) {
        const Eigen::VectorXd gt = c.entries[c.train[k]].mesh.flat();
        const Eigen::VectorXd neg = c.entries[c.train[k + 20]].mesh.flat();
        const Eigen::VectorXd pred = gt + gaussian(static_cast<int>(gt.size()), rng, 2.0);
        std::vector<Eigen::Index> coords;
        for (int j = 0; j < 200; ++j) coords.push_back(static_cast<Eigen::Index>(rng.below(gt.size())));
        for (int v : mouth) coords.push_back(3 * v);
        worst_l1 = std::max(worst_l1, check_gradient(
                                          [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
                                              return weighted_l1(x, gt, masks, {}, &g);
                                          },
                                          pred, 1e-4, coords));
        worst_rst = std::max(worst_rst, check_gradient(
                                            [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
                                                g = Eigen::VectorXd::Zero(x.size());
                                                return rst_loss(x, gt, neg, mouth, 2.0, 1.3, &g);
                                            },
                                            pred, 1e-4, coords));
        const Eigen::VectorXd s0 = gaussian(32, rng);
        worst_composed = std::max(worst_composed, check_gradient(
                                                      [&](const Eigen::VectorXd& s, Eigen::VectorXd& g) {
                                                          const auto t = shape_loss(s, model, gt, &neg, &mouth, 0.5,
                                                                                    1.3, masks, {}, 0.1, &g);
                                                          return t.l1 + 0.1 * t.rst;
                                                      },
                                                      s0, 1e-6));
    }
    o.require(worst_l1 < 1e-4, "weighted l1 rel err " + fmt(worst_l1));
    o.require(worst_rst < 1e-4, "rst rel err " + fmt(worst_rst));
    o.require(worst_composed < 1e-4, "through shape model rel err " + fmt(worst_composed));

    int changed = 0;
    for (int k = 0; k < 20; ++k) {
        const Eigen::VectorXd pred = model.synthesize(gaussian(32, rng)).flat();
        Eigen::VectorXd gt = c.entries[c.train[k]].mesh.flat();
        const double before = weighted_l1(pred, gt, masks, {});
        for (int v : masks.select(Region::back_head))
            for (int a = 0; a < 3; ++a) gt[3 * v + a] += 5.0 * rng.normal();
        changed += weighted_l1(pred, gt, masks, {}) != before;
    }
    o.require(changed == 0, "back-head perturbations changing the loss: " + std::to_string(changed) + "/20");
}

void pca_exactness(Outcome& o) {
    const FaceGenerator gen(S());
    const Corpus c = generate_corpus(gen, 256, 7);
    const auto meshes = c.meshes(c.train);
    const int full = static_cast<int>(meshes.size()) - 1;
    const ShapeModel full_model = ShapeModel::build(meshes, full);
    double worst = 0;
    for (const auto& m : meshes)
        worst = std::max(worst, (full_model.synthesize(full_model.fit(m)).vertices - m.vertices).cwiseAbs().maxCoeff());
    o.require(worst <= 1e-6, "full-rank (" + std::to_string(full) + ") reconstruction max err " + fmt(worst) + " mm");

    const ShapeModel model = ShapeModel::build(meshes, 32);
    const double mean_gap =
        (model.synthesize(Eigen::VectorXd::Zero(32)).vertices - model.mean_mesh().vertices).cwiseAbs().maxCoeff();
    o.require(mean_gap == 0.0, "s=0 gives the mean (gap " + fmt(mean_gap) + ")");

    Rng rng(2);
    double span_err = 0;
    for (int k = 0; k < 50; ++k) {
        Eigen::VectorXd s = gaussian(32, rng);
        for (int i = 0; i < 32; ++i)
            if (model.linear().sigma()[i] < kSigmaFloor) s[i] = 0.0;
        span_err = std::max(span_err, (model.fit(model.synthesize(s)) - s).cwiseAbs().maxCoeff());
    }
    o.require(span_err <= 1e-6, "fit o synthesize on the span max err " + fmt(span_err));
}

void parser_accuracy(Outcome& o) {
    const auto pairs = gen_training_pairs(50000, 1);
    const auto res = train_parser(pairs, S(), ParserTrainConfig{});
    std::vector<std::string> texts;
    std::vector<DescriptiveCode> oracle;
    for (std::size_t i = 0; i < 5000; ++i) {
        const auto p = make_training_pair(2, i);
        texts.push_back(p.text);
        oracle.push_back(parse_rules(p.text));
    }
    std::vector<std::string_view> views(texts.begin(), texts.end());
    const auto acc = per_attribute_accuracy(res.parser.parse_batch(views), oracle);
    std::size_t worst = 0;
    for (std::size_t a = 0; a < acc.size(); ++a)
        if (acc[a] < acc[worst]) worst = a;
    o.require(acc[worst] >= 0.95, "min per-attribute accuracy " + fmt(acc[worst]) + " (" + S()[worst].name + ")");

    std::size_t round_trips = 0;
    for (const auto& p : pairs) round_trips += parse_rules(p.text) == p.code;
    for (std::size_t i = 0; i < 5000; ++i) round_trips += oracle[i] == make_training_pair(2, i).code;
    o.require(round_trips == pairs.size() + 5000,
              "rule parser round trips " + std::to_string(round_trips) + "/" + std::to_string(pairs.size() + 5000));
}

void shape_fidelity(Outcome& o, double& train_seconds, double& eval_seconds) {
    auto t0 = Clock::now();
    const FaceGenerator gen(S(), GeneratorConfig{{}, 16});
    const Corpus c = generate_corpus(gen, 256, 7);
    const auto meshes = c.meshes(c.train);
    const auto codes = annotations(c, c.train);
    const ShapeModel model = ShapeModel::build(meshes, 32);
    ShapeTrainConfig cfg;
    cfg.rst = calibrate_rst(meshes, codes, S(), gen.face().masks());
    const auto trained = train_shape_net(meshes, codes, model, S(), gen.face().masks(), cfg);
    train_seconds = seconds_since(t0);

    t0 = Clock::now();
    const MeasurementTable mt(gen);
    for (const char* name : {"mouth_width", "nose_size", "eye_size", "lip_thickness", "jaw_width"}) {
        const auto a = S().index_of(name);
        DescriptiveCode low = DescriptiveCode::unspecified(S()), high = low;
        low[a] = 1;
        high[a] = static_cast<int>(S()[a].option_count()) - 1;
        int ok = 0;
        for (std::uint64_t n = 0; n < 50; ++n) {
            const double hi = *mt.measure(name, model.synthesize(trained.net.predict(high, n)));
            const double lo = *mt.measure(name, model.synthesize(trained.net.predict(low, n)));
            ok += hi > lo;
        }
        o.require(ok >= 45, std::string(name) + " " + std::to_string(ok) + "/50");
    }
    eval_seconds = seconds_since(t0);
}

void registration(Outcome& o) {
    Rng rng(3);
    Vertices x(100, 3);
    for (int i = 0; i < x.size(); ++i) x.data()[i] = 50.0 * rng.normal();
    SimilarityTransform truth;
    truth.scale = 1.3;
    truth.rotation = rotation(25.0, {0, 1, 0});
    truth.translation = {5, -2, 7};
    const auto t = procrustes(x, truth.apply(x));
    const double err = std::max({std::abs(t.scale - truth.scale), (t.rotation - truth.rotation).cwiseAbs().maxCoeff(),
                                 (t.translation - truth.translation).cwiseAbs().maxCoeff()});
    o.require(err <= 1e-9, "procrustes parameter err " + fmt(err));

    const FaceGenerator gen(S(), GeneratorConfig{{}, 16});
    const FaceMesh& face = gen.face().mesh();
    double worst_cd = 0;
    for (const Eigen::Vector3d& axis : {Eigen::Vector3d(0, 1, 0), Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0.3, 1, 0.2)}) {
        SimilarityTransform p;
        p.rotation = rotation(10.0, axis);
        p.translation = 5.0 * Eigen::Vector3d(1, 1, 0).normalized();
        const Vertices moved = p.apply(face.vertices);
        const auto r = icp(moved, face, IcpConfig{2000, 1e-12, false});
        worst_cd = std::max(worst_cd, chamfer(r.transform.apply(moved), face.vertices));
    }
    o.require(worst_cd < 1e-4, "icp 10 deg / 5 mm residual cd " + fmt(worst_cd) + " mm");

    const Eigen::Vector3d tip = face.vertices.row(gen.face().masks().landmark_indices[30]).transpose();
    Vertices target = face.vertices;
    for (int i = 0; i < target.rows(); ++i)
        target(i, 2) += 8.0 * std::exp(-(target.row(i).transpose() - tip).squaredNorm() / (2 * 15.0 * 15.0));
    const auto n = nicp(face, target);
    const double mean_err = (n.mesh.vertices - target).rowwise().norm().mean();
    o.require(mean_err < 1.0, "nicp 8 mm bump mean err " + fmt(mean_err) + " mm");
}

void metric_axioms(Outcome& o) {
    Rng rng(4);
    Vertices a(300, 3), b(250, 3);
    for (int i = 0; i < a.size(); ++i) a.data()[i] = 30.0 * rng.normal();
    for (int i = 0; i < b.size(); ++i) b.data()[i] = 30.0 * rng.normal();
    o.require(chamfer(a, a) == 0.0, "cd(X,X)=0");
    o.require(chamfer(a, b) == chamfer(b, a), "symmetry");
    Vertices p(1, 3), q(1, 3);
    p << 0, 0, 0;
    q << 3, 4, 0;
    o.require(std::abs(chamfer(p, q) - 10.0) < 1e-12, "two-point cd = 2d");
    bool monotone = true;
    double prev = 0;
    for (double t = 0; t <= 100; t += 1) {
        const double cr = complete_rate(a, b, t);
        monotone &= cr >= prev;
        prev = cr;
    }
    o.require(monotone, "cr monotone in threshold");

    const FaceGenerator gen(S(), GeneratorConfig{{}, 16});
    const Corpus c = generate_corpus(gen, 32, 7);
    const auto cfg = EvalConfig::for_template(gen.face());
    double drift = 0;
    for (int k = 0; k < 10; ++k) {
        const FaceMesh& gt = c.entries[c.test[k % c.test.size()]].mesh;
        const FaceMesh& pred = c.entries[c.train[k]].mesh;
        const double base = evaluate(pred, gt, cfg).cd;
        SimilarityTransform s;
        s.rotation = rotation(rng.uniform(-30.0, 30.0), {rng.normal(), rng.normal(), rng.normal()});
        s.translation = rng.uniform(0.0, 30.0) * Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()).normalized();
        s.scale = rng.uniform(0.7, 1.4);
        drift = std::max(drift, std::abs(evaluate(s.apply(pred), gt, cfg).cd - base));
    }
    o.require(drift < 1e-6, "evaluate cd drift " + fmt(drift));
}

void refinement(Outcome& o) {
    const FaceGenerator gen(S());
    const Corpus c = generate_corpus(gen, 256, 7);
    const ShapeModel shape = ShapeModel::build(c.meshes(c.train), 32);
    const TextureModel tex = TextureModel::build(c.textures(c.train), 24);
    const auto& e = c.entries[c.test[0]];
    const Eigen::VectorXd s0 = shape.fit(e.mesh), t0 = tex.fit(e.texture);
    const MakeupScorer scorer;

    const auto res = abstract_refine(s0, t0, "wearing makeup", scorer, shape, tex, gen.layout());
    bool monotone = true;
    for (std::size_t i = 1; i < res.trace.size(); ++i) monotone &= res.trace[i].loss <= res.trace[i - 1].loss;
    const double before = mean_lip_redness(tex.synthesize(t0).clamped(), gen.layout());
    const double after = mean_lip_redness(tex.synthesize(res.t).clamped(), gen.layout());
    o.require(!res.aborted && res.trace.size() == 201, "200 iterations completed");
    o.require(after > before, "lip redness " + fmt(before) + " -> " + fmt(after));
    o.require(monotone, "monotone trace, loss " + fmt(res.trace.front().loss) + " -> " + fmt(res.trace.back().loss));

    RefineConfig pinned;
    pinned.beta1 = 1e6;
    const auto fixed = abstract_refine(s0, t0, "wearing makeup", scorer, shape, tex, gen.layout(), pinned);
    const double drift = (fixed.s - s0).norm();
    o.require(drift < 1e-3, "beta1=1e6 shape drift " + fmt(drift));
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = slurp(e.path());
    return files;
}

// Runs every CLI stage into `dir` at reduced size.
bool run_pipeline(const fs::path& dir) {
    const std::string out = dir.string();
    const std::string mesh = (dir / "synth" / "mesh.obj").string();
    const std::vector<std::vector<std::string>> stages = {
        {"corpus-gen", "--count", "48", "--texture-size", "64"},
        {"build-3dmm", "--components", "16"},
        {"build-texmodel", "--components", "12"},
        {"gen-pairs", "--count", "4000"},
        {"train-parser", "--epochs", "3", "--eval-count", "500"},
        {"train-shape", "--epochs", "10"},
        {"train-texture", "--epochs", "10"},
        {"synth", "--text", "Her eyes are big. Her lips are thick. Her skin is tan.", "--seed", "4"},
        {"refine", "--prompt", "wearing makeup", "--iterations", "10", "--view-size", "64", "--fd-components", "4"},
        {"eval", "--pred", (dir / "refine" / "mesh.obj").string(), "--gt", mesh},
        {"render", "--mesh", mesh, "--texture", (dir / "synth" / "texture.png").string()},
    };
    for (auto args : stages) {
        args.insert(args.begin(), {"facegen", "--out", out});
        std::ostringstream sink_out, sink_err;
        if (run_cli(args, sink_out, sink_err) != kExitOk) {
            std::cerr << args[3] << " failed: " << sink_err.str();
            return false;
        }
    }
    return true;
}

void determinism(Outcome& o) {
    const fs::path dir = fs::temp_directory_path() / ("facegen_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    const bool first_ok = run_pipeline(dir);
    const auto first = snapshot(dir);
    fs::remove_all(dir);
    const bool second_ok = run_pipeline(dir);
    const auto second = snapshot(dir);
    fs::remove_all(dir);
    o.require(first_ok && second_ok, "all stages exit 0");
    std::size_t differing = 0;
    for (const auto& [path, bytes] : first) {
        const auto it = second.find(path);
        if (it == second.end() || it->second != bytes) {
            ++differing;
            o.detail << "differs: " << path << "; ";
        }
    }
    o.require(differing == 0 && first.size() == second.size(),
              std::to_string(first.size()) + " artifacts, " + std::to_string(differing) + " differ");
}

struct Criterion {
    int id;
    std::string name;
    double limit_s;
    std::function<void(Outcome&)> run;
};

}  // namespace

int main() {
    double shape_train_s = 0, shape_eval_s = 0;
    const std::vector<Criterion> criteria = {
        {1, "loss gradients", 10, gradient_checks},
        {2, "3dmm exactness", 30, pca_exactness},
        {3, "parser accuracy", 300, parser_accuracy},
        {4, "shape attribute fidelity", 720,
         [&](Outcome& o) {
             shape_fidelity(o, shape_train_s, shape_eval_s);
             o.require(shape_train_s < 600, "training " + fmt(shape_train_s) + " s (limit 600)");
             o.require(shape_eval_s < 120, "evaluation " + fmt(shape_eval_s) + " s (limit 120)");
         }},
        {5, "registration", 60, registration},
        {6, "metric axioms", 30, metric_axioms},
        {7, "abstract refinement", 120, refinement},
        {8, "determinism", 0, determinism},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        Outcome o;
        const auto t0 = Clock::now();
        try {
            c.run(o);
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        const double secs = seconds_since(t0);
        if (c.limit_s > 0) o.require(secs < c.limit_s, "runtime limit " + fmt(c.limit_s) + " s");
        failures += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << ") " << std::fixed
                  << std::setprecision(2) << secs << " s: " << o.detail.str() << std::defaultfloat << std::endl;
    }
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
