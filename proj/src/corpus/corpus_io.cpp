#include "facegen/core/code_io.hpp"
#include "facegen/core/error.hpp"
#include "facegen/core/image_io.hpp"
#include "facegen/core/mesh_io.hpp"
#include "facegen/core/rng.hpp"
#include "facegen/corpus/corpus.hpp"
#include "facegen/textparse/templates.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <numeric>
#include <map>
#include <sstream>

namespace facegen {

std::vector<FaceMesh> Corpus::meshes(const std::vector<std::size_t>& which) const {
    std::vector<FaceMesh> out;
    out.reserve(which.size());
    for (auto i : which) out.push_back(entries.at(i).mesh);
    return out;
}

std::vector<RgbImage> Corpus::textures(const std::vector<std::size_t>& which) const {
    std::vector<RgbImage> out;
    out.reserve(which.size());
    for (auto i : which) out.push_back(entries.at(i).texture);
    return out;
}

namespace {

std::string entry_id(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "f%04zu", i);
    return buf;
}

void split(Corpus& c) {
    const std::size_t n = c.entries.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(Rng::mix(c.master_seed, 0x5917));
    rng.shuffle(order);
    const std::size_t n_train = n * 8 / 10;
    c.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    c.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    std::sort(c.train.begin(), c.train.end());
    std::sort(c.test.begin(), c.test.end());
}

}  // namespace

Corpus generate_corpus(const FaceGenerator& gen, std::size_t count, std::uint64_t master_seed) {
    if (count < 2) throw ArgumentError("a corpus needs at least 2 identities");
    Corpus c;
    c.master_seed = master_seed;
    c.config = gen.config();
    c.entries.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        CorpusEntry e;
        e.id = entry_id(i);
        e.identity = IdentityParams::random(gen.schema(), Rng::mix(master_seed, i));
        e.mesh = gen.mesh(e.identity);
        e.texture = gen.texture(e.identity);
        e.annotation = e.identity.options;
        e.freeform = compose_text(e.annotation, Rng::mix(e.identity.seed, 0xF));
        c.entries.push_back(std::move(e));
    }
    split(c);
    return c;
}

void save_corpus(const Corpus& corpus, const AttributeSchema& schema, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    manifest["format_version"] = 1;
    manifest["schema"] = schema.fingerprint();
    manifest["master_seed"] = corpus.master_seed;
    manifest["texture_size"] = corpus.config.texture_size;
    manifest["template"] = {{"columns", corpus.config.mesh.columns}, {"rows", corpus.config.mesh.rows}};
    nlohmann::json ids = nlohmann::json::array(), identities = nlohmann::json::array();
    for (const auto& e : corpus.entries) {
        const auto sub = dir / e.id;
        std::filesystem::create_directories(sub);
        save_mesh(e.mesh, sub / "mesh.obj");
        write_png(e.texture, sub / "tex.png");
        std::ofstream(sub / "annotation.json") << serialize_record({e.id, e.annotation, e.freeform}, schema);
        ids.push_back(e.id);
        identities.push_back({{"id", e.id}, {"seed", e.identity.seed}, {"jitter", e.identity.jitter}});
    }
    auto names = [&](const std::vector<std::size_t>& idx) {
        nlohmann::json a = nlohmann::json::array();
        for (auto i : idx) a.push_back(corpus.entries[i].id);
        return a;
    };
    manifest["ids"] = ids;
    manifest["identities"] = identities;
    manifest["train"] = names(corpus.train);
    manifest["test"] = names(corpus.test);
    std::ofstream out(dir / "manifest.json");
    if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
    out << manifest.dump(2) << "\n";
}

Corpus load_corpus(const std::filesystem::path& dir, const AttributeSchema& schema) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw IoError("no corpus manifest in " + dir.string());
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("corpus manifest: ") + e.what(), 1);
    }
    if (manifest.at("schema").get<std::string>() != schema.fingerprint())
        throw SchemaError("corpus was generated with a different attribute schema");
    Corpus c;
    c.master_seed = manifest.at("master_seed").get<std::uint64_t>();
    c.config.texture_size = manifest.at("texture_size").get<int>();
    c.config.mesh.columns = manifest.at("template").at("columns").get<int>();
    c.config.mesh.rows = manifest.at("template").at("rows").get<int>();
    std::map<std::string, std::size_t> index;
    const auto& identities = manifest.at("identities");
    for (std::size_t i = 0; i < identities.size(); ++i) {
        const auto& rec = identities[i];
        CorpusEntry e;
        e.id = rec.at("id").get<std::string>();
        const auto sub = dir / e.id;
        e.mesh = load_mesh(sub / "mesh.obj");
        e.texture = read_png(sub / "tex.png");
        std::ifstream a(sub / "annotation.json");
        if (!a) throw IoError("missing annotation for " + e.id);
        std::stringstream ss;
        ss << a.rdbuf();
        const auto record = parse_record(ss.str(), schema);
        e.annotation = record.code;
        e.freeform = record.freeform;
        e.identity.seed = rec.at("seed").get<std::uint64_t>();
        e.identity.options = record.code;
        e.identity.jitter = rec.at("jitter").get<std::vector<double>>();
        index[e.id] = c.entries.size();
        c.entries.push_back(std::move(e));
    }
    auto lookup = [&](const char* key) {
        std::vector<std::size_t> out;
        for (const auto& id : manifest.at(key)) {
            auto it = index.find(id.get<std::string>());
            if (it == index.end()) throw ValidationError(std::string("split '") + key + "' names an unknown id");
            out.push_back(it->second);
        }
        return out;
    };
    c.train = lookup("train");
    c.test = lookup("test");
    return c;
}

}  // namespace facegen
