#include "maskscope/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>

#include <nlohmann/json.hpp>

#include "maskscope/parallel.hpp"
#include "maskscope/tensor_io.hpp"

namespace maskscope::io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& where, const std::string& what) {
    throw ManifestError("manifest schema: " + where + ": " + what);
}

const json& require(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) schema_error(where, std::string("missing field \"") + key + "\"");
    return *it;
}

std::string require_string(const json& v, const std::string& where) {
    if (!v.is_string()) schema_error(where, "expected a string");
    return v.get<std::string>();
}

std::vector<std::string> string_list(const json& v, const std::string& where) {
    if (!v.is_array()) schema_error(where, "expected an array of strings");
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < v.size(); ++i) {
        auto s = require_string(v[i], where + "[" + std::to_string(i) + "]");
        if (!seen.insert(s).second) schema_error(where, "duplicate value \"" + s + "\"");
        out.push_back(std::move(s));
    }
    return out;
}

std::uint32_t positive_dim(const json& v, const std::string& where) {
    if (!v.is_number_integer()) schema_error(where, "expected a positive integer");
    const auto x = v.get<std::int64_t>();
    if (x < 1 || x > std::numeric_limits<std::uint32_t>::max()) schema_error(where, "expected a positive integer");
    return static_cast<std::uint32_t>(x);
}

ImageEntry parse_entry(const json& e, std::size_t index, const DatasetManifest& m) {
    const std::string where = "entries[" + std::to_string(index) + "]";
    if (!e.is_object()) schema_error(where, "expected an object");
    ImageEntry entry;
    entry.id = require_string(require(e, "id", where), where + ".id");

    const auto& cls = require(e, "class", where);
    if (!cls.is_number_integer()) schema_error(where + ".class", "expected an integer");
    const auto ci = cls.get<std::int64_t>();
    if (ci < 0 || static_cast<std::size_t>(ci) >= m.classes.size()) {
        schema_error(where + ".class", "class index " + std::to_string(ci) + " out of range for entry " + entry.id);
    }
    entry.class_index = static_cast<std::size_t>(ci);

    const auto& img = require(e, "image", where);
    if (!img.is_null()) entry.image = require_string(img, where + ".image");
    entry.segmentation = require_string(require(e, "segmentation", where), where + ".segmentation");

    const auto& size = require(e, "image_size", where);
    if (!size.is_array() || size.size() != 2) schema_error(where + ".image_size", "expected [H0, W0]");
    entry.height = positive_dim(size[0], where + ".image_size[0]");
    entry.width = positive_dim(size[1], where + ".image_size[1]");

    const auto& tensors = require(e, "tensors", where);
    if (!tensors.is_object()) schema_error(where + ".tensors", "expected an object keyed by model id");
    for (const auto& [model, paths] : tensors.items()) {
        const std::string tw = where + ".tensors." + model;
        if (!m.has_model(model)) schema_error(tw, "unknown model \"" + model + "\"");
        if (!paths.is_object()) schema_error(tw, "expected {\"activation\", \"gradient\"}");
        entry.tensors[model] = {require_string(require(paths, "activation", tw), tw + ".activation"),
                                require_string(require(paths, "gradient", tw), tw + ".gradient")};
    }
    for (const auto& model : m.models) {
        if (!entry.tensors.contains(model)) {
            schema_error(where + ".tensors", "entry " + entry.id + " has no tensors for model \"" + model + "\"");
        }
    }
    return entry;
}

// Checks one entry's files; returns the per-model conv geometry it observed.
std::map<std::string, ModelGeometry> validate_entry(const DatasetManifest& m, const ImageEntry& entry) {
    auto load = [&](const fs::path& p, const std::string& what) {
        const auto full = m.resolve(p);
        if (!fs::exists(full)) {
            throw ManifestError("entry " + entry.id + ": missing " + what + " file " + full.string());
        }
        try {
            return load_tensor(full);
        } catch (const TensorFormatError& err) {
            throw ManifestError("entry " + entry.id + ": " + what + ": " + err.what());
        }
    };

    const auto seg = load(entry.segmentation, "segmentation");
    if (seg.dtype() != DType::u16 || seg.rank() != 2 || seg.shape()[0] != entry.height ||
        seg.shape()[1] != entry.width) {
        throw ManifestError("entry " + entry.id + ": segmentation must be u16 [" + std::to_string(entry.height) + "," +
                            std::to_string(entry.width) + "], got " + std::string(dtype_name(seg.dtype())) + " " +
                            shape_string(seg.shape()));
    }

    std::map<std::string, ModelGeometry> seen;
    for (const auto& model : m.models) {
        const auto& paths = entry.tensors.at(model);
        const auto act = load(paths.activation, "activation (model " + model + ")");
        const auto grad = load(paths.gradient, "gradient (model " + model + ")");
        for (const auto* t : {&act, &grad}) {
            if (t->dtype() != DType::f32 || t->rank() != 3) {
                throw ManifestError("entry " + entry.id + ", model " + model + ": tensors must be f32 [K,H,W], got " +
                                    std::string(dtype_name(t->dtype())) + " " + shape_string(t->shape()));
            }
        }
        if (act.shape() != grad.shape()) {
            throw ManifestError("shape mismatch in entry " + entry.id + ", model " + model + ": activation " +
                                shape_string(act.shape()) + " vs gradient " + shape_string(grad.shape()));
        }
        seen[model] = {act.shape()[0], act.shape()[1], act.shape()[2]};
    }
    return seen;
}

}  // namespace

fs::path DatasetManifest::resolve(const fs::path& p) const {
    return p.is_absolute() ? p : base_dir / p;
}

fs::path DatasetManifest::tensor_path(const ImageEntry& entry, const std::string& model, TensorKind kind) const {
    auto it = entry.tensors.find(model);
    if (it == entry.tensors.end()) {
        throw ManifestError("entry " + entry.id + " has no tensors for model \"" + model + "\"");
    }
    return resolve(kind == TensorKind::activation ? it->second.activation : it->second.gradient);
}

bool DatasetManifest::has_model(const std::string& model) const {
    return std::find(models.begin(), models.end(), model) != models.end();
}

std::vector<std::size_t> DatasetManifest::class_counts() const {
    std::vector<std::size_t> counts(classes.size(), 0);
    for (const auto& e : entries) ++counts[e.class_index];
    return counts;
}

DatasetManifest load_manifest(const fs::path& path, LoadOptions options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ManifestError("cannot open manifest " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ManifestError("manifest " + path.string() + " is not valid JSON: " + e.what());
    }
    if (!doc.is_object()) schema_error("<root>", "expected an object");

    DatasetManifest m;
    m.source = path;
    m.base_dir = path.parent_path();
    m.classes = string_list(require(doc, "classes", "<root>"), "classes");
    m.models = string_list(require(doc, "models", "<root>"), "models");

    const auto& entries = require(doc, "entries", "<root>");
    if (!entries.is_array()) schema_error("entries", "expected an array");
    std::set<std::string> ids;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        auto entry = parse_entry(entries[i], i, m);
        if (!ids.insert(entry.id).second) schema_error("entries[" + std::to_string(i) + "].id", "duplicate id " + entry.id);
        m.entries.push_back(std::move(entry));
    }

    if (!options.validate_tensors) return m;

    std::vector<std::map<std::string, ModelGeometry>> observed(m.entries.size());
    parallel_for(m.entries.size(), [&](std::size_t i) { observed[i] = validate_entry(m, m.entries[i]); });
    for (std::size_t i = 0; i < m.entries.size(); ++i) {
        for (const auto& [model, geo] : observed[i]) {
            auto [it, inserted] = m.geometry.emplace(model, geo);
            if (!inserted && it->second != geo) {
                throw ManifestError("shape mismatch in entry " + m.entries[i].id + ", model " + model + ": [" +
                                    std::to_string(geo.channels) + "," + std::to_string(geo.rows) + "," +
                                    std::to_string(geo.cols) + "] differs from the model's [" +
                                    std::to_string(it->second.channels) + "," + std::to_string(it->second.rows) + "," +
                                    std::to_string(it->second.cols) + "]");
            }
        }
    }
    return m;
}

void save_manifest(const DatasetManifest& manifest, const fs::path& path) {
    json doc;
    doc["classes"] = manifest.classes;
    doc["models"] = manifest.models;
    doc["entries"] = json::array();
    for (const auto& e : manifest.entries) {
        json entry;
        entry["id"] = e.id;
        entry["class"] = e.class_index;
        entry["image"] = e.image ? json(e.image->generic_string()) : json(nullptr);
        entry["segmentation"] = e.segmentation.generic_string();
        entry["image_size"] = {e.height, e.width};
        json tensors = json::object();
        for (const auto& [model, paths] : e.tensors) {
            tensors[model] = {{"activation", paths.activation.generic_string()},
                              {"gradient", paths.gradient.generic_string()}};
        }
        entry["tensors"] = std::move(tensors);
        doc["entries"].push_back(std::move(entry));
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ManifestError("cannot write manifest " + path.string());
    out << doc.dump(2) << '\n';
}

}  // namespace maskscope::io
