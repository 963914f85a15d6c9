#include "maskscope/report.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "maskscope/charts.hpp"
#include "maskscope/csv.hpp"
#include "maskscope/digest.hpp"
#include "maskscope/modelcmp.hpp"
#include "maskscope/parallel.hpp"
#include "maskscope/tensor_io.hpp"

namespace maskscope::report {

namespace fs = std::filesystem;

namespace {

constexpr const char* kKeyFile = ".stage-key";
constexpr const char* kPartialFile = ".partial";
constexpr std::size_t kThumbnailSide = 32;
constexpr std::size_t kGalleryPerClass = 4;
constexpr std::size_t kGalleryCell = 64;

template <typename F>
auto with_context(const std::string& context, F&& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        throw ConfigError(context + ": " + e.what());
    } catch (const NumericError& e) {
        throw NumericError(context + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError(context + ": " + e.what());
    }
}

std::string sanitize(std::string_view text) {
    std::string out;
    for (char c : text) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                        c == '_' || c == '.';
        out += ok ? c : '_';
    }
    return out.empty() ? "_" : out;
}

std::string entry_stem(std::size_t index, const io::ImageEntry& entry) {
    return fmt::format("{:05d}_{}", index, sanitize(entry.id));
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw Error("cannot write " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return {};
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (header) {
            header = false;
            continue;
        }
        if (!line.empty()) rows.push_back(csv::split_line(line));
    }
    return rows;
}

double parse_double(const std::string& text, const fs::path& where) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw DataError("malformed number \"" + text + "\" in " + where.string());
    }
}

// Everything one run needs, shared by the stage functions.
struct Context {
    const RunConfig& config;
    io::DatasetManifest manifest;
    std::vector<std::string> models;
    objstats::ObjectNames names;
    std::string names_digest;
    std::string input_digest;
    std::map<Stage, std::string> keys;
    RunReport report;

    fs::path dir(Stage s) const { return config.out_dir / std::string(stage_name(s)); }
};

std::string input_digest(const io::DatasetManifest& m) {
    Sha256 h;
    h.update_file(m.source);
    for (const auto& e : m.entries) {
        h.update(e.id);
        h.update_file(m.resolve(e.segmentation));
        if (e.image) h.update_file(m.resolve(*e.image));
        for (const auto& [model, paths] : e.tensors) {
            h.update(model);
            h.update_file(m.resolve(paths.activation));
            h.update_file(m.resolve(paths.gradient));
        }
    }
    return h.hex();
}

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
    return out;
}

std::string stage_key(const Context& ctx, Stage s) {
    const auto& c = ctx.config;
    std::string text = fmt::format("maskscope/1|{}|", stage_name(s));
    switch (s) {
        case Stage::masks:
            text += fmt::format("input={}|models={}", ctx.input_digest, join(ctx.models));
            break;
        case Stage::explanations:
            text += fmt::format("masks={}|t={}", ctx.keys.at(Stage::masks), c.threshold);
            break;
        case Stage::embedding: {
            const auto& p = c.tsne;
            text += fmt::format("masks={}|pca={}|perp={}|iter={}|lr={}|exag={}|exag_iter={}|mom={},{}|mom_switch={}|seed={}",
                                ctx.keys.at(Stage::masks), c.pca_components, p.perplexity, p.iterations,
                                p.learning_rate, p.early_exaggeration, p.exaggeration_iterations, p.initial_momentum,
                                p.final_momentum, p.momentum_switch, p.seed);
            break;
        }
        case Stage::objstats:
            text += fmt::format("masks={}|t={}|min_avg={}|objects={}|names={}", ctx.keys.at(Stage::masks),
                                c.threshold, c.min_avg_pixels, c.num_objects, ctx.names_digest);
            break;
        case Stage::ar:
            text += fmt::format("masks={}", ctx.keys.at(Stage::masks));
            break;
        case Stage::figures:
            text += fmt::format("expl={}|emb={}|obj={}|ar={}|cap={}|seed={}", ctx.keys.at(Stage::explanations),
                                ctx.keys.at(Stage::embedding), ctx.keys.at(Stage::objstats), ctx.keys.at(Stage::ar),
                                c.thumbnail_cap, c.tsne.seed);
            break;
    }
    return Sha256().update(text).hex();
}

bool up_to_date(const Context& ctx, Stage s) {
    const auto d = ctx.dir(s);
    return fs::exists(d / kKeyFile) && !fs::exists(d / kPartialFile) && read_text(d / kKeyFile) == ctx.keys.at(s);
}

std::vector<fs::path> list_outputs(const fs::path& dir) {
    std::vector<fs::path> out;
    if (!fs::exists(dir)) return out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().filename().string().front() != '.') out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

// ---- stage outputs -------------------------------------------------------

fs::path mask_path(const Context& ctx, const std::string& model, std::size_t i) {
    return ctx.dir(Stage::masks) / sanitize(model) / (entry_stem(i, ctx.manifest.entries[i]) + ".tnsr");
}

std::vector<gradcam::NormalizedMask> load_masks(const Context& ctx, const std::string& model) {
    std::vector<gradcam::NormalizedMask> masks(ctx.manifest.entries.size());
    parallel_for(masks.size(), [&](std::size_t i) {
        auto grid = io::to_float_grid(io::load_tensor(mask_path(ctx, model, i)));
        const auto v = grid.values();
        const bool degenerate = std::all_of(v.begin(), v.end(), [](float x) { return x == 0.0f; });
        masks[i] = {std::move(grid), degenerate};
    });
    return masks;
}

void stage_masks(Context& ctx) {
    const auto& m = ctx.manifest;
    for (const auto& model : ctx.models) {
        const auto dir = ctx.dir(Stage::masks) / sanitize(model);
        fs::create_directories(dir);
        std::vector<std::uint8_t> degenerate(m.entries.size(), 0);
        parallel_for(m.entries.size(), [&](std::size_t i) {
            const auto& entry = m.entries[i];
            with_context("entry " + entry.id + ", model " + model, [&] {
                const auto mask = gradcam::conv_mask(m, entry, model);
                degenerate[i] = mask.degenerate ? 1 : 0;
                io::save_tensor(io::to_tensor(mask.values), mask_path(ctx, model, i));
            });
        });
        std::ostringstream index;
        index << "index,id,class,degenerate\n";
        for (std::size_t i = 0; i < m.entries.size(); ++i) {
            index << i << ',' << csv::field(m.entries[i].id) << ',' << csv::field(m.classes[m.entries[i].class_index])
                  << ',' << int(degenerate[i]) << '\n';
        }
        write_text(dir / "index.csv", index.str());
    }
}

void stage_explanations(Context& ctx) {
    const auto& m = ctx.manifest;
    std::size_t skipped = 0;
    for (const auto& e : m.entries) skipped += e.image ? 0 : 1;
    if (skipped > 0) {
        ctx.report.notes.push_back(fmt::format("{} entries have no image; no explanation rendered for them", skipped));
    }
    for (const auto& model : ctx.models) {
        const auto dir = ctx.dir(Stage::explanations) / sanitize(model);
        fs::create_directories(dir);
        const auto masks = load_masks(ctx, model);
        parallel_for(m.entries.size(), [&](std::size_t i) {
            const auto& entry = m.entries[i];
            if (!entry.image) return;
            with_context("entry " + entry.id + ", model " + model, [&] {
                const auto image = read_image(m.resolve(*entry.image));
                if (image.rows != entry.height || image.cols != entry.width) {
                    throw DataError(fmt::format("image is {}x{}, manifest says {}x{}", image.rows, image.cols,
                                                entry.height, entry.width));
                }
                const auto set = gradcam::expand_mask(masks[i], entry.height, entry.width, ctx.config.threshold);
                write_png(gradcam::apply_explanation(image, set.binary),
                          dir / (entry_stem(i, entry) + ".png"));
            });
        });
    }
}

void stage_embedding(Context& ctx) {
    const auto& m = ctx.manifest;
    for (const auto& model : ctx.models) {
        const auto dir = ctx.dir(Stage::embedding) / sanitize(model);
        fs::create_directories(dir);
        const auto result = with_context("model " + model, [&] {
            return embedding::embed_descriptors(embedding::descriptor_matrix(load_masks(ctx, model)), ctx.config.tsne,
                                                ctx.config.pca_components);
        });
        if (result.pca.clamped) {
            ctx.report.notes.push_back(fmt::format("model {}: PCA components clamped from {} to {}", model,
                                                   result.pca.requested, result.pca.explained_ratio.size()));
        }
        std::ostringstream coords;
        coords << "id,class,x,y\n";
        for (std::size_t i = 0; i < m.entries.size(); ++i) {
            coords << csv::field(m.entries[i].id) << ',' << csv::field(m.classes[m.entries[i].class_index]) << ','
                   << csv::number(result.embedding.coords(i, 0)) << ',' << csv::number(result.embedding.coords(i, 1))
                   << '\n';
        }
        write_text(dir / "embedding.csv", coords.str());

        std::ostringstream kl;
        kl << "iteration,kl\n";
        for (const auto& s : result.embedding.kl_trace) kl << s.iteration << ',' << csv::number(s.kl) << '\n';
        write_text(dir / "kl_trace.csv", kl.str());

        std::ostringstream pca;
        pca << "component,explained_ratio\n";
        for (std::size_t k = 0; k < result.pca.explained_ratio.size(); ++k) {
            pca << k << ',' << csv::number(result.pca.explained_ratio[k]) << '\n';
        }
        write_text(dir / "pca.csv", pca.str());
    }
}

void stage_objstats(Context& ctx) {
    const auto& m = ctx.manifest;
    const auto dir = ctx.dir(Stage::objstats);
    fs::create_directories(dir);
    std::vector<objstats::ObjectStatsTable> tables;
    for (const auto& model : ctx.models) {
        const auto masks = load_masks(ctx, model);
        std::vector<gradcam::BinaryMask> binary(masks.size());
        parallel_for(masks.size(), [&](std::size_t i) {
            const auto& e = m.entries[i];
            binary[i] = gradcam::expand_mask(masks[i], e.height, e.width, ctx.config.threshold).binary;
        });
        auto table = with_context("model " + model, [&] {
            return objstats::compute_object_stats(m, model, binary, ctx.config.num_objects, ctx.config.min_avg_pixels);
        });
        std::ostringstream out;
        objstats::write_stats_csv(out, table, m.classes, ctx.names);
        write_text(dir / (sanitize(model) + ".csv"), out.str());
        tables.push_back(std::move(table));
    }
    const auto rows = objstats::histogram_export(tables, ctx.names);
    std::ostringstream hist;
    objstats::write_histogram_csv(hist, rows, m.classes, ctx.names);
    write_text(dir / "histogram.csv", hist.str());
}

void stage_ar(Context& ctx) {
    const auto dir = ctx.dir(Stage::ar);
    fs::create_directories(dir);
    std::vector<std::vector<gradcam::NormalizedMask>> masks;
    for (const auto& model : ctx.models) masks.push_back(load_masks(ctx, model));
    const auto matrix = modelcmp::ar_matrix(ctx.manifest, ctx.models, masks);
    std::ostringstream csv_out;
    modelcmp::write_ar_csv(csv_out, matrix);
    write_text(dir / "ar_matrix.csv", csv_out.str());
    std::ostringstream md;
    modelcmp::write_ar_markdown(md, matrix);
    write_text(dir / "ar_table.md", md.str());
}

Grid<double> load_coords(const Context& ctx, const std::string& model) {
    const auto path = ctx.dir(Stage::embedding) / sanitize(model) / "embedding.csv";
    const auto rows = read_csv(path);
    if (rows.size() != ctx.manifest.entries.size()) throw DataError(path.string() + " does not match the manifest");
    Grid<double> coords(rows.size(), 2);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != 4) throw DataError("malformed row in " + path.string());
        coords(i, 0) = parse_double(rows[i][2], path);
        coords(i, 1) = parse_double(rows[i][3], path);
    }
    return coords;
}

void stage_figures(Context& ctx) {
    const auto& m = ctx.manifest;
    const auto dir = ctx.dir(Stage::figures);
    fs::create_directories(dir);
    std::vector<std::size_t> labels;
    for (const auto& e : m.entries) labels.push_back(e.class_index);

    for (const auto& model : ctx.models) {
        const auto coords = load_coords(ctx, model);
        charts::ScatterOptions plain;
        plain.title = "Weighted-mask t-SNE: " + model;
        write_text(dir / ("scatter_" + sanitize(model) + ".svg"), charts::render_scatter(coords, labels, m.classes, plain));

        charts::ScatterOptions thumbs;
        thumbs.title = "Visual explanations: " + model;
        thumbs.width = thumbs.height = 1400.0;
        thumbs.thumbnails.resize(m.entries.size());
        const auto chosen = charts::select_thumbnails(m.entries.size(), ctx.config.thumbnail_cap, ctx.config.tsne.seed);
        const auto masks = load_masks(ctx, model);
        parallel_for(chosen.size(), [&](std::size_t k) {
            const std::size_t i = chosen[k];
            const auto png = ctx.dir(Stage::explanations) / sanitize(model) / (entry_stem(i, m.entries[i]) + ".png");
            if (fs::exists(png)) {
                thumbs.thumbnails[i] = downscale(read_image(png), kThumbnailSide);
            } else {
                thumbs.thumbnails[i] =
                    render_gray(gradcam::resample_mask(masks[i], kThumbnailSide, kThumbnailSide).values);
            }
        });
        write_text(dir / ("thumbnails_" + sanitize(model) + ".svg"),
                   charts::render_scatter(coords, labels, m.classes, thumbs));
    }

    // Histograms per class from the exported rows.
    const auto hist_path = ctx.dir(Stage::objstats) / "histogram.csv";
    std::vector<objstats::HistogramRow> rows;
    for (const auto& r : read_csv(hist_path)) {
        if (r.size() != 5) throw DataError("malformed row in " + hist_path.string());
        auto cls = std::find(m.classes.begin(), m.classes.end(), r[0]);
        if (cls == m.classes.end()) throw DataError("unknown class " + r[0] + " in " + hist_path.string());
        rows.push_back({static_cast<std::size_t>(cls - m.classes.begin()),
                        static_cast<std::size_t>(parse_double(r[1], hist_path)), r[3], parse_double(r[4], hist_path)});
    }
    for (std::size_t c = 0; c < m.classes.size(); ++c) {
        write_text(dir / fmt::format("histogram_{:02d}_{}.svg", c, sanitize(m.classes[c])),
                   charts::render_histogram(rows, c, m.classes[c], ctx.models, ctx.names));
    }

    // Gallery: the first few images of each class, one column per model.
    std::vector<std::vector<gradcam::NormalizedMask>> masks;
    for (const auto& model : ctx.models) masks.push_back(load_masks(ctx, model));
    std::vector<charts::GalleryRow> gallery;
    std::vector<std::size_t> taken(m.classes.size(), 0);
    for (std::size_t i = 0; i < m.entries.size(); ++i) {
        const auto& e = m.entries[i];
        if (taken[e.class_index]++ >= kGalleryPerClass) continue;
        charts::GalleryRow row{e.id + " (" + m.classes[e.class_index] + ")", {}};
        for (std::size_t k = 0; k < ctx.models.size(); ++k) {
            row.cells.push_back(render_gray(gradcam::resample_mask(masks[k][i], kGalleryCell, kGalleryCell).values));
        }
        gallery.push_back(std::move(row));
    }
    write_text(dir / "gallery.svg", charts::render_gallery(ctx.models, gallery));
}

void run_stage(Context& ctx, Stage s) {
    switch (s) {
        case Stage::masks: return stage_masks(ctx);
        case Stage::explanations: return stage_explanations(ctx);
        case Stage::embedding: return stage_embedding(ctx);
        case Stage::objstats: return stage_objstats(ctx);
        case Stage::ar: return stage_ar(ctx);
        case Stage::figures: return stage_figures(ctx);
    }
}

}  // namespace

std::string_view stage_name(Stage stage) {
    switch (stage) {
        case Stage::masks: return "masks";
        case Stage::explanations: return "explanations";
        case Stage::embedding: return "embedding";
        case Stage::objstats: return "objstats";
        case Stage::ar: return "ar";
        case Stage::figures: return "figures";
    }
    return "?";
}

std::vector<Stage> resolve_stages(const std::vector<Stage>& targets) {
    std::set<Stage> wanted;
    for (Stage s : targets) {
        wanted.insert(s);
        if (s != Stage::masks) wanted.insert(Stage::masks);
        if (s == Stage::figures) {
            wanted.insert({Stage::explanations, Stage::embedding, Stage::objstats, Stage::ar});
        }
    }
    return {wanted.begin(), wanted.end()};
}

void RunConfig::validate() const {
    if (manifest.empty()) throw ConfigError("no manifest given");
    if (out_dir.empty()) throw ConfigError("no output directory given");
    if (!(threshold >= 0.0f && threshold <= 1.0f)) throw ConfigError("threshold must lie in [0,1]");
    if (!(min_avg_pixels >= 0.0)) throw ConfigError("min-avg-pixels must be non-negative");
    if (pca_components == 0) throw ConfigError("PCA needs at least one component");
    if (num_objects == 0 || num_objects > objstats::kIgnoreLabel) throw ConfigError("invalid object count");
    if (!(tsne.perplexity > 0.0) || tsne.iterations <= 0 || !(tsne.learning_rate > 0.0)) {
        throw ConfigError("t-SNE parameters must be positive");
    }
}

std::vector<fs::path> RunReport::artifacts() const {
    std::vector<fs::path> out;
    for (const auto& s : stages) out.insert(out.end(), s.outputs.begin(), s.outputs.end());
    return out;
}

RunReport run(const RunConfig& config) {
    config.validate();
    Context ctx{config, with_context("manifest", [&] { return io::load_manifest(config.manifest); }), {}, {}, {}, {}, {}, {}};

    if (config.models.empty()) {
        ctx.models = ctx.manifest.models;
    } else {
        for (const auto& model : config.models) {
            if (!ctx.manifest.has_model(model)) throw ConfigError("model \"" + model + "\" is not in the manifest");
        }
        ctx.models = config.models;
    }

    std::optional<fs::path> names_path = config.names_file;
    if (!names_path && fs::exists(ctx.manifest.base_dir / "names.txt")) names_path = ctx.manifest.base_dir / "names.txt";
    if (names_path) {
        ctx.names = objstats::load_object_names(*names_path, config.num_objects);
        ctx.names_digest = Sha256().update_file(*names_path).hex();
    } else {
        ctx.names = objstats::default_object_names(config.num_objects);
        ctx.names_digest = "default";
    }

    ctx.input_digest = input_digest(ctx.manifest);
    for (Stage s : {Stage::masks, Stage::explanations, Stage::embedding, Stage::objstats, Stage::ar, Stage::figures}) {
        ctx.keys[s] = stage_key(ctx, s);
    }
    fs::create_directories(config.out_dir);

    const auto stages = resolve_stages(config.stages);
    if (!config.compute) {
        for (Stage s : stages) {
            if (s != Stage::figures && !up_to_date(ctx, s)) {
                throw ConfigError(fmt::format("stage {} has no up-to-date outputs in {}", stage_name(s),
                                              config.out_dir.string()));
            }
        }
    }

    for (Stage s : stages) {
        StageRecord record{s, false, 0.0, {}};
        const auto dir = ctx.dir(s);
        const auto start = std::chrono::steady_clock::now();
        if (up_to_date(ctx, s)) {
            record.cached = true;
        } else {
            fs::remove_all(dir);
            fs::create_directories(dir);
            write_text(dir / kPartialFile, "");
            with_context(fmt::format("stage {}", stage_name(s)), [&] { run_stage(ctx, s); });
            write_text(dir / kKeyFile, ctx.keys.at(s));
            fs::remove(dir / kPartialFile);
        }
        record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        record.outputs = list_outputs(dir);
        ctx.report.stages.push_back(std::move(record));
    }
    return ctx.report;
}

}  // namespace maskscope::report
