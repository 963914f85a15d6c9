#include "maskscope/objstats.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <ostream>

#include "maskscope/csv.hpp"
#include "maskscope/parallel.hpp"
#include "maskscope/tensor_io.hpp"

namespace maskscope::objstats {

PixelCounts count_pixels(const Grid<std::uint16_t>& segmap, const gradcam::BinaryMask& mask,
                         std::size_t num_objects) {
    if (!(segmap.rows() == mask.values.rows() && segmap.cols() == mask.values.cols())) {
        throw DataError("segmentation is " + std::to_string(segmap.rows()) + "x" + std::to_string(segmap.cols()) +
                        " but mask is " + std::to_string(mask.values.rows()) + "x" +
                        std::to_string(mask.values.cols()));
    }
    PixelCounts counts(num_objects);
    auto labels = segmap.values();
    auto selected = mask.values.values();
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const std::uint16_t label = labels[i];
        if (label == kIgnoreLabel) continue;
        if (label >= num_objects) {
            throw DataError("segmentation label " + std::to_string(label) + " at (" + std::to_string(i / segmap.cols()) +
                            "," + std::to_string(i % segmap.cols()) + ") is outside 0.." +
                            std::to_string(num_objects - 1));
        }
        ++counts[label].total;
        if (selected[i]) ++counts[label].masked;
    }
    return counts;
}

std::vector<ObjectStat> compute_rpc(std::span<const ImageCounts> images, std::size_t class_index,
                                    std::size_t num_objects) {
    std::vector<ObjectStat> rows(num_objects);
    for (std::size_t p = 0; p < num_objects; ++p) {
        rows[p].class_index = class_index;
        rows[p].object = p;
    }
    for (const auto& img : images) {
        if (img.class_index != class_index) continue;
        const std::size_t n = std::min(num_objects, img.counts.size());
        for (std::size_t p = 0; p < n; ++p) {
            rows[p].sum_masked += img.counts[p].masked;
            rows[p].sum_total += img.counts[p].total;
        }
    }
    for (auto& row : rows) {
        if (row.sum_total > 0) {
            row.ratio = static_cast<double>(row.sum_masked) / static_cast<double>(row.sum_total);
        }
    }
    return rows;
}

ObjectStatsTable build_table(std::span<const ImageCounts> images, std::size_t num_classes, std::size_t num_objects,
                             std::string model) {
    ObjectStatsTable table{std::move(model), num_classes, num_objects, {}};
    table.rows.reserve(num_classes * num_objects);
    for (std::size_t c = 0; c < num_classes; ++c) {
        auto rows = compute_rpc(images, c, num_objects);
        table.rows.insert(table.rows.end(), rows.begin(), rows.end());
    }
    return table;
}

void select_objects(ObjectStatsTable& table, std::span<const std::size_t> class_counts, double min_avg_pixels) {
    for (auto& row : table.rows) {
        const std::size_t images = row.class_index < class_counts.size() ? class_counts[row.class_index] : 0;
        row.selected = images > 0 &&
                       static_cast<double>(row.sum_total) / static_cast<double>(images) > min_avg_pixels;
    }
}

ObjectStatsTable compute_object_stats(const io::DatasetManifest& manifest, const std::string& model,
                                      std::span<const gradcam::BinaryMask> masks, std::size_t num_objects,
                                      double min_avg_pixels) {
    if (masks.size() != manifest.entries.size()) {
        throw DataError("expected one binary mask per manifest entry for model " + model);
    }
    std::vector<ImageCounts> images(manifest.entries.size());
    parallel_for(images.size(), [&](std::size_t i) {
        const auto& entry = manifest.entries[i];
        const auto seg = io::to_label_grid(io::load_tensor(manifest.resolve(entry.segmentation)));
        try {
            images[i] = {entry.class_index, count_pixels(seg, masks[i], num_objects)};
        } catch (const DataError& e) {
            throw DataError("entry " + entry.id + ": " + e.what());
        }
    });
    auto table = build_table(images, manifest.classes.size(), num_objects, model);
    const auto counts = manifest.class_counts();
    select_objects(table, counts, min_avg_pixels);
    return table;
}

ObjectStatsTable compute_object_stats(const io::DatasetManifest& manifest, const std::string& model, float t,
                                      std::size_t num_objects, double min_avg_pixels) {
    std::vector<gradcam::BinaryMask> masks(manifest.entries.size());
    parallel_for(masks.size(), [&](std::size_t i) {
        masks[i] = gradcam::mask_pipeline(manifest, manifest.entries[i], model, t).binary;
    });
    return compute_object_stats(manifest, model, masks, num_objects, min_avg_pixels);
}

ObjectNames default_object_names(std::size_t num_objects) {
    ObjectNames names(num_objects);
    for (std::size_t i = 0; i < num_objects; ++i) names[i] = "object_" + std::to_string(i);
    return names;
}

ObjectNames load_object_names(const std::filesystem::path& path, std::size_t num_objects) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open object names file " + path.string());
    ObjectNames names;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        names.push_back(line);
    }
    while (!names.empty() && names.back().empty()) names.pop_back();
    if (names.size() != num_objects) {
        throw DataError("object names file " + path.string() + " has " + std::to_string(names.size()) +
                        " entries, expected " + std::to_string(num_objects));
    }
    return names;
}

std::vector<HistogramRow> histogram_export(std::span<const ObjectStatsTable> tables, const ObjectNames& names) {
    std::vector<HistogramRow> rows;
    if (tables.empty()) return rows;
    const std::size_t num_classes = tables.front().num_classes;
    const std::size_t num_objects = tables.front().num_objects;
    for (const auto& t : tables) {
        if (t.num_classes != num_classes || t.num_objects != num_objects) {
            throw DataError("histogram_export: tables disagree on class/object counts");
        }
    }
    std::vector<std::size_t> order(num_objects);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& na = a < names.size() ? names[a] : std::string();
        const auto& nb = b < names.size() ? names[b] : std::string();
        return na < nb;
    });
    for (std::size_t c = 0; c < num_classes; ++c) {
        for (std::size_t p : order) {
            const bool any = std::any_of(tables.begin(), tables.end(), [&](const auto& t) { return t.at(c, p).selected; });
            if (!any) continue;
            for (const auto& t : tables) {
                const auto& stat = t.at(c, p);
                if (stat.ratio) rows.push_back({c, p, t.model, *stat.ratio});
            }
        }
    }
    return rows;
}

namespace {

std::string name_of(const ObjectNames& names, std::size_t id) {
    return id < names.size() ? names[id] : "object_" + std::to_string(id);
}

}  // namespace

void write_stats_csv(std::ostream& out, const ObjectStatsTable& table, std::span<const std::string> class_names,
                     const ObjectNames& names) {
    out << "class,object_id,object_name,sum_M,sum_N,R,selected\n";
    for (const auto& row : table.rows) {
        if (row.sum_total == 0) continue;
        out << csv::field(class_names[row.class_index]) << ',' << row.object << ','
            << csv::field(name_of(names, row.object)) << ',' << row.sum_masked << ',' << row.sum_total << ','
            << (row.ratio ? csv::number(*row.ratio) : std::string()) << ',' << (row.selected ? 1 : 0) << '\n';
    }
}

void write_histogram_csv(std::ostream& out, std::span<const HistogramRow> rows,
                         std::span<const std::string> class_names, const ObjectNames& names) {
    out << "class,object_id,object_name,model,R\n";
    for (const auto& row : rows) {
        out << csv::field(class_names[row.class_index]) << ',' << row.object << ','
            << csv::field(name_of(names, row.object)) << ',' << csv::field(row.model) << ','
            << csv::number(row.ratio) << '\n';
    }
}

}  // namespace maskscope::objstats
