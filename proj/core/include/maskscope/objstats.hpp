#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "maskscope/gradcam.hpp"
#include "maskscope/grid.hpp"
#include "maskscope/manifest.hpp"

namespace maskscope::objstats {

inline constexpr std::uint16_t kIgnoreLabel = 65535;
inline constexpr std::size_t kDefaultObjects = 150;
inline constexpr double kDefaultMinAvgPixels = 100.0;

// M (pixels inside the explanation) and N (all pixels) for one object.
struct ObjectCount {
    std::uint64_t masked = 0;
    std::uint64_t total = 0;
    friend bool operator==(const ObjectCount&, const ObjectCount&) = default;
};

// Indexed by object id.
using PixelCounts = std::vector<ObjectCount>;

// Ignore-labelled pixels are skipped. Any other label >= num_objects raises
// DataError naming the label and its position.
PixelCounts count_pixels(const Grid<std::uint16_t>& segmap, const gradcam::BinaryMask& mask,
                         std::size_t num_objects = kDefaultObjects);

struct ImageCounts {
    std::size_t class_index = 0;
    PixelCounts counts;
};

struct ObjectStat {
    std::size_t class_index = 0;
    std::size_t object = 0;
    std::uint64_t sum_masked = 0;
    std::uint64_t sum_total = 0;
    std::optional<double> ratio;  // empty when sum_total == 0
    bool selected = false;
};

// Rows for class c, one per object id: ratio of summed M to summed N over the
// class's images.
std::vector<ObjectStat> compute_rpc(std::span<const ImageCounts> images, std::size_t class_index,
                                    std::size_t num_objects = kDefaultObjects);

struct ObjectStatsTable {
    std::string model;
    std::size_t num_classes = 0;
    std::size_t num_objects = 0;
    std::vector<ObjectStat> rows;  // class-major

    const ObjectStat& at(std::size_t class_index, std::size_t object) const {
        return rows[class_index * num_objects + object];
    }
    ObjectStat& at(std::size_t class_index, std::size_t object) { return rows[class_index * num_objects + object]; }
};

ObjectStatsTable build_table(std::span<const ImageCounts> images, std::size_t num_classes,
                             std::size_t num_objects = kDefaultObjects, std::string model = {});

// Marks (c, p) selected iff sum_total / N^c > min_avg_pixels (strict).
// class_counts holds N^c per class.
void select_objects(ObjectStatsTable& table, std::span<const std::size_t> class_counts,
                    double min_avg_pixels = kDefaultMinAvgPixels);

// Counts every entry at threshold t for one model, then builds and selects.
ObjectStatsTable compute_object_stats(const io::DatasetManifest& manifest, const std::string& model, float t,
                                      std::size_t num_objects = kDefaultObjects,
                                      double min_avg_pixels = kDefaultMinAvgPixels);

// Same, from precomputed binary masks (one per manifest entry).
ObjectStatsTable compute_object_stats(const io::DatasetManifest& manifest, const std::string& model,
                                      std::span<const gradcam::BinaryMask> masks,
                                      std::size_t num_objects = kDefaultObjects,
                                      double min_avg_pixels = kDefaultMinAvgPixels);

// Object id -> display name.
using ObjectNames = std::vector<std::string>;

ObjectNames default_object_names(std::size_t num_objects = kDefaultObjects);
// One name per line; must hold exactly num_objects lines.
ObjectNames load_object_names(const std::filesystem::path& path, std::size_t num_objects = kDefaultObjects);

struct HistogramRow {
    std::size_t class_index = 0;
    std::size_t object = 0;
    std::string model;
    double ratio = 0.0;
};

// Rows for every object selected in any table for a class, one per table.
// Ordered by class, then object name (ties by id), then table order.
std::vector<HistogramRow> histogram_export(std::span<const ObjectStatsTable> tables, const ObjectNames& names);

// class,object_id,object_name,sum_M,sum_N,R,selected. Objects absent from a
// class (sum_N = 0, R undefined) are omitted.
void write_stats_csv(std::ostream& out, const ObjectStatsTable& table, std::span<const std::string> class_names,
                     const ObjectNames& names);
// class,object_id,object_name,model,R
void write_histogram_csv(std::ostream& out, std::span<const HistogramRow> rows,
                         std::span<const std::string> class_names, const ObjectNames& names);

}  // namespace maskscope::objstats
