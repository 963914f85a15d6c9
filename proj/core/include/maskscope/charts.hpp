#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "maskscope/grid.hpp"
#include "maskscope/image.hpp"
#include "maskscope/objstats.hpp"

namespace maskscope::charts {

// Distinct fill colour per class index ("#rrggbb").
std::string class_color(std::size_t class_index);

std::string xml_escape(std::string_view text);

// Up to `cap` indices drawn without replacement from [0, n) by a seeded
// partial Fisher-Yates shuffle; returned in ascending order.
std::vector<std::size_t> select_thumbnails(std::size_t n, std::size_t cap, std::uint64_t seed);

struct ScatterOptions {
    std::string title;
    double width = 800.0;
    double height = 800.0;
    // Parallel to the points; when non-empty, selected points are drawn as
    // raster thumbnails instead of markers.
    std::vector<std::optional<RgbImage>> thumbnails;
    double thumbnail_size = 28.0;
};

// One <circle class="point"> per point coloured by class, plus a legend with
// one <g class="legend-entry"> per class. Thumbnails become
// <image class="thumb"> elements with inlined PNG data.
std::string render_scatter(const Grid<double>& coords, std::span<const std::size_t> labels,
                           std::span<const std::string> class_names, const ScatterOptions& options = {});

// Grouped bars for one class: one group per object (in row order) and one
// <rect class="bar"> per model, height proportional to R on a [0,1] axis.
std::string render_histogram(std::span<const objstats::HistogramRow> rows, std::size_t class_index,
                             const std::string& class_name, std::span<const std::string> models,
                             const objstats::ObjectNames& names);

inline constexpr double kHistogramPlotHeight = 300.0;

struct GalleryRow {
    std::string label;
    std::vector<RgbImage> cells;  // one per column
};

// Grid of inlined images with column headers (e.g. one column per model).
std::string render_gallery(std::span<const std::string> columns, std::span<const GalleryRow> rows,
                           double cell_size = 96.0);

}  // namespace maskscope::charts
