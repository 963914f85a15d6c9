#include "maskscope/charts.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "maskscope/digest.hpp"

namespace maskscope::charts {

namespace {

constexpr std::array<const char*, 10> kPalette = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string hsl_hex(double hue, double sat, double light) {
    auto f = [&](double n) {
        const double k = std::fmod(n + hue / 30.0, 12.0);
        const double a = sat * std::min(light, 1.0 - light);
        return light - a * std::max(-1.0, std::min({k - 3.0, 9.0 - k, 1.0}));
    };
    auto byte = [](double v) { return static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); };
    return fmt::format("#{:02x}{:02x}{:02x}", byte(f(0)), byte(f(8)), byte(f(4)));
}

std::uint64_t bounded(std::mt19937_64& engine, std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x = engine();
    while (x >= limit) x = engine();
    return x % bound;
}

std::string data_uri(const RgbImage& image) {
    return "data:image/png;base64," + base64(encode_png(image));
}

std::string header(double width, double height) {
    return fmt::format(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        "<svg xmlns=\"http://www.w3.org/2000/svg\" xmlns:xlink=\"http://www.w3.org/1999/xlink\" "
        "width=\"{0:.0f}\" height=\"{1:.0f}\" viewBox=\"0 0 {0:.0f} {1:.0f}\">\n"
        "<rect x=\"0\" y=\"0\" width=\"{0:.0f}\" height=\"{1:.0f}\" fill=\"#ffffff\"/>\n",
        width, height);
}

}  // namespace

std::string class_color(std::size_t class_index) {
    if (class_index < kPalette.size()) return kPalette[class_index];
    const std::size_t k = class_index - kPalette.size();
    const double hue = std::fmod(static_cast<double>(k) * 137.50776405, 360.0);
    const double light = 0.35 + 0.1 * static_cast<double>(k % 4);
    return hsl_hex(hue, 0.65, light);
}

std::string xml_escape(std::string_view text) {
    std::string out;
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

std::vector<std::size_t> select_thumbnails(std::size_t n, std::size_t cap, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    if (cap >= n) return idx;
    std::mt19937_64 engine(seed);
    for (std::size_t i = 0; i < cap; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(bounded(engine, n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(cap);
    std::sort(idx.begin(), idx.end());
    return idx;
}

std::string render_scatter(const Grid<double>& coords, std::span<const std::size_t> labels,
                           std::span<const std::string> class_names, const ScatterOptions& options) {
    const double legend_w = 180.0;
    const double margin = 30.0 + options.thumbnail_size / 2.0;
    const double plot_w = options.width;
    const double plot_h = options.height;
    std::string svg = header(plot_w + legend_w, plot_h);
    if (!options.title.empty()) {
        svg += fmt::format("<text x=\"{:.2f}\" y=\"20\" font-family=\"sans-serif\" font-size=\"16\" "
                           "text-anchor=\"middle\">{}</text>\n",
                           plot_w / 2.0, xml_escape(options.title));
    }

    const std::size_t n = coords.rows();
    double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i == 0) {
            xmin = xmax = coords(i, 0);
            ymin = ymax = coords(i, 1);
        }
        xmin = std::min(xmin, coords(i, 0));
        xmax = std::max(xmax, coords(i, 0));
        ymin = std::min(ymin, coords(i, 1));
        ymax = std::max(ymax, coords(i, 1));
    }
    auto map = [&](double v, double lo, double hi, double size, bool flip) {
        if (!(hi > lo)) return size / 2.0;
        const double t = (v - lo) / (hi - lo);
        return margin + (flip ? 1.0 - t : t) * (size - 2.0 * margin);
    };

    svg += "<g class=\"points\">\n";
    for (std::size_t i = 0; i < n; ++i) {
        const double px = map(coords(i, 0), xmin, xmax, plot_w, false);
        const double py = map(coords(i, 1), ymin, ymax, plot_h, true);
        const std::size_t cls = i < labels.size() ? labels[i] : 0;
        const bool thumb = i < options.thumbnails.size() && options.thumbnails[i].has_value();
        if (thumb) {
            const double s = options.thumbnail_size;
            svg += fmt::format("<image class=\"thumb\" x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" "
                               "xlink:href=\"{}\"/>\n",
                               px - s / 2.0, py - s / 2.0, s, s, data_uri(*options.thumbnails[i]));
            svg += fmt::format("<rect class=\"thumb-frame\" x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" "
                               "fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>\n",
                               px - s / 2.0, py - s / 2.0, s, s, class_color(cls));
        } else {
            svg += fmt::format("<circle class=\"point\" cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"{}\" "
                               "data-class=\"{}\"/>\n",
                               px, py, class_color(cls), cls);
        }
    }
    svg += "</g>\n<g class=\"legend\">\n";
    for (std::size_t c = 0; c < class_names.size(); ++c) {
        const double y = 40.0 + 20.0 * static_cast<double>(c);
        svg += fmt::format("<g class=\"legend-entry\"><rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"12\" height=\"12\" "
                           "fill=\"{}\"/><text x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" "
                           "font-size=\"12\">{}</text></g>\n",
                           plot_w + 10.0, y, class_color(c), plot_w + 28.0, y + 10.0, xml_escape(class_names[c]));
    }
    svg += "</g>\n</svg>\n";
    return svg;
}

std::string render_histogram(std::span<const objstats::HistogramRow> rows, std::size_t class_index,
                             const std::string& class_name, std::span<const std::string> models,
                             const objstats::ObjectNames& names) {
    std::vector<std::size_t> objects;
    for (const auto& r : rows) {
        if (r.class_index != class_index) continue;
        if (std::find(objects.begin(), objects.end(), r.object) == objects.end()) objects.push_back(r.object);
    }
    const double bar_w = 14.0;
    const double gap = 16.0;
    const double group_w = std::max<double>(1.0, static_cast<double>(models.size())) * bar_w + gap;
    const double left = 50.0;
    const double top = 40.0;
    const double plot_h = kHistogramPlotHeight;
    const double label_h = 110.0;
    const double plot_w = std::max(200.0, group_w * static_cast<double>(objects.size()));
    const double legend_w = 160.0;
    const double base = top + plot_h;

    std::string svg = header(left + plot_w + legend_w, top + plot_h + label_h);
    svg += fmt::format("<text x=\"{:.2f}\" y=\"22\" font-family=\"sans-serif\" font-size=\"15\" "
                       "text-anchor=\"middle\">R by object: {}</text>\n",
                       left + plot_w / 2.0, xml_escape(class_name));
    svg += fmt::format("<g class=\"axes\" stroke=\"#000000\"><line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" "
                       "y2=\"{2:.2f}\"/><line x1=\"{0:.2f}\" y1=\"{2:.2f}\" x2=\"{3:.2f}\" y2=\"{2:.2f}\"/></g>\n",
                       left, top, base, left + plot_w);
    for (int tick = 0; tick <= 4; ++tick) {
        const double v = tick / 4.0;
        const double y = base - v * plot_h;
        svg += fmt::format("<text class=\"tick\" x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"10\" "
                           "text-anchor=\"end\">{:.2f}</text>\n",
                           left - 4.0, y + 3.0, v);
    }

    svg += "<g class=\"bars\">\n";
    for (std::size_t g = 0; g < objects.size(); ++g) {
        const std::size_t object = objects[g];
        const double gx = left + gap / 2.0 + group_w * static_cast<double>(g);
        for (std::size_t m = 0; m < models.size(); ++m) {
            auto it = std::find_if(rows.begin(), rows.end(), [&](const auto& r) {
                return r.class_index == class_index && r.object == object && r.model == models[m];
            });
            if (it == rows.end()) continue;
            const double h = std::clamp(it->ratio, 0.0, 1.0) * plot_h;
            svg += fmt::format("<rect class=\"bar\" x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" "
                               "fill=\"{}\" data-object=\"{}\" data-model=\"{}\" data-r=\"{}\"/>\n",
                               gx + bar_w * static_cast<double>(m), base - h, bar_w, h, class_color(m), object,
                               xml_escape(models[m]), it->ratio);
        }
        const std::string name = object < names.size() ? names[object] : "object_" + std::to_string(object);
        const double cx = gx + bar_w * static_cast<double>(models.size()) / 2.0;
        svg += fmt::format("<text class=\"object-label\" x=\"{0:.2f}\" y=\"{1:.2f}\" font-family=\"sans-serif\" "
                           "font-size=\"10\" text-anchor=\"end\" transform=\"rotate(-60 {0:.2f} {1:.2f})\">{2}</text>\n",
                           cx, base + 12.0, xml_escape(name));
    }
    svg += "</g>\n<g class=\"legend\">\n";
    for (std::size_t m = 0; m < models.size(); ++m) {
        const double y = top + 20.0 * static_cast<double>(m);
        svg += fmt::format("<g class=\"legend-entry\"><rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"12\" height=\"12\" "
                           "fill=\"{}\"/><text x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" "
                           "font-size=\"12\">{}</text></g>\n",
                           left + plot_w + 10.0, y, class_color(m), left + plot_w + 28.0, y + 10.0,
                           xml_escape(models[m]));
    }
    svg += "</g>\n</svg>\n";
    return svg;
}

std::string render_gallery(std::span<const std::string> columns, std::span<const GalleryRow> rows, double cell_size) {
    const double label_w = 140.0;
    const double header_h = 30.0;
    const double pad = 6.0;
    const double width = label_w + static_cast<double>(columns.size()) * (cell_size + pad) + pad;
    const double height = header_h + static_cast<double>(rows.size()) * (cell_size + pad) + pad;
    std::string svg = header(width, height);
    for (std::size_t c = 0; c < columns.size(); ++c) {
        svg += fmt::format("<text class=\"column\" x=\"{:.2f}\" y=\"20\" font-family=\"sans-serif\" font-size=\"12\" "
                           "text-anchor=\"middle\">{}</text>\n",
                           label_w + pad + static_cast<double>(c) * (cell_size + pad) + cell_size / 2.0,
                           xml_escape(columns[c]));
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const double y = header_h + static_cast<double>(r) * (cell_size + pad);
        svg += fmt::format("<text class=\"row-label\" x=\"6\" y=\"{:.2f}\" font-family=\"sans-serif\" "
                           "font-size=\"11\">{}</text>\n",
                           y + cell_size / 2.0, xml_escape(rows[r].label));
        for (std::size_t c = 0; c < rows[r].cells.size() && c < columns.size(); ++c) {
            svg += fmt::format("<image class=\"cell\" x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" "
                               "xlink:href=\"{}\"/>\n",
                               label_w + pad + static_cast<double>(c) * (cell_size + pad), y, cell_size, cell_size,
                               data_uri(rows[r].cells[c]));
        }
    }
    svg += "</svg>\n";
    return svg;
}

}  // namespace maskscope::charts
