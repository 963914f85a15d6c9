#include "maskscope/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <random>

#include <fmt/format.h>

#include "maskscope/image.hpp"
#include "maskscope/manifest.hpp"
#include "maskscope/tensor_io.hpp"

namespace maskscope::synthetic {

namespace fs = std::filesystem;

namespace {

// Uniform doubles from mt19937_64 bits; identical on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

private:
    std::mt19937_64 engine_;
};

struct Rect {
    std::size_t r0, r1, c0, c1;  // half-open
};

Grid<std::uint16_t> make_scene(std::size_t size, std::size_t class_index, Rng& rng, Rect& planted) {
    Grid<std::uint16_t> seg(size, size);
    const auto sky_end = static_cast<std::size_t>(0.35 * size);
    const auto building_end = static_cast<std::size_t>(0.7 * size);
    for (std::size_t r = 0; r < size; ++r) {
        const std::uint16_t label = r < sky_end ? kSky : r < building_end ? kBuilding : kRoad;
        for (std::size_t c = 0; c < size; ++c) seg(r, c) = label;
    }
    // Sidewalk strip and a tree in the building band.
    for (std::size_t r = building_end; r < building_end + size / 10; ++r)
        for (std::size_t c = 0; c < size; ++c) seg(r, c) = kSidewalk;
    const std::size_t tree_w = size / 8;
    const std::size_t tree_c = rng.index(size - tree_w);
    for (std::size_t r = sky_end; r < building_end; ++r)
        for (std::size_t c = tree_c; c < tree_c + tree_w; ++c) seg(r, c) = kTree;

    const double frac = class_index == 0 ? rng.uniform(0.22, 0.32) : rng.uniform(0.28, 0.38);
    const auto width = static_cast<std::size_t>(frac * size);
    const std::size_t c0 = rng.index(size - width);
    if (class_index == 0) {
        planted = {size / 20, static_cast<std::size_t>(0.62 * size), c0, c0 + width};
    } else {
        planted = {static_cast<std::size_t>(0.55 * size), static_cast<std::size_t>(0.82 * size), c0, c0 + width};
    }
    const std::uint16_t object = class_index == 0 ? kSkyscraper : kSignboard;
    for (std::size_t r = planted.r0; r < planted.r1; ++r)
        for (std::size_t c = planted.c0; c < planted.c1; ++c) seg(r, c) = object;

    // A few void pixels in the corner.
    for (std::size_t r = size - 2; r < size; ++r)
        for (std::size_t c = size - 2; c < size; ++c) seg(r, c) = objstats::kIgnoreLabel;
    return seg;
}

RgbImage paint(const Grid<std::uint16_t>& seg, Rng& rng) {
    RgbImage img(seg.rows(), seg.cols());
    for (std::size_t r = 0; r < seg.rows(); ++r) {
        for (std::size_t c = 0; c < seg.cols(); ++c) {
            std::array<int, 3> base{};
            switch (seg(r, c)) {
                case kSky: base = {135, 180, 235}; break;
                case kBuilding: base = {150, 120, 100}; break;
                case kRoad: base = {80, 80, 85}; break;
                case kSidewalk: base = {170, 170, 160}; break;
                case kTree: base = {40, 120, 50}; break;
                case kSkyscraper: base = {200, 205, 215}; break;
                case kSignboard: base = {230, 60, 40}; break;
                default: base = {0, 0, 0}; break;
            }
            const int jitter = static_cast<int>(rng.uniform(-12.0, 12.0));
            for (int k = 0; k < 3; ++k) img.at(r, c)[k] = static_cast<std::uint8_t>(std::clamp(base[k] + jitter, 0, 255));
        }
    }
    return img;
}

// Fraction of conv cell (r, c) covered by the planted rectangle.
double coverage(const Rect& rect, std::size_t image, std::size_t conv, std::size_t r, std::size_t c) {
    const double cell = static_cast<double>(image) / static_cast<double>(conv);
    const double y0 = r * cell, y1 = (r + 1) * cell, x0 = c * cell, x1 = (c + 1) * cell;
    const double oy = std::max(0.0, std::min(y1, double(rect.r1)) - std::max(y0, double(rect.r0)));
    const double ox = std::max(0.0, std::min(x1, double(rect.c1)) - std::max(x0, double(rect.c0)));
    return (oy * ox) / (cell * cell);
}

}  // namespace

const objstats::ObjectNames& scene_object_names() {
    static const objstats::ObjectNames names = {
        "wall", "building", "sky", "floor", "tree", "ceiling", "road", "bed", "windowpane", "grass",
        "cabinet", "sidewalk", "person", "earth", "door", "table", "mountain", "plant", "curtain", "chair",
        "car", "water", "painting", "sofa", "shelf", "house", "sea", "mirror", "rug", "field",
        "armchair", "seat", "fence", "desk", "rock", "wardrobe", "lamp", "bathtub", "railing", "cushion",
        "base", "box", "column", "signboard", "chest of drawers", "counter", "sand", "sink", "skyscraper",
        "fireplace", "refrigerator", "grandstand", "path", "stairs", "runway", "case", "pool table", "pillow",
        "screen door", "stairway", "river", "bridge", "bookcase", "blind", "coffee table", "toilet", "flower",
        "book", "hill", "bench", "countertop", "stove", "palm", "kitchen island", "computer", "swivel chair",
        "boat", "bar", "arcade machine", "hovel", "bus", "towel", "light", "truck", "tower", "chandelier",
        "awning", "streetlight", "booth", "television receiver", "airplane", "dirt track", "apparel", "pole",
        "land", "bannister", "escalator", "ottoman", "bottle", "buffet", "poster", "stage", "van", "ship",
        "fountain", "conveyer belt", "canopy", "washer", "plaything", "swimming pool", "stool", "barrel",
        "basket", "waterfall", "tent", "bag", "minibike", "cradle", "oven", "ball", "food", "step", "tank",
        "trade name", "microwave", "pot", "animal", "bicycle", "lake", "dishwasher", "screen", "blanket",
        "sculpture", "hood", "sconce", "vase", "traffic light", "tray", "ashcan", "fan", "pier", "crt screen",
        "plate", "monitor", "bulletin board", "shower", "radiator", "glass", "clock", "flag"};
    return names;
}

fs::path write_dataset(const fs::path& dir, const Spec& spec) {
    fs::create_directories(dir / "tensors");
    fs::create_directories(dir / "segmentation");
    if (spec.with_images) fs::create_directories(dir / "images");

    {
        std::ofstream names(dir / "names.txt", std::ios::binary | std::ios::trunc);
        for (const auto& n : scene_object_names()) names << n << '\n';
    }

    io::DatasetManifest manifest;
    manifest.classes = spec.classes;
    for (const auto& m : spec.models) manifest.models.push_back(m.id);

    Rng scene_rng(spec.seed);
    std::vector<Rng> model_rngs;
    for (const auto& m : spec.models) model_rngs.emplace_back(m.seed);

    const std::size_t size = spec.image_size;
    for (std::size_t cls = 0; cls < spec.classes.size(); ++cls) {
        for (std::size_t k = 0; k < spec.images_per_class; ++k) {
            io::ImageEntry entry;
            entry.id = fmt::format("{}_{:03d}", spec.classes[cls], k);
            entry.class_index = cls;
            entry.height = entry.width = static_cast<std::uint32_t>(size);

            Rect planted{};
            // Scenes alternate the planted object between the two classes
            // only for the first two classes; further classes reuse class 1.
            const auto seg = make_scene(size, std::min<std::size_t>(cls, 1), scene_rng, planted);
            entry.segmentation = fs::path("segmentation") / (entry.id + ".tnsr");
            io::save_tensor({{static_cast<std::uint32_t>(size), static_cast<std::uint32_t>(size)}, seg.storage()},
                            dir / entry.segmentation);
            if (spec.with_images) {
                entry.image = fs::path("images") / (entry.id + ".png");
                write_png(paint(seg, scene_rng), dir / *entry.image);
            }

            for (std::size_t mi = 0; mi < spec.models.size(); ++mi) {
                const auto& model = spec.models[mi];
                auto& rng = model_rngs[mi];
                const std::size_t s = model.conv_size;
                const std::size_t kc = model.channels;
                std::vector<float> act(kc * s * s);
                std::vector<float> grad(kc * s * s);
                for (std::size_t ch = 0; ch < kc; ++ch) {
                    for (std::size_t r = 0; r < s; ++r) {
                        for (std::size_t c = 0; c < s; ++c) {
                            const std::size_t at = (ch * s + r) * s + c;
                            if (ch == 0) {
                                act[at] = static_cast<float>(2.0 * coverage(planted, size, s, r, c) +
                                                             rng.uniform(0.0, spec.activation_noise));
                                grad[at] = static_cast<float>(1.0 + rng.uniform(-0.1, 0.1));
                            } else {
                                act[at] = static_cast<float>(rng.uniform(0.0, 0.5));
                                grad[at] = static_cast<float>(rng.uniform(-0.02, 0.02));
                            }
                        }
                    }
                }
                const auto act_path = fs::path("tensors") / fmt::format("{}_{}_act.tnsr", entry.id, model.id);
                const auto grad_path = fs::path("tensors") / fmt::format("{}_{}_grad.tnsr", entry.id, model.id);
                const io::Shape shape = {static_cast<std::uint32_t>(kc), static_cast<std::uint32_t>(s),
                                         static_cast<std::uint32_t>(s)};
                io::save_tensor({shape, std::move(act)}, dir / act_path);
                io::save_tensor({shape, std::move(grad)}, dir / grad_path);
                entry.tensors[model.id] = {act_path, grad_path};
            }
            manifest.entries.push_back(std::move(entry));
        }
    }
    const auto path = dir / "manifest.json";
    io::save_manifest(manifest, path);
    return path;
}

}  // namespace maskscope::synthetic
