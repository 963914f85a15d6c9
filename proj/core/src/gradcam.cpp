#include "maskscope/gradcam.hpp"

#include <algorithm>
#include <cmath>

namespace maskscope::gradcam {

namespace {

struct MapDims {
    std::size_t channels, rows, cols;
};

MapDims check_maps(const io::TensorRecord& t, const char* what) {
    if (t.dtype() != io::DType::f32 || t.rank() != 3) {
        throw DataError(std::string(what) + " must be an f32 [K,H,W] tensor, got " +
                        std::string(io::dtype_name(t.dtype())) + " " + io::shape_string(t.shape()));
    }
    return {t.shape()[0], t.shape()[1], t.shape()[2]};
}

}  // namespace

std::vector<float> channel_weights(const io::TensorRecord& gradients) {
    const auto [k, h, w] = check_maps(gradients, "gradients");
    const auto g = gradients.values<float>();
    const std::size_t plane = h * w;
    std::vector<float> weights(k);
    for (std::size_t c = 0; c < k; ++c) {
        double sum = 0.0;
        for (std::size_t i = 0; i < plane; ++i) sum += g[c * plane + i];
        weights[c] = static_cast<float>(sum / static_cast<double>(plane));
    }
    return weights;
}

Heatmap compute_heatmap(const io::TensorRecord& activations, std::span<const float> weights) {
    const auto [k, h, w] = check_maps(activations, "activations");
    if (weights.size() != k) {
        throw DataError("channel count mismatch: " + std::to_string(weights.size()) + " weights for " +
                        std::to_string(k) + " activation maps");
    }
    const auto a = activations.values<float>();
    const std::size_t plane = h * w;
    std::vector<double> acc(plane, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
        const double wc = weights[c];
        if (wc == 0.0) continue;
        const float* src = a.data() + c * plane;
        for (std::size_t i = 0; i < plane; ++i) acc[i] += wc * src[i];
    }
    Grid<float> out(h, w);
    auto dst = out.values();
    for (std::size_t i = 0; i < plane; ++i) {
        dst[i] = static_cast<float>(std::max(0.0, acc[i]));
        if (!std::isfinite(dst[i])) {
            throw NumericError("heatmap value at (" + std::to_string(i / w) + "," + std::to_string(i % w) +
                               ") overflows f32");
        }
    }
    return {std::move(out)};
}

Grid<float> upsample_bilinear(const Grid<float>& map, std::size_t rows, std::size_t cols) {
    if (map.empty()) throw DataError("upsample_bilinear: empty source map");
    if (rows == 0 || cols == 0) throw DataError("upsample_bilinear: zero target dimension");

    auto coord = [](std::size_t i, std::size_t src, std::size_t dst) -> std::pair<std::size_t, double> {
        if (dst == 1 || src == 1) return {0, 0.0};
        const double pos = static_cast<double>(i) * static_cast<double>(src - 1) / static_cast<double>(dst - 1);
        const auto lo = std::min(static_cast<std::size_t>(pos), src - 2);
        return {lo, pos - static_cast<double>(lo)};
    };

    Grid<float> out(rows, cols);
    const std::size_t sr = map.rows();
    const std::size_t sc = map.cols();
    for (std::size_t r = 0; r < rows; ++r) {
        const auto [r0, fr] = coord(r, sr, rows);
        const std::size_t r1 = std::min(r0 + 1, sr - 1);
        for (std::size_t c = 0; c < cols; ++c) {
            const auto [c0, fc] = coord(c, sc, cols);
            const std::size_t c1 = std::min(c0 + 1, sc - 1);
            // a + f*(b - a) reproduces equal endpoints exactly.
            const double top = map(r0, c0) + fc * (static_cast<double>(map(r0, c1)) - map(r0, c0));
            const double bottom = map(r1, c0) + fc * (static_cast<double>(map(r1, c1)) - map(r1, c0));
            double v = top + fr * (bottom - top);
            // Clamp against rounding so the result stays inside the corner range.
            const double lo = std::min({map(r0, c0), map(r0, c1), map(r1, c0), map(r1, c1)});
            const double hi = std::max({map(r0, c0), map(r0, c1), map(r1, c0), map(r1, c1)});
            out(r, c) = static_cast<float>(std::clamp(v, lo, hi));
        }
    }
    return out;
}

NormalizedMask normalize_mask(const Heatmap& heatmap) {
    const auto v = heatmap.values.values();
    if (v.empty()) return {heatmap.values, true};
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    const double lo = *mn;
    const double hi = *mx;
    if (!(hi > lo)) return {Grid<float>(heatmap.values.rows(), heatmap.values.cols(), 0.0f), true};
    Grid<float> out(heatmap.values.rows(), heatmap.values.cols());
    auto dst = out.values();
    const double span = hi - lo;
    for (std::size_t i = 0; i < v.size(); ++i) dst[i] = static_cast<float>((v[i] - lo) / span);
    return {std::move(out), false};
}

NormalizedMask resample_mask(const NormalizedMask& mask, std::size_t rows, std::size_t cols) {
    if (mask.values.rows() == rows && mask.values.cols() == cols) return mask;
    return {upsample_bilinear(mask.values, rows, cols), mask.degenerate};
}

BinaryMask threshold_mask(const NormalizedMask& mask, float t) {
    if (!(t >= 0.0f && t <= 1.0f)) throw ConfigError("threshold " + std::to_string(t) + " outside [0,1]");
    Grid<std::uint8_t> out(mask.values.rows(), mask.values.cols());
    auto src = mask.values.values();
    auto dst = out.values();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] >= t ? 1 : 0;
    return {std::move(out), t};
}

RgbImage apply_explanation(const RgbImage& image, const BinaryMask& mask) {
    if (image.rows != mask.values.rows() || image.cols != mask.values.cols()) {
        throw DataError("explanation: image is " + std::to_string(image.rows) + "x" + std::to_string(image.cols) +
                        " but mask is " + std::to_string(mask.values.rows()) + "x" +
                        std::to_string(mask.values.cols()));
    }
    RgbImage out(image.rows, image.cols);
    auto m = mask.values.values();
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (m[i]) std::copy_n(&image.pixels[i * 3], 3, &out.pixels[i * 3]);
    }
    return out;
}

NormalizedMask conv_mask(const io::DatasetManifest& manifest, const io::ImageEntry& entry, const std::string& model) {
    const auto grads = io::load_tensor(manifest.tensor_path(entry, model, io::TensorKind::gradient));
    const auto acts = io::load_tensor(manifest.tensor_path(entry, model, io::TensorKind::activation));
    if (acts.shape() != grads.shape()) {
        throw DataError("shape mismatch in entry " + entry.id + ", model " + model);
    }
    const auto weights = channel_weights(grads);
    return normalize_mask(compute_heatmap(acts, weights));
}

MaskSet expand_mask(const NormalizedMask& conv, std::size_t rows, std::size_t cols, float t) {
    auto image = resample_mask(conv, rows, cols);
    auto binary = threshold_mask(image, t);
    return {conv, std::move(image), std::move(binary)};
}

MaskSet mask_pipeline(const io::DatasetManifest& manifest, const io::ImageEntry& entry, const std::string& model,
                      float t) {
    return expand_mask(conv_mask(manifest, entry, model), entry.height, entry.width, t);
}

}  // namespace maskscope::gradcam
