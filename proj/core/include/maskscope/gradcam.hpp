#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "maskscope/grid.hpp"
#include "maskscope/image.hpp"
#include "maskscope/manifest.hpp"
#include "maskscope/tensor_io.hpp"

namespace maskscope::gradcam {

inline constexpr float kDefaultThreshold = 0.5f;

// ReLU of the gradient-weighted channel combination; non-negative.
struct Heatmap {
    Grid<float> values;
};

// Min-max normalized heatmap with values in [0,1]. A constant heatmap yields
// all zeros with `degenerate` set.
struct NormalizedMask {
    Grid<float> values;
    bool degenerate = false;
};

// 1 = pixel kept in the visual explanation.
struct BinaryMask {
    Grid<std::uint8_t> values;
    float threshold_used = kDefaultThreshold;
};

// Spatial mean of each gradient channel; gradients are f32 [K,H,W].
std::vector<float> channel_weights(const io::TensorRecord& gradients);

// max(0, sum_k weights[k] * activations[k]); activations are f32 [K,H,W].
// NumericError when a value overflows f32.
Heatmap compute_heatmap(const io::TensorRecord& activations, std::span<const float> weights);

// Corner-aligned bilinear resampling: source coordinates [0, H-1] map onto
// [0, rows-1] (likewise for columns). A single target row/column samples the
// first source row/column.
Grid<float> upsample_bilinear(const Grid<float>& map, std::size_t rows, std::size_t cols);

NormalizedMask normalize_mask(const Heatmap& heatmap);

// Resamples a normalized mask to another resolution; values stay in [0,1]
// and the degenerate flag carries over.
NormalizedMask resample_mask(const NormalizedMask& mask, std::size_t rows, std::size_t cols);

// Selects pixels with value >= t. Throws ConfigError if t is outside [0,1].
BinaryMask threshold_mask(const NormalizedMask& mask, float t);

// Keeps selected pixels and paints the rest black.
RgbImage apply_explanation(const RgbImage& image, const BinaryMask& mask);

struct MaskSet {
    NormalizedMask conv;   // conv-layer resolution
    NormalizedMask image;  // image resolution (H0, W0)
    BinaryMask binary;     // image resolution
};

// Normalized conv-resolution mask for one entry and model, loading the
// entry's activation and gradient tensors.
NormalizedMask conv_mask(const io::DatasetManifest& manifest, const io::ImageEntry& entry, const std::string& model);

// Full chain: weights -> heatmap -> normalize -> upsample -> threshold.
MaskSet mask_pipeline(const io::DatasetManifest& manifest, const io::ImageEntry& entry, const std::string& model,
                      float t);

// Same chain starting from a precomputed conv-resolution mask.
MaskSet expand_mask(const NormalizedMask& conv, std::size_t rows, std::size_t cols, float t);

}  // namespace maskscope::gradcam
