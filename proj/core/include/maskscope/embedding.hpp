#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "maskscope/gradcam.hpp"
#include "maskscope/grid.hpp"
#include "maskscope/manifest.hpp"

namespace maskscope::embedding {

inline constexpr std::size_t kDefaultComponents = 50;

struct PcaResult {
    Grid<double> scores;                    // N x C
    Grid<double> components;                // C x D, unit rows
    std::vector<double> explained_ratio;    // C, non-increasing
    std::size_t requested = 0;
    bool clamped = false;                   // requested > min(N-1, D)
};

// Projects the centered rows onto the top eigenvectors of the sample
// covariance. Each component is oriented so that its entry of largest
// magnitude is positive. Requires N >= 2.
PcaResult pca_reduce(const Grid<double>& x, std::size_t n_components = kDefaultComponents);
PcaResult pca_reduce(const Grid<float>& x, std::size_t n_components = kDefaultComponents);

Grid<double> squared_distances(const Grid<double>& points);

// Row-conditional Gaussian affinities p_{j|i}. Each row's precision is chosen
// so the row entropy (bits) equals log2(perplexity) within 1e-5: the
// precision is bracketed by doubling/halving, then refined by at most 50
// bisection steps. Requires N > 3 * perplexity.
Grid<double> perplexity_calibrate(const Grid<double>& sq_distances, double perplexity);

// (P + P^T) / 2N with off-diagonal entries floored at 1e-12 and renormalized.
Grid<double> joint_probabilities(const Grid<double>& conditional);

struct TsneParams {
    double perplexity = 30.0;
    int iterations = 1000;
    double learning_rate = 200.0;
    double early_exaggeration = 12.0;
    int exaggeration_iterations = 250;
    double initial_momentum = 0.5;
    double final_momentum = 0.8;
    int momentum_switch = 250;
    std::uint64_t seed = 42;

    // Throws ConfigError unless all values are positive and N > 3*perplexity.
    void validate(std::size_t n) const;
};

struct KlSample {
    int iteration = 0;
    double kl = 0.0;
};

struct EmbeddingResult {
    Grid<double> coords;  // N x 2
    std::vector<KlSample> kl_trace;
    TsneParams params;
};

// Exact O(N^2) t-SNE. The KL divergence against the un-exaggerated P is
// sampled before iterations 0, 10, 20, ... and once after the last update.
// Throws NumericError if it becomes non-finite.
EmbeddingResult tsne_embed(const Grid<double>& points, const TsneParams& params);

// Rows of flattened conv-resolution masks, in manifest order.
Grid<float> descriptor_matrix(const std::vector<gradcam::NormalizedMask>& masks);

struct MaskEmbedding {
    std::vector<std::string> ids;
    std::vector<std::size_t> classes;
    PcaResult pca;
    EmbeddingResult embedding;
};

// PCA then t-SNE on precomputed descriptors. Zero rows yield an empty
// result; a single row is placed at the origin.
MaskEmbedding embed_descriptors(const Grid<float>& descriptors, const TsneParams& params,
                                std::size_t n_components = kDefaultComponents);

MaskEmbedding embed_masks(const io::DatasetManifest& manifest, const std::string& model, const TsneParams& params,
                          std::size_t n_components = kDefaultComponents);

}  // namespace maskscope::embedding
