#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "maskscope/gradcam.hpp"
#include "maskscope/grid.hpp"
#include "maskscope/manifest.hpp"

namespace maskscope::modelcmp {

// Mean absolute per-pixel difference of two equally sized masks, in [0,1].
double average_residual(const gradcam::NormalizedMask& a, const gradcam::NormalizedMask& b);

struct ARMatrix {
    std::vector<std::string> models;
    Grid<double> values;                // symmetric, zero diagonal
    Grid<std::size_t> image_counts;     // images averaged per pair
};

// conv_masks[m][i]: conv-resolution mask of model m for manifest entry i.
// Each pair is compared after resampling both masks to the entry's image
// resolution; per-image residuals are averaged in double precision.
ARMatrix ar_matrix(const io::DatasetManifest& manifest, const std::vector<std::string>& models,
                   const std::vector<std::vector<gradcam::NormalizedMask>>& conv_masks);

// Computes the conv masks from the manifest tensors first. Throws DataError
// naming the image and model when an entry lacks a model's tensors.
ARMatrix ar_matrix(const io::DatasetManifest& manifest, const std::vector<std::string>& models);

// Header row and column carry the model ids.
void write_ar_csv(std::ostream& out, const ARMatrix& matrix);
void write_ar_markdown(std::ostream& out, const ARMatrix& matrix);

}  // namespace maskscope::modelcmp
