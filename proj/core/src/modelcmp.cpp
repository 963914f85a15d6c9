#include "maskscope/modelcmp.hpp"

#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "maskscope/csv.hpp"
#include "maskscope/parallel.hpp"

namespace maskscope::modelcmp {

double average_residual(const gradcam::NormalizedMask& a, const gradcam::NormalizedMask& b) {
    if (!a.values.same_shape(b.values)) {
        throw DataError("average_residual: mask sizes differ (" + std::to_string(a.values.rows()) + "x" +
                        std::to_string(a.values.cols()) + " vs " + std::to_string(b.values.rows()) + "x" +
                        std::to_string(b.values.cols()) + ")");
    }
    if (a.values.empty()) throw DataError("average_residual: empty masks");
    auto va = a.values.values();
    auto vb = b.values.values();
    double sum = 0.0;
    for (std::size_t i = 0; i < va.size(); ++i) sum += std::abs(static_cast<double>(va[i]) - vb[i]);
    return sum / static_cast<double>(va.size());
}

ARMatrix ar_matrix(const io::DatasetManifest& manifest, const std::vector<std::string>& models,
                   const std::vector<std::vector<gradcam::NormalizedMask>>& conv_masks) {
    const std::size_t m = models.size();
    const std::size_t n = manifest.entries.size();
    if (conv_masks.size() != m) throw DataError("ar_matrix: expected masks for " + std::to_string(m) + " models");
    for (std::size_t k = 0; k < m; ++k) {
        if (conv_masks[k].size() != n) {
            throw DataError("ar_matrix: model " + models[k] + " has " + std::to_string(conv_masks[k].size()) +
                            " masks for " + std::to_string(n) + " images");
        }
    }

    // residuals[i] holds the upper triangle for image i.
    std::vector<std::vector<double>> residuals(n);
    parallel_for(n, [&](std::size_t i) {
        const auto& entry = manifest.entries[i];
        std::vector<gradcam::NormalizedMask> full(m);
        for (std::size_t k = 0; k < m; ++k) full[k] = gradcam::resample_mask(conv_masks[k][i], entry.height, entry.width);
        auto& row = residuals[i];
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = a + 1; b < m; ++b) row.push_back(average_residual(full[a], full[b]));
    });

    ARMatrix out{models, Grid<double>(m, m, 0.0), Grid<std::size_t>(m, m, n)};
    std::size_t pair = 0;
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = a + 1; b < m; ++b, ++pair) {
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) sum += residuals[i][pair];
            const double mean = n > 0 ? sum / static_cast<double>(n) : 0.0;
            out.values(a, b) = mean;
            out.values(b, a) = mean;
        }
    }
    return out;
}

ARMatrix ar_matrix(const io::DatasetManifest& manifest, const std::vector<std::string>& models) {
    std::vector<std::vector<gradcam::NormalizedMask>> masks(models.size());
    for (std::size_t k = 0; k < models.size(); ++k) {
        const auto& model = models[k];
        masks[k].resize(manifest.entries.size());
        for (const auto& entry : manifest.entries) {
            if (!entry.tensors.contains(model)) {
                throw DataError("image " + entry.id + " has no mask for model " + model);
            }
        }
        parallel_for(manifest.entries.size(), [&](std::size_t i) {
            masks[k][i] = gradcam::conv_mask(manifest, manifest.entries[i], model);
        });
    }
    return ar_matrix(manifest, models, masks);
}

void write_ar_csv(std::ostream& out, const ARMatrix& matrix) {
    out << "model";
    for (const auto& id : matrix.models) out << ',' << csv::field(id);
    out << '\n';
    for (std::size_t a = 0; a < matrix.models.size(); ++a) {
        out << csv::field(matrix.models[a]);
        for (std::size_t b = 0; b < matrix.models.size(); ++b) out << ',' << csv::number(matrix.values(a, b));
        out << '\n';
    }
}

void write_ar_markdown(std::ostream& out, const ARMatrix& matrix) {
    out << "| AR |";
    for (const auto& id : matrix.models) out << ' ' << id << " |";
    out << "\n|---|";
    for (std::size_t b = 0; b < matrix.models.size(); ++b) out << "---:|";
    out << '\n';
    for (std::size_t a = 0; a < matrix.models.size(); ++a) {
        out << "| " << matrix.models[a] << " |";
        for (std::size_t b = 0; b < matrix.models.size(); ++b) out << ' ' << fmt::format("{:.4f}", matrix.values(a, b)) << " |";
        out << '\n';
    }
}

}  // namespace maskscope::modelcmp
