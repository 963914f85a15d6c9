#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "maskscope/embedding.hpp"
#include "maskscope/gradcam.hpp"
#include "maskscope/objstats.hpp"

namespace maskscope::report {

// Pipeline stages in execution order.
enum class Stage { masks, explanations, embedding, objstats, ar, figures };

std::string_view stage_name(Stage stage);

// Adds prerequisites and returns the closure in execution order.
std::vector<Stage> resolve_stages(const std::vector<Stage>& targets);

struct RunConfig {
    std::filesystem::path manifest;
    std::filesystem::path out_dir;
    float threshold = gradcam::kDefaultThreshold;
    embedding::TsneParams tsne;
    std::size_t pca_components = embedding::kDefaultComponents;
    double min_avg_pixels = objstats::kDefaultMinAvgPixels;
    std::size_t num_objects = objstats::kDefaultObjects;
    std::vector<std::string> models;  // empty = every manifest model
    std::size_t thumbnail_cap = 500;
    // Object names; defaults to names.txt next to the manifest when present.
    std::optional<std::filesystem::path> names_file;
    std::vector<Stage> stages = {Stage::figures};
    // When false, stages are never computed: every requested stage must
    // already have up-to-date outputs (otherwise ConfigError).
    bool compute = true;

    // Throws ConfigError on invalid values.
    void validate() const;
};

struct StageRecord {
    Stage stage = Stage::masks;
    bool cached = false;
    double seconds = 0.0;
    std::vector<std::filesystem::path> outputs;
};

struct RunReport {
    std::vector<StageRecord> stages;
    std::vector<std::string> notes;

    std::vector<std::filesystem::path> artifacts() const;
};

// Runs the requested stages (plus prerequisites). Each stage writes under
// out_dir/<stage>/ and is skipped when its recorded key (hash of the
// relevant configuration and the manifest's input digest) still matches.
// A stage that fails keeps its ".partial" marker; the error names the stage
// and, where applicable, the entry.
RunReport run(const RunConfig& config);

}  // namespace maskscope::report
