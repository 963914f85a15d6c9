#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "maskscope/error.hpp"

namespace maskscope::io {

enum class TensorKind { activation, gradient };

struct TensorPaths {
    std::filesystem::path activation;
    std::filesystem::path gradient;
};

// Paths are stored as written in the manifest (relative to it); use
// DatasetManifest::resolve to obtain a usable path.
struct ImageEntry {
    std::string id;
    std::size_t class_index = 0;
    std::optional<std::filesystem::path> image;
    std::filesystem::path segmentation;
    std::map<std::string, TensorPaths> tensors;
    std::uint32_t height = 0;
    std::uint32_t width = 0;
};

// Conv-layer geometry shared by every entry of one model.
struct ModelGeometry {
    std::uint32_t channels = 0;
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    friend bool operator==(const ModelGeometry&, const ModelGeometry&) = default;
};

struct DatasetManifest {
    std::filesystem::path source;    // manifest file
    std::filesystem::path base_dir;  // directory relative paths resolve against
    std::vector<std::string> classes;
    std::vector<std::string> models;
    std::vector<ImageEntry> entries;
    std::map<std::string, ModelGeometry> geometry;

    std::filesystem::path resolve(const std::filesystem::path& p) const;
    std::filesystem::path tensor_path(const ImageEntry& entry, const std::string& model, TensorKind kind) const;

    bool has_model(const std::string& model) const;
    // N^c: number of entries per class index.
    std::vector<std::size_t> class_counts() const;
};

// Schema violations, missing files and shape disagreements all raise
// ManifestError (a DataError); the message names the offending field,
// entry id and model.
class ManifestError : public DataError {
public:
    using DataError::DataError;
};

struct LoadOptions {
    // Parse every referenced tensor and check shape agreement.
    bool validate_tensors = true;
};

DatasetManifest load_manifest(const std::filesystem::path& path, LoadOptions options = {});

// Writes the JSON form (paths written as stored in the entries).
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

}  // namespace maskscope::io
