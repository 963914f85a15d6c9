#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "maskscope/objstats.hpp"

namespace maskscope::synthetic {

// Scene-parsing label ids used by the generator (150-category scheme).
inline constexpr std::uint16_t kBuilding = 1;
inline constexpr std::uint16_t kSky = 2;
inline constexpr std::uint16_t kTree = 4;
inline constexpr std::uint16_t kRoad = 6;
inline constexpr std::uint16_t kSidewalk = 11;
inline constexpr std::uint16_t kSignboard = 43;
inline constexpr std::uint16_t kSkyscraper = 48;

// The 150 scene-parsing category names, index = label id.
const objstats::ObjectNames& scene_object_names();

struct ModelSpec {
    std::string id;
    std::uint32_t conv_size = 7;  // square conv map
    std::uint32_t channels = 16;
    std::uint64_t seed = 1;
};

// Two-class street-scene fixture. Class 0 images contain a tall skyscraper
// in the upper half, class 1 images a signboard in the lower half. Every
// model's gradients weight one activation channel that responds to the
// planted object, so Grad-CAM masks concentrate on it.
struct Spec {
    std::size_t images_per_class = 60;
    std::uint32_t image_size = 64;
    std::vector<ModelSpec> models = {{"model_a", 7, 16, 11}, {"model_b", 8, 16, 23}};
    std::vector<std::string> classes = {"city_a", "city_b"};
    std::uint64_t seed = 7;
    bool with_images = true;
    double activation_noise = 0.25;
};

// Writes manifest.json, names.txt, images/, tensors/ and segmentation/ under
// dir and returns the manifest path.
std::filesystem::path write_dataset(const std::filesystem::path& dir, const Spec& spec = {});

}  // namespace maskscope::synthetic
