#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "maskscope/grid.hpp"

namespace maskscope {

// 8-bit interleaved RGB image.
struct RgbImage {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint8_t> pixels;  // rows * cols * 3

    RgbImage() = default;
    RgbImage(std::size_t r, std::size_t c, std::uint8_t fill = 0) : rows(r), cols(c), pixels(r * c * 3, fill) {}

    std::uint8_t* at(std::size_t r, std::size_t c) { return &pixels[(r * cols + c) * 3]; }
    const std::uint8_t* at(std::size_t r, std::size_t c) const { return &pixels[(r * cols + c) * 3]; }

    friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

// Reads an 8-bit PNG (gray, palette and alpha variants are converted to RGB)
// or a binary PPM (P6, maxval 255). Throws DataError otherwise.
RgbImage read_image(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_png(const RgbImage& image);
void write_png(const RgbImage& image, const std::filesystem::path& path);
void write_ppm(const RgbImage& image, const std::filesystem::path& path);

// Box-filtered downscale to fit within max_side x max_side, preserving aspect.
RgbImage downscale(const RgbImage& image, std::size_t max_side);

// Grayscale rendering of a [0,1] grid (0 black, 1 white).
RgbImage render_gray(const Grid<float>& values);

}  // namespace maskscope
