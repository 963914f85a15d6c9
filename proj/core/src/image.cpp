#include "maskscope/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include <png.h>

#include "maskscope/error.hpp"

namespace maskscope {

namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open image " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

RgbImage decode_png(const std::vector<std::uint8_t>& bytes, const fs::path& path) {
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
        throw DataError("cannot decode PNG " + path.string() + ": " + img.message);
    }
    img.format = PNG_FORMAT_RGB;
    RgbImage out(img.height, img.width);
    if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr)) {
        const std::string msg = img.message;
        png_image_free(&img);
        throw DataError("cannot decode PNG " + path.string() + ": " + msg);
    }
    return out;
}

// Binary PPM: "P6" <ws> width <ws> height <ws> maxval <single ws> data.
RgbImage decode_ppm(const std::vector<std::uint8_t>& bytes, const fs::path& path) {
    std::size_t pos = 2;
    auto skip = [&] {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto number = [&] {
        skip();
        std::size_t v = 0;
        const std::size_t start = pos;
        while (pos < bytes.size() && std::isdigit(bytes[pos]) && pos - start < 9) v = v * 10 + (bytes[pos++] - '0');
        if (pos == start) throw DataError("malformed PPM header in " + path.string());
        return v;
    };
    const std::size_t width = number();
    const std::size_t height = number();
    const std::size_t maxval = number();
    if (maxval != 255) throw DataError("only 8-bit PPM is supported: " + path.string());
    if (width == 0 || height == 0) throw DataError("empty PPM image: " + path.string());
    ++pos;
    const std::size_t need = width * height * 3;
    if (bytes.size() < pos + need) throw DataError("truncated PPM payload in " + path.string());
    RgbImage out(height, width);
    std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(pos), need, out.pixels.begin());
    return out;
}

}  // namespace

RgbImage read_image(const fs::path& path) {
    const auto bytes = slurp(path);
    if (bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0) return decode_png(bytes, path);
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return decode_ppm(bytes, path);
    throw DataError("unsupported image format (expected PNG or P6 PPM): " + path.string());
}

std::vector<std::uint8_t> encode_png(const RgbImage& image) {
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(image.cols);
    img.height = static_cast<png_uint_32>(image.rows);
    img.format = PNG_FORMAT_RGB;
    png_alloc_size_t size = 0;
    if (!png_image_write_get_memory_size(img, size, 0, image.pixels.data(), 0, nullptr)) {
        throw Error(std::string("PNG encoding failed: ") + img.message);
    }
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&img, out.data(), &size, 0, image.pixels.data(), 0, nullptr)) {
        throw Error(std::string("PNG encoding failed: ") + img.message);
    }
    out.resize(size);
    return out;
}

void write_png(const RgbImage& image, const fs::path& path) {
    const auto bytes = encode_png(image);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("cannot write " + path.string());
}

void write_ppm(const RgbImage& image, const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << "P6\n" << image.cols << ' ' << image.rows << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size()));
    if (!out) throw Error("cannot write " + path.string());
}

RgbImage downscale(const RgbImage& image, std::size_t max_side) {
    if (image.rows == 0 || image.cols == 0 || max_side == 0) return {};
    const std::size_t longest = std::max(image.rows, image.cols);
    if (longest <= max_side) return image;
    const std::size_t rows = std::max<std::size_t>(1, image.rows * max_side / longest);
    const std::size_t cols = std::max<std::size_t>(1, image.cols * max_side / longest);
    RgbImage out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t r0 = r * image.rows / rows;
        const std::size_t r1 = std::max(r0 + 1, (r + 1) * image.rows / rows);
        for (std::size_t c = 0; c < cols; ++c) {
            const std::size_t c0 = c * image.cols / cols;
            const std::size_t c1 = std::max(c0 + 1, (c + 1) * image.cols / cols);
            unsigned sum[3] = {0, 0, 0};
            for (std::size_t y = r0; y < r1; ++y)
                for (std::size_t x = c0; x < c1; ++x)
                    for (int k = 0; k < 3; ++k) sum[k] += image.at(y, x)[k];
            const auto n = static_cast<unsigned>((r1 - r0) * (c1 - c0));
            for (int k = 0; k < 3; ++k) out.at(r, c)[k] = static_cast<std::uint8_t>((sum[k] + n / 2) / n);
        }
    }
    return out;
}

RgbImage render_gray(const Grid<float>& values) {
    RgbImage out(values.rows(), values.cols());
    auto v = values.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
        const auto g = static_cast<std::uint8_t>(std::lround(std::clamp(v[i], 0.0f, 1.0f) * 255.0f));
        std::fill_n(&out.pixels[i * 3], 3, g);
    }
    return out;
}

}  // namespace maskscope
