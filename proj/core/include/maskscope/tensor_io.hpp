#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "maskscope/error.hpp"
#include "maskscope/grid.hpp"

namespace maskscope::io {

// On-disk element codes of the TNSR container.
enum class DType : std::uint8_t { f32 = 1, u8 = 2, u16 = 3, i32 = 4 };

std::size_t element_size(DType dtype);
std::string_view dtype_name(DType dtype);

inline constexpr std::size_t kMaxRank = 4;
inline constexpr std::uint16_t kFormatVersion = 1;

using Shape = std::vector<std::uint32_t>;

// An n-dimensional array (rank 1..4) with row-major storage. Construction
// enforces the shape/buffer agreement; `load`/`decode` additionally enforce
// finiteness of f32 payloads.
class TensorRecord {
public:
    using Buffer = std::variant<std::vector<float>, std::vector<std::uint8_t>,
                                std::vector<std::uint16_t>, std::vector<std::int32_t>>;

    TensorRecord() = default;
    TensorRecord(Shape shape, std::vector<float> data);
    TensorRecord(Shape shape, std::vector<std::uint8_t> data);
    TensorRecord(Shape shape, std::vector<std::uint16_t> data);
    TensorRecord(Shape shape, std::vector<std::int32_t> data);

    DType dtype() const;
    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t element_count() const;
    const Buffer& buffer() const { return data_; }

    // Typed view; throws DataError when T does not match dtype().
    template <typename T>
    std::span<const T> values() const;

    friend bool operator==(const TensorRecord&, const TensorRecord&) = default;

private:
    void check_shape() const;

    Shape shape_;
    Buffer data_;
};

std::string shape_string(const Shape& shape);

enum class TensorErrorKind {
    BadMagic,
    UnsupportedVersion,
    UnsupportedDType,
    InvalidShape,
    ShapeOverflow,
    TruncatedHeader,
    TruncatedPayload,
    NonFiniteValue,
    TrailingData,
    WrongType,
    Io,
};

std::string_view to_string(TensorErrorKind kind);

class TensorFormatError : public DataError {
public:
    TensorFormatError(TensorErrorKind kind, std::uint64_t offset, const std::string& detail);
    TensorErrorKind kind() const { return kind_; }
    std::uint64_t offset() const { return offset_; }

private:
    TensorErrorKind kind_;
    std::uint64_t offset_;
};

// Serializes `record`; returns the number of bytes written. Throws
// TensorFormatError{Io} when the sink fails.
std::uint64_t write_tensor(const TensorRecord& record, std::ostream& sink);
std::vector<std::uint8_t> encode_tensor(const TensorRecord& record);

// Reads exactly one record from the stream. Bytes after the payload are left
// unread.
TensorRecord read_tensor(std::istream& source);
// Decodes a complete buffer; trailing bytes are an error.
TensorRecord decode_tensor(std::span<const std::uint8_t> bytes);

TensorRecord load_tensor(const std::filesystem::path& path);
void save_tensor(const TensorRecord& record, const std::filesystem::path& path);

// Helpers for the 2-D grids used throughout the pipeline.
TensorRecord to_tensor(const Grid<float>& grid);
Grid<float> to_float_grid(const TensorRecord& record);
Grid<std::uint16_t> to_label_grid(const TensorRecord& record);

}  // namespace maskscope::io
