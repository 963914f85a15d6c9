#include "maskscope/tensor_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace maskscope::io {

namespace {

constexpr std::array<char, 4> kMagic = {'T', 'N', 'S', 'R'};
constexpr std::size_t kFixedHeader = 8;  // magic, version, dtype, ndim

template <typename T>
constexpr DType dtype_of() {
    if constexpr (std::is_same_v<T, float>) return DType::f32;
    else if constexpr (std::is_same_v<T, std::uint8_t>) return DType::u8;
    else if constexpr (std::is_same_v<T, std::uint16_t>) return DType::u16;
    else return DType::i32;
}

void put_le(std::vector<std::uint8_t>& out, std::uint64_t value, std::size_t bytes) {
    for (std::size_t i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

std::uint64_t get_le(const std::uint8_t* p, std::size_t bytes) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

template <typename T>
std::uint64_t raw_bits(T value) {
    if constexpr (std::is_same_v<T, float>) return std::bit_cast<std::uint32_t>(value);
    else if constexpr (std::is_same_v<T, std::int32_t>) return std::bit_cast<std::uint32_t>(value);
    else return value;
}

template <typename T>
T from_bits(std::uint64_t bits) {
    if constexpr (std::is_same_v<T, float>) return std::bit_cast<float>(static_cast<std::uint32_t>(bits));
    else if constexpr (std::is_same_v<T, std::int32_t>) return std::bit_cast<std::int32_t>(static_cast<std::uint32_t>(bits));
    else return static_cast<T>(bits);
}

// Pulls bytes from either a stream or an in-memory buffer while tracking the
// absolute offset for error messages.
class ByteSource {
public:
    explicit ByteSource(std::istream& in) : stream_(&in) {}
    explicit ByteSource(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    // Appends up to n bytes to out; returns how many were available.
    std::size_t take(std::size_t n, std::vector<std::uint8_t>& out) {
        const std::size_t before = out.size();
        if (stream_ != nullptr) {
            constexpr std::size_t kChunk = std::size_t{1} << 20;
            std::size_t remaining = n;
            while (remaining > 0) {
                const std::size_t step = std::min(remaining, kChunk);
                const std::size_t base = out.size();
                out.resize(base + step);
                stream_->read(reinterpret_cast<char*>(out.data() + base), static_cast<std::streamsize>(step));
                const auto got = static_cast<std::size_t>(stream_->gcount());
                out.resize(base + got);
                remaining -= got;
                if (got < step) break;
            }
        } else {
            const std::size_t avail = std::min(n, bytes_.size() - pos_);
            out.insert(out.end(), bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                       bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + avail));
            pos_ += avail;
        }
        const std::size_t got = out.size() - before;
        offset_ += got;
        return got;
    }

    std::uint64_t offset() const { return offset_; }
    bool exhausted() const { return stream_ == nullptr ? pos_ == bytes_.size() : true; }

private:
    std::istream* stream_ = nullptr;
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
    std::uint64_t offset_ = 0;
};

[[noreturn]] void fail(TensorErrorKind kind, std::uint64_t offset, const std::string& detail) {
    throw TensorFormatError(kind, offset, detail);
}

template <typename T>
std::vector<T> decode_payload(const std::vector<std::uint8_t>& raw, std::size_t count, std::uint64_t base) {
    std::vector<T> values(count);
    const std::uint8_t* p = raw.data();
    for (std::size_t i = 0; i < count; ++i) {
        values[i] = from_bits<T>(get_le(p + i * sizeof(T), sizeof(T)));
        if constexpr (std::is_same_v<T, float>) {
            if (!std::isfinite(values[i])) {
                fail(TensorErrorKind::NonFiniteValue, base + i * sizeof(T),
                     "f32 element " + std::to_string(i) + " is not finite");
            }
        }
    }
    return values;
}

TensorRecord parse(ByteSource& src) {
    std::vector<std::uint8_t> header;
    if (src.take(kFixedHeader, header) < 4) {
        fail(TensorErrorKind::TruncatedHeader, src.offset(), "stream ends inside the magic");
    }
    if (!std::equal(kMagic.begin(), kMagic.end(), header.begin(),
                    [](char a, std::uint8_t b) { return static_cast<std::uint8_t>(a) == b; })) {
        fail(TensorErrorKind::BadMagic, 0, "expected \"TNSR\"");
    }
    if (header.size() < kFixedHeader) {
        fail(TensorErrorKind::TruncatedHeader, src.offset(), "stream ends inside the fixed header");
    }
    const auto version = static_cast<std::uint16_t>(get_le(header.data() + 4, 2));
    if (version != kFormatVersion) {
        fail(TensorErrorKind::UnsupportedVersion, 4, "version " + std::to_string(version));
    }
    const std::uint8_t code = header[6];
    if (code < 1 || code > 4) {
        fail(TensorErrorKind::UnsupportedDType, 6, "dtype code " + std::to_string(code));
    }
    const auto dtype = static_cast<DType>(code);
    const std::size_t ndim = header[7];
    if (ndim == 0 || ndim > kMaxRank) {
        fail(TensorErrorKind::InvalidShape, 7, "rank " + std::to_string(ndim) + " outside 1..4");
    }

    std::vector<std::uint8_t> dims;
    if (src.take(4 * ndim, dims) < 4 * ndim) {
        fail(TensorErrorKind::TruncatedHeader, src.offset(), "stream ends inside the shape");
    }
    Shape shape(ndim);
    std::uint64_t count = 1;
    for (std::size_t i = 0; i < ndim; ++i) {
        const std::uint64_t at = kFixedHeader + 4 * i;
        shape[i] = static_cast<std::uint32_t>(get_le(dims.data() + 4 * i, 4));
        if (shape[i] == 0) fail(TensorErrorKind::InvalidShape, at, "zero-sized dimension " + std::to_string(i));
        if (count > std::numeric_limits<std::uint64_t>::max() / shape[i]) {
            fail(TensorErrorKind::ShapeOverflow, at, "element count overflows 64 bits");
        }
        count *= shape[i];
    }
    const std::uint64_t header_len = kFixedHeader + 4 * ndim;
    const std::size_t esize = element_size(dtype);
    if (count > std::numeric_limits<std::uint64_t>::max() / esize) {
        fail(TensorErrorKind::ShapeOverflow, header_len - 4, "payload size overflows 64 bits");
    }
    const std::uint64_t payload_len = count * esize;
    if (payload_len > std::numeric_limits<std::size_t>::max()) {
        fail(TensorErrorKind::ShapeOverflow, header_len - 4, "payload does not fit in memory");
    }

    std::vector<std::uint8_t> raw;
    const std::size_t got = src.take(static_cast<std::size_t>(payload_len), raw);
    if (got < payload_len) {
        fail(TensorErrorKind::TruncatedPayload, header_len + got,
             "expected " + std::to_string(payload_len) + " payload bytes, found " + std::to_string(got));
    }

    const auto n = static_cast<std::size_t>(count);
    switch (dtype) {
        case DType::f32: return {std::move(shape), decode_payload<float>(raw, n, header_len)};
        case DType::u8: return {std::move(shape), decode_payload<std::uint8_t>(raw, n, header_len)};
        case DType::u16: return {std::move(shape), decode_payload<std::uint16_t>(raw, n, header_len)};
        case DType::i32: return {std::move(shape), decode_payload<std::int32_t>(raw, n, header_len)};
    }
    fail(TensorErrorKind::UnsupportedDType, 6, "unreachable");
}

}  // namespace

std::size_t element_size(DType dtype) {
    switch (dtype) {
        case DType::f32: return 4;
        case DType::u8: return 1;
        case DType::u16: return 2;
        case DType::i32: return 4;
    }
    return 0;
}

std::string_view dtype_name(DType dtype) {
    switch (dtype) {
        case DType::f32: return "f32";
        case DType::u8: return "u8";
        case DType::u16: return "u16";
        case DType::i32: return "i32";
    }
    return "?";
}

std::string_view to_string(TensorErrorKind kind) {
    switch (kind) {
        case TensorErrorKind::BadMagic: return "BadMagic";
        case TensorErrorKind::UnsupportedVersion: return "UnsupportedVersion";
        case TensorErrorKind::UnsupportedDType: return "UnsupportedDType";
        case TensorErrorKind::InvalidShape: return "InvalidShape";
        case TensorErrorKind::ShapeOverflow: return "ShapeOverflow";
        case TensorErrorKind::TruncatedHeader: return "TruncatedHeader";
        case TensorErrorKind::TruncatedPayload: return "TruncatedPayload";
        case TensorErrorKind::NonFiniteValue: return "NonFiniteValue";
        case TensorErrorKind::TrailingData: return "TrailingData";
        case TensorErrorKind::WrongType: return "WrongType";
        case TensorErrorKind::Io: return "Io";
    }
    return "?";
}

TensorFormatError::TensorFormatError(TensorErrorKind kind, std::uint64_t offset, const std::string& detail)
    : DataError(std::string(to_string(kind)) + " at byte " + std::to_string(offset) + ": " + detail),
      kind_(kind),
      offset_(offset) {}

std::string shape_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << ']';
    return os.str();
}

TensorRecord::TensorRecord(Shape shape, std::vector<float> data) : shape_(std::move(shape)), data_(std::move(data)) { check_shape(); }
TensorRecord::TensorRecord(Shape shape, std::vector<std::uint8_t> data) : shape_(std::move(shape)), data_(std::move(data)) { check_shape(); }
TensorRecord::TensorRecord(Shape shape, std::vector<std::uint16_t> data) : shape_(std::move(shape)), data_(std::move(data)) { check_shape(); }
TensorRecord::TensorRecord(Shape shape, std::vector<std::int32_t> data) : shape_(std::move(shape)), data_(std::move(data)) { check_shape(); }

void TensorRecord::check_shape() const {
    if (shape_.empty() || shape_.size() > kMaxRank) {
        throw TensorFormatError(TensorErrorKind::InvalidShape, 0, "rank " + std::to_string(shape_.size()) + " outside 1..4");
    }
    std::uint64_t count = 1;
    for (auto d : shape_) {
        if (d == 0) throw TensorFormatError(TensorErrorKind::InvalidShape, 0, "zero-sized dimension in " + shape_string(shape_));
        if (count > std::numeric_limits<std::uint64_t>::max() / d) {
            throw TensorFormatError(TensorErrorKind::ShapeOverflow, 0, "element count overflows 64 bits");
        }
        count *= d;
    }
    const std::size_t have = std::visit([](const auto& v) { return v.size(); }, data_);
    if (have != count) {
        throw TensorFormatError(TensorErrorKind::InvalidShape, 0,
                                "buffer holds " + std::to_string(have) + " elements, shape " + shape_string(shape_) +
                                    " needs " + std::to_string(count));
    }
}

DType TensorRecord::dtype() const {
    return std::visit([](const auto& v) { return dtype_of<typename std::decay_t<decltype(v)>::value_type>(); }, data_);
}

std::size_t TensorRecord::element_count() const {
    return std::visit([](const auto& v) { return v.size(); }, data_);
}

template <typename T>
std::span<const T> TensorRecord::values() const {
    if (const auto* v = std::get_if<std::vector<T>>(&data_)) return *v;
    throw TensorFormatError(TensorErrorKind::WrongType, 0,
                            "tensor holds " + std::string(dtype_name(dtype())) + ", requested " +
                                std::string(dtype_name(dtype_of<T>())));
}

template std::span<const float> TensorRecord::values<float>() const;
template std::span<const std::uint8_t> TensorRecord::values<std::uint8_t>() const;
template std::span<const std::uint16_t> TensorRecord::values<std::uint16_t>() const;
template std::span<const std::int32_t> TensorRecord::values<std::int32_t>() const;

std::vector<std::uint8_t> encode_tensor(const TensorRecord& record) {
    std::vector<std::uint8_t> out;
    out.reserve(kFixedHeader + 4 * record.rank() + record.element_count() * element_size(record.dtype()));
    out.insert(out.end(), kMagic.begin(), kMagic.end());
    put_le(out, kFormatVersion, 2);
    out.push_back(static_cast<std::uint8_t>(record.dtype()));
    out.push_back(static_cast<std::uint8_t>(record.rank()));
    for (auto d : record.shape()) put_le(out, d, 4);
    std::visit(
        [&](const auto& values) {
            using T = typename std::decay_t<decltype(values)>::value_type;
            for (T v : values) put_le(out, raw_bits(v), sizeof(T));
        },
        record.buffer());
    return out;
}

std::uint64_t write_tensor(const TensorRecord& record, std::ostream& sink) {
    const auto bytes = encode_tensor(record);
    sink.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!sink) throw TensorFormatError(TensorErrorKind::Io, 0, "sink write failed");
    return bytes.size();
}

TensorRecord read_tensor(std::istream& source) {
    ByteSource src(source);
    return parse(src);
}

TensorRecord decode_tensor(std::span<const std::uint8_t> bytes) {
    ByteSource src(bytes);
    auto record = parse(src);
    if (!src.exhausted()) {
        fail(TensorErrorKind::TrailingData, src.offset(),
             std::to_string(bytes.size() - src.offset()) + " bytes after the payload");
    }
    return record;
}

TensorRecord load_tensor(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TensorFormatError(TensorErrorKind::Io, 0, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return decode_tensor(bytes);
    } catch (const TensorFormatError& e) {
        throw TensorFormatError(e.kind(), e.offset(), path.string() + ": " + e.what());
    }
}

void save_tensor(const TensorRecord& record, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw TensorFormatError(TensorErrorKind::Io, 0, "cannot create " + path.string());
    write_tensor(record, out);
    out.flush();
    if (!out) throw TensorFormatError(TensorErrorKind::Io, 0, "write failed for " + path.string());
}

TensorRecord to_tensor(const Grid<float>& grid) {
    return {{static_cast<std::uint32_t>(grid.rows()), static_cast<std::uint32_t>(grid.cols())}, grid.storage()};
}

Grid<float> to_float_grid(const TensorRecord& record) {
    if (record.rank() != 2) {
        throw DataError("expected a 2-D f32 tensor, got shape " + shape_string(record.shape()));
    }
    auto v = record.values<float>();
    return {record.shape()[0], record.shape()[1], std::vector<float>(v.begin(), v.end())};
}

Grid<std::uint16_t> to_label_grid(const TensorRecord& record) {
    if (record.rank() != 2) {
        throw DataError("expected a 2-D u16 label tensor, got shape " + shape_string(record.shape()));
    }
    auto v = record.values<std::uint16_t>();
    return {record.shape()[0], record.shape()[1], std::vector<std::uint16_t>(v.begin(), v.end())};
}

}  // namespace maskscope::io
