#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "maskscope/tensor_io.hpp"

using namespace maskscope::io;

namespace {

std::string bytes_of(const TensorRecord& t) {
    std::ostringstream os;
    write_tensor(t, os);
    return os.str();
}

TensorRecord random_record(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> rank_d(1, 4), dim_d(1, 5), type_d(1, 4);
    Shape shape(static_cast<std::size_t>(rank_d(rng)));
    std::size_t n = 1;
    for (auto& d : shape) {
        d = static_cast<std::uint32_t>(dim_d(rng));
        n *= d;
    }
    switch (type_d(rng)) {
        case 1: {
            std::uniform_real_distribution<float> v(-1e6f, 1e6f);
            std::vector<float> x(n);
            for (auto& e : x) e = v(rng);
            return {shape, x};
        }
        case 2: {
            std::vector<std::uint8_t> x(n);
            for (auto& e : x) e = static_cast<std::uint8_t>(rng());
            return {shape, x};
        }
        case 3: {
            std::vector<std::uint16_t> x(n);
            for (auto& e : x) e = static_cast<std::uint16_t>(rng());
            return {shape, x};
        }
        default: {
            std::vector<std::int32_t> x(n);
            for (auto& e : x) e = static_cast<std::int32_t>(rng());
            return {shape, x};
        }
    }
}

void expect_error(const std::string& bytes, TensorErrorKind kind, std::uint64_t offset) {
    std::vector<std::uint8_t> raw(bytes.begin(), bytes.end());
    try {
        decode_tensor(raw);
        FAIL() << "expected " << to_string(kind);
    } catch (const TensorFormatError& e) {
        EXPECT_EQ(e.kind(), kind) << e.what();
        EXPECT_EQ(e.offset(), offset) << e.what();
    }
}

}  // namespace

TEST(WriteTensor, ScalarZeroF32Layout) {
    const auto bytes = bytes_of(TensorRecord({1}, std::vector<float>{0.0f}));
    // magic, version 1, dtype 1, ndim 1, dim 1, payload
    const std::string expected("TNSR\x01\x00\x01\x01\x01\x00\x00\x00\x00\x00\x00\x00", 16);
    EXPECT_EQ(bytes, expected);
    EXPECT_EQ(bytes.size(), 16u);
}

TEST(WriteTensor, U16LittleEndianPayload) {
    const auto bytes = bytes_of(TensorRecord({2, 2}, std::vector<std::uint16_t>{0, 1, 2, 3}));
    ASSERT_EQ(bytes.size(), 24u);
    EXPECT_EQ(bytes.substr(0, 8), std::string("TNSR\x01\x00\x03\x02", 8));
    EXPECT_EQ(bytes.substr(16), std::string("\x00\x00\x01\x00\x02\x00\x03\x00", 8));
}

TEST(WriteTensor, ReturnsByteCount) {
    std::ostringstream os;
    EXPECT_EQ(write_tensor(TensorRecord({3}, std::vector<std::int32_t>{-1, 0, 1}), os), 8u + 4u + 12u);
}

TEST(ReadTensor, RoundTripsRandomRecords) {
    std::mt19937_64 rng(1234);
    for (int i = 0; i < 100; ++i) {
        const auto rec = random_record(rng);
        const auto bytes = bytes_of(rec);
        std::istringstream is(bytes);
        const auto back = read_tensor(is);
        EXPECT_EQ(back, rec);
        EXPECT_EQ(bytes_of(back), bytes);
    }
}

TEST(ReadTensor, BadMagic) { expect_error(std::string("TNSX\x01\x00\x01\x01\x01\x00\x00\x00", 12), TensorErrorKind::BadMagic, 0); }

TEST(ReadTensor, UnsupportedVersion) {
    expect_error(std::string("TNSR\x02\x00\x01\x01\x01\x00\x00\x00", 12), TensorErrorKind::UnsupportedVersion, 4);
}

TEST(ReadTensor, UnsupportedDType) {
    expect_error(std::string("TNSR\x01\x00\x09\x01\x01\x00\x00\x00", 12), TensorErrorKind::UnsupportedDType, 6);
}

TEST(ReadTensor, RankOutOfRange) {
    expect_error(std::string("TNSR\x01\x00\x01\x00", 8), TensorErrorKind::InvalidShape, 7);
    expect_error(std::string("TNSR\x01\x00\x01\x05", 8), TensorErrorKind::InvalidShape, 7);
}

TEST(ReadTensor, ZeroDimension) {
    expect_error(std::string("TNSR\x01\x00\x01\x02\x02\x00\x00\x00\x00\x00\x00\x00", 16), TensorErrorKind::InvalidShape,
                 12);
}

TEST(ReadTensor, ShapeOverflow) {
    std::string h("TNSR\x01\x00\x01\x04", 8);
    for (int i = 0; i < 4; ++i) h += std::string("\xff\xff\xff\xff", 4);
    expect_error(h, TensorErrorKind::ShapeOverflow, 16);
}

TEST(ReadTensor, TruncatedPayload) {
    auto bytes = bytes_of(TensorRecord({2, 2}, std::vector<float>{1, 2, 3, 4}));
    bytes.resize(bytes.size() - 4);  // 12 of 16 payload bytes remain
    expect_error(bytes, TensorErrorKind::TruncatedPayload, 16 + 12);
}

TEST(ReadTensor, TruncatedHeader) {
    expect_error(std::string("TN", 2), TensorErrorKind::TruncatedHeader, 2);
    expect_error(std::string("TNSR\x01\x00\x01\x02\x02\x00", 10), TensorErrorKind::TruncatedHeader, 10);
}

TEST(ReadTensor, NonFiniteValueNamesOffset) {
    auto bytes = bytes_of(TensorRecord({3}, std::vector<float>{1, 2, 3}));
    // Second element -> +inf (0x7f800000).
    bytes.replace(12 + 4, 4, std::string("\x00\x00\x80\x7f", 4));
    expect_error(bytes, TensorErrorKind::NonFiniteValue, 16);
}

TEST(ReadTensor, TrailingDataRejectedByDecode) {
    auto bytes = bytes_of(TensorRecord({1}, std::vector<std::uint8_t>{7}));
    bytes += "x";
    expect_error(bytes, TensorErrorKind::TrailingData, 13);
}

TEST(ReadTensor, StreamLeavesTrailingBytes) {
    const auto one = bytes_of(TensorRecord({1}, std::vector<std::uint8_t>{7}));
    const auto two = bytes_of(TensorRecord({2}, std::vector<std::uint8_t>{8, 9}));
    std::istringstream is(one + two);
    EXPECT_EQ(read_tensor(is).values<std::uint8_t>()[0], 7);
    EXPECT_EQ(read_tensor(is).values<std::uint8_t>()[1], 9);
}

// Every truncation or single-byte corruption of a valid file either decodes
// to a record or raises a typed error.
TEST(ReadTensor, ValidationIsTotal) {
    const auto bytes = bytes_of(TensorRecord({2, 3}, std::vector<float>{1, 2, 3, 4, 5, 6}));
    for (std::size_t cut = 0; cut < bytes.size(); ++cut) {
        std::vector<std::uint8_t> raw(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
        EXPECT_THROW(decode_tensor(raw), TensorFormatError);
    }
    std::mt19937_64 rng(5);
    for (int i = 0; i < 500; ++i) {
        std::vector<std::uint8_t> raw(bytes.begin(), bytes.end());
        raw[rng() % raw.size()] = static_cast<std::uint8_t>(rng());
        try {
            const auto rec = decode_tensor(raw);
            EXPECT_EQ(rec.element_count() * element_size(rec.dtype()) + 8 + 4 * rec.rank(), raw.size());
        } catch (const TensorFormatError&) {
        }
    }
}

TEST(TensorRecord, RejectsInconsistentBuffers) {
    EXPECT_THROW(TensorRecord({2, 2}, std::vector<float>{1, 2, 3}), TensorFormatError);
    EXPECT_THROW(TensorRecord({}, std::vector<float>{}), TensorFormatError);
    EXPECT_THROW(TensorRecord({1, 1, 1, 1, 1}, std::vector<float>{1}), TensorFormatError);
    EXPECT_THROW(TensorRecord({0}, std::vector<float>{}), TensorFormatError);
}

TEST(TensorRecord, TypedViewChecksDType) {
    const TensorRecord t({1}, std::vector<std::uint16_t>{3});
    EXPECT_EQ(t.values<std::uint16_t>()[0], 3);
    EXPECT_THROW(t.values<float>(), TensorFormatError);
}
