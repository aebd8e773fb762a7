#pragma once

#include "volsr/util/errors.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace volsr {

/// Little-endian byte sink.
class ByteWriter {
public:
    void put_u8(std::uint8_t v) { buf_.push_back(v); }
    void put_u32(std::uint32_t v) { put_le(v, 4); }
    void put_u64(std::uint64_t v) { put_le(v, 8); }
    void put_i64(std::int64_t v) { put_le(static_cast<std::uint64_t>(v), 8); }
    void put_f32(float v) { put_le(std::bit_cast<std::uint32_t>(v), 4); }
    void put_f64(double v) { put_le(std::bit_cast<std::uint64_t>(v), 8); }
    void put_bytes(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
    void put_text(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }

    std::size_t size() const { return buf_.size(); }
    std::vector<std::uint8_t>& bytes() { return buf_; }
    std::vector<std::uint8_t> take() { return std::move(buf_); }

private:
    void put_le(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    std::vector<std::uint8_t> buf_;
};

/// Little-endian byte source; throws FormatError on overrun.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data, std::size_t pos = 0) : data_(data), pos_(pos) {}

    std::uint32_t get_u32() { return static_cast<std::uint32_t>(get_le(4)); }
    std::uint64_t get_u64() { return get_le(8); }
    std::int64_t get_i64() { return static_cast<std::int64_t>(get_le(8)); }
    float get_f32() { return std::bit_cast<float>(static_cast<std::uint32_t>(get_le(4))); }
    double get_f64() { return std::bit_cast<double>(get_le(8)); }
    std::span<const std::uint8_t> get_bytes(std::size_t n) {
        require(n);
        auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    std::string get_text(std::size_t n) {
        auto s = get_bytes(n);
        return std::string(s.begin(), s.end());
    }

    std::size_t position() const { return pos_; }
    std::size_t remaining() const { return data_.size() - pos_; }

private:
    void require(std::size_t n) const {
        if (n > data_.size() - pos_)
            throw FormatError("truncated data: need " + std::to_string(n) + " bytes at offset " + std::to_string(pos_) +
                              ", have " + std::to_string(data_.size() - pos_));
    }
    std::uint64_t get_le(int n) {
        auto s = get_bytes(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(s[i]) << (8 * i);
        return v;
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_;
};

} // namespace volsr
