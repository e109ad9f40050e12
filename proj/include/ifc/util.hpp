#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ifc {

// Domain error; the CLI maps these to exit code 1.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

// ---------------------------------------------------------------------------
// Little-endian byte packing

class ByteWriter {
public:
    void u8(uint8_t v) { buf_.push_back(v); }
    void u16(uint16_t v) {
        buf_.push_back(uint8_t(v & 0xff));
        buf_.push_back(uint8_t(v >> 8));
    }
    void u32(uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(uint8_t((v >> (8 * i)) & 0xff));
    }
    void i16(int16_t v) { u16(uint16_t(v)); }
    void f32(float v) {
        uint32_t bits;
        static_assert(sizeof(bits) == sizeof(v));
        __builtin_memcpy(&bits, &v, 4);
        u32(bits);
    }
    void bytes(std::span<const uint8_t> s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
    void text(const std::string& s) {
        buf_.insert(buf_.end(), s.begin(), s.end());
    }

    const std::vector<uint8_t>& data() const { return buf_; }
    std::vector<uint8_t> take() { return std::move(buf_); }

private:
    std::vector<uint8_t> buf_;
};

// Bounds-checked reader over a byte span; never reads past the end.
class ByteReader {
public:
    explicit ByteReader(std::span<const uint8_t> data) : data_(data) {}

    uint8_t u8() { return take(1)[0]; }
    uint16_t u16() {
        auto b = take(2);
        return uint16_t(b[0]) | uint16_t(b[1]) << 8;
    }
    uint32_t u32() {
        auto b = take(4);
        return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 | uint32_t(b[3]) << 24;
    }
    int16_t i16() { return int16_t(u16()); }
    float f32() {
        uint32_t bits = u32();
        float v;
        __builtin_memcpy(&v, &bits, 4);
        return v;
    }
    std::span<const uint8_t> take(size_t n) {
        if (pos_ + n > data_.size()) fail("truncated payload");
        auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    std::string text(size_t n) {
        auto s = take(n);
        return std::string(s.begin(), s.end());
    }
    size_t remaining() const { return data_.size() - pos_; }
    bool done() const { return pos_ == data_.size(); }

private:
    std::span<const uint8_t> data_;
    size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Files

std::vector<uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, std::span<const uint8_t> data);
void write_file_atomic(const std::string& path, std::span<const uint8_t> data);

// ---------------------------------------------------------------------------
// SHA-256 (for run manifests)

std::string sha256_hex(std::span<const uint8_t> data);
std::string sha256_file_hex(const std::string& path);

// Worker count: IFC_THREADS overrides hardware concurrency.
int thread_count();

}  // namespace ifc
