#include "ifc/entropy.hpp"

#include <bit>
#include <cstdlib>

#include "ifc/util.hpp"

namespace ifc {
namespace {

// Raster index of each scan position, low to high frequency.
const int kZigzag[64] = {
    0,  1,  8,  16, 9,  2,  3,  10,  //
    17, 24, 32, 25, 18, 11, 4,  5,   //
    12, 19, 26, 33, 40, 48, 41, 34,  //
    27, 20, 13, 6,  7,  14, 21, 28,  //
    35, 42, 49, 56, 57, 50, 43, 36,  //
    29, 22, 15, 23, 30, 37, 44, 51,  //
    58, 59, 52, 45, 38, 31, 39, 46,  //
    53, 60, 61, 54, 47, 55, 62, 63,
};

const uint8_t kDcLumaCounts[16] = {0, 1, 5, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0};
const uint8_t kDcChromaCounts[16] = {0, 3, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0};
const uint8_t kDcValues[12] = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};

const uint8_t kAcLumaCounts[16] = {0, 2, 1, 3, 3, 2, 4, 3, 5, 5, 4, 4, 0, 0, 1, 0x7d};
const uint8_t kAcLumaValues[162] = {
    0x01, 0x02, 0x03, 0x00, 0x04, 0x11, 0x05, 0x12, 0x21, 0x31, 0x41, 0x06, 0x13, 0x51, 0x61,
    0x07, 0x22, 0x71, 0x14, 0x32, 0x81, 0x91, 0xa1, 0x08, 0x23, 0x42, 0xb1, 0xc1, 0x15, 0x52,
    0xd1, 0xf0, 0x24, 0x33, 0x62, 0x72, 0x82, 0x09, 0x0a, 0x16, 0x17, 0x18, 0x19, 0x1a, 0x25,
    0x26, 0x27, 0x28, 0x29, 0x2a, 0x34, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3a, 0x43, 0x44, 0x45,
    0x46, 0x47, 0x48, 0x49, 0x4a, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59, 0x5a, 0x63, 0x64,
    0x65, 0x66, 0x67, 0x68, 0x69, 0x6a, 0x73, 0x74, 0x75, 0x76, 0x77, 0x78, 0x79, 0x7a, 0x83,
    0x84, 0x85, 0x86, 0x87, 0x88, 0x89, 0x8a, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99,
    0x9a, 0xa2, 0xa3, 0xa4, 0xa5, 0xa6, 0xa7, 0xa8, 0xa9, 0xaa, 0xb2, 0xb3, 0xb4, 0xb5, 0xb6,
    0xb7, 0xb8, 0xb9, 0xba, 0xc2, 0xc3, 0xc4, 0xc5, 0xc6, 0xc7, 0xc8, 0xc9, 0xca, 0xd2, 0xd3,
    0xd4, 0xd5, 0xd6, 0xd7, 0xd8, 0xd9, 0xda, 0xe1, 0xe2, 0xe3, 0xe4, 0xe5, 0xe6, 0xe7, 0xe8,
    0xe9, 0xea, 0xf1, 0xf2, 0xf3, 0xf4, 0xf5, 0xf6, 0xf7, 0xf8, 0xf9, 0xfa,
};

const uint8_t kAcChromaCounts[16] = {0, 2, 1, 2, 4, 4, 3, 4, 7, 5, 4, 4, 0, 1, 2, 0x77};
const uint8_t kAcChromaValues[162] = {
    0x00, 0x01, 0x02, 0x03, 0x11, 0x04, 0x05, 0x21, 0x31, 0x06, 0x12, 0x41, 0x51, 0x07, 0x61,
    0x71, 0x13, 0x22, 0x32, 0x81, 0x08, 0x14, 0x42, 0x91, 0xa1, 0xb1, 0xc1, 0x09, 0x23, 0x33,
    0x52, 0xf0, 0x15, 0x62, 0x72, 0xd1, 0x0a, 0x16, 0x24, 0x34, 0xe1, 0x25, 0xf1, 0x17, 0x18,
    0x19, 0x1a, 0x26, 0x27, 0x28, 0x29, 0x2a, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3a, 0x43, 0x44,
    0x45, 0x46, 0x47, 0x48, 0x49, 0x4a, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59, 0x5a, 0x63,
    0x64, 0x65, 0x66, 0x67, 0x68, 0x69, 0x6a, 0x73, 0x74, 0x75, 0x76, 0x77, 0x78, 0x79, 0x7a,
    0x82, 0x83, 0x84, 0x85, 0x86, 0x87, 0x88, 0x89, 0x8a, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97,
    0x98, 0x99, 0x9a, 0xa2, 0xa3, 0xa4, 0xa5, 0xa6, 0xa7, 0xa8, 0xa9, 0xaa, 0xb2, 0xb3, 0xb4,
    0xb5, 0xb6, 0xb7, 0xb8, 0xb9, 0xba, 0xc2, 0xc3, 0xc4, 0xc5, 0xc6, 0xc7, 0xc8, 0xc9, 0xca,
    0xd2, 0xd3, 0xd4, 0xd5, 0xd6, 0xd7, 0xd8, 0xd9, 0xda, 0xe2, 0xe3, 0xe4, 0xe5, 0xe6, 0xe7,
    0xe8, 0xe9, 0xea, 0xf2, 0xf3, 0xf4, 0xf5, 0xf6, 0xf7, 0xf8, 0xf9, 0xfa,
};

HuffmanSpec make_spec(const uint8_t (&counts)[16], std::span<const uint8_t> values) {
    HuffmanSpec s;
    std::copy(std::begin(counts), std::end(counts), s.counts.begin());
    s.symbols.assign(values.begin(), values.end());
    return s;
}

// Canonical code assignment per symbol value.
class HuffmanEncoder {
public:
    explicit HuffmanEncoder(const HuffmanSpec& spec) {
        lengths_.fill(0);
        uint32_t code = 0;
        size_t next = 0;
        for (int len = 1; len <= 16; ++len) {
            for (int i = 0; i < spec.counts[len - 1]; ++i) {
                if (next >= spec.symbols.size() || code >> len) fail("malformed Huffman table");
                uint8_t sym = spec.symbols[next++];
                codes_[sym] = code;
                lengths_[sym] = uint8_t(len);
                ++code;
            }
            code <<= 1;
        }
        if (next != spec.symbols.size()) fail("malformed Huffman table");
    }

    uint32_t code(uint8_t symbol) const { return codes_[symbol]; }
    int length(uint8_t symbol) const {
        if (!lengths_[symbol]) fail("symbol not representable by table");
        return lengths_[symbol];
    }

private:
    std::array<uint32_t, 256> codes_{};
    std::array<uint8_t, 256> lengths_{};
};

// Sequential decode over mincode/maxcode/valptr per code length.
class HuffmanDecoder {
public:
    explicit HuffmanDecoder(const HuffmanSpec& spec) : symbols_(spec.symbols) {
        uint32_t code = 0;
        size_t next = 0;
        for (int len = 1; len <= 16; ++len) {
            int l = len - 1;
            if (spec.counts[l] == 0) {
                mincode_[l] = 0;
                maxcode_[l] = -1;
            } else {
                valptr_[l] = next;
                mincode_[l] = int32_t(code);
                next += spec.counts[l];
                code += spec.counts[l];
                maxcode_[l] = int32_t(code) - 1;
            }
            code <<= 1;
        }
    }

    template <class BitFn>
    uint8_t decode(BitFn&& next_bit) const {
        int32_t code = next_bit();
        for (int l = 0; l < 16; ++l) {
            if (maxcode_[l] >= 0 && code <= maxcode_[l])
                return symbols_[valptr_[l] + size_t(code - mincode_[l])];
            code = code << 1 | next_bit();
        }
        fail("invalid Huffman prefix");
    }

private:
    std::vector<uint8_t> symbols_;
    std::array<int32_t, 16> mincode_{};
    std::array<int32_t, 16> maxcode_{};
    std::array<size_t, 16> valptr_{};
};

class BitWriter {
public:
    void put(uint32_t bits, int count) {
        for (int i = count - 1; i >= 0; --i) {
            acc_ = acc_ << 1 | (bits >> i & 1);
            if (++filled_ == 8) {
                out_.push_back(uint8_t(acc_));
                acc_ = 0;
                filled_ = 0;
            }
        }
    }

    std::vector<uint8_t> finish() {
        if (filled_) {
            acc_ = acc_ << (8 - filled_) | ((1u << (8 - filled_)) - 1);
            out_.push_back(uint8_t(acc_));
            filled_ = 0;
            acc_ = 0;
        }
        return std::move(out_);
    }

private:
    std::vector<uint8_t> out_;
    uint32_t acc_ = 0;
    int filled_ = 0;
};

class BitReader {
public:
    explicit BitReader(std::span<const uint8_t> data) : data_(data) {}

    int bit() {
        size_t byte = pos_ >> 3;
        if (byte >= data_.size()) fail("truncated payload");
        int b = data_[byte] >> (7 - (pos_ & 7)) & 1;
        ++pos_;
        return b;
    }

    uint32_t bits(int count) {
        uint32_t v = 0;
        for (int i = 0; i < count; ++i) v = v << 1 | uint32_t(bit());
        return v;
    }

private:
    std::span<const uint8_t> data_;
    size_t pos_ = 0;
};

// Low `size` bits of the sign-magnitude representation.
uint32_t amplitude_bits(int v, int size) { return uint32_t(v >= 0 ? v : v + (1 << size) - 1); }

int extend_amplitude(uint32_t bits, int size) {
    int v = int(bits);
    if (v < (1 << (size - 1))) v -= (1 << size) - 1;
    return v;
}

std::vector<uint8_t> encode_plane(const CoeffPlane& plane, const HuffmanTablePair& tables) {
    std::vector<RleSymbol> symbols;
    symbols.reserve(plane.blocks.size() * 8);
    int prev_dc = 0;
    for (const QuantizedBlock& b : plane.blocks) {
        ZigzagVector v = zigzag(b);
        std::vector<RleSymbol> s = rle_encode(v, prev_dc);
        symbols.insert(symbols.end(), s.begin(), s.end());
        prev_dc = v[0];
    }
    return huffman_encode(symbols, tables);
}

CoeffPlane decode_plane(std::span<const uint8_t> payload, int blocks_w, int blocks_h,
                        const HuffmanTablePair& tables) {
    CoeffPlane plane;
    plane.blocks_w = blocks_w;
    plane.blocks_h = blocks_h;
    int count = blocks_w * blocks_h;
    std::vector<RleSymbol> symbols = huffman_decode(payload, count, tables);
    plane.blocks.reserve(count);
    int prev_dc = 0;
    size_t i = 0;
    for (int n = 0; n < count; ++n) {
        std::vector<RleSymbol> block_symbols;
        if (i >= symbols.size() || symbols[i].kind != RleSymbol::Kind::Dc)
            fail("missing DC symbol");
        block_symbols.push_back(symbols[i++]);
        int pos = 1;
        while (pos < 64) {
            if (i >= symbols.size()) fail("missing EOB");
            const RleSymbol& s = symbols[i++];
            block_symbols.push_back(s);
            if (s.kind == RleSymbol::Kind::Eob) break;
            if (s.kind == RleSymbol::Kind::Zrl)
                pos += 16;
            else
                pos += s.run + 1;
        }
        ZigzagVector v = rle_decode(block_symbols, prev_dc);
        prev_dc = v[0];
        plane.blocks.push_back(inverse_zigzag(v));
    }
    return plane;
}

}  // namespace

ZigzagVector zigzag(const QuantizedBlock& block) {
    ZigzagVector v;
    for (int i = 0; i < 64; ++i) v[i] = block(kZigzag[i] / 8, kZigzag[i] % 8);
    return v;
}

QuantizedBlock inverse_zigzag(const ZigzagVector& v) {
    QuantizedBlock b;
    for (int i = 0; i < 64; ++i) b(kZigzag[i] / 8, kZigzag[i] % 8) = v[i];
    return b;
}

int bit_category(int v) { return std::bit_width(uint32_t(std::abs(v))); }

std::vector<RleSymbol> rle_encode(const ZigzagVector& v, int prev_dc) {
    std::vector<RleSymbol> out;
    int diff = v[0] - prev_dc;
    if (bit_category(diff) > 11) fail("amplitude out of category range");
    out.push_back({RleSymbol::Kind::Dc, 0, int16_t(diff)});
    int run = 0;
    for (int i = 1; i < 64; ++i) {
        if (v[i] == 0) {
            ++run;
            continue;
        }
        while (run > 15) {
            out.push_back({RleSymbol::Kind::Zrl, 0, 0});
            run -= 16;
        }
        if (bit_category(v[i]) > 10) fail("amplitude out of category range");
        out.push_back({RleSymbol::Kind::Ac, uint8_t(run), v[i]});
        run = 0;
    }
    if (run > 0) out.push_back({RleSymbol::Kind::Eob, 0, 0});
    return out;
}

ZigzagVector rle_decode(const std::vector<RleSymbol>& symbols, int prev_dc) {
    ZigzagVector v{};
    if (symbols.empty() || symbols[0].kind != RleSymbol::Kind::Dc) fail("missing DC symbol");
    v[0] = int16_t(prev_dc + symbols[0].value);
    int pos = 1;
    for (size_t i = 1; i < symbols.size(); ++i) {
        const RleSymbol& s = symbols[i];
        if (s.kind == RleSymbol::Kind::Eob) {
            if (i + 1 != symbols.size()) fail("symbols after EOB");
            return v;
        }
        if (s.kind == RleSymbol::Kind::Dc) fail("unexpected DC symbol");
        int next = pos + (s.kind == RleSymbol::Kind::Zrl ? 16 : s.run + 1);
        if (next > 64) fail("coefficient index past end of block");
        if (s.kind == RleSymbol::Kind::Ac) {
            if (s.value == 0) fail("zero AC amplitude");
            v[next - 1] = s.value;
        }
        pos = next;
    }
    if (pos != 64) fail("missing EOB");
    return v;
}

const HuffmanTablePair& luma_tables() {
    static const HuffmanTablePair t{make_spec(kDcLumaCounts, kDcValues),
                                    make_spec(kAcLumaCounts, kAcLumaValues)};
    return t;
}

const HuffmanTablePair& chroma_tables() {
    static const HuffmanTablePair t{make_spec(kDcChromaCounts, kDcValues),
                                    make_spec(kAcChromaCounts, kAcChromaValues)};
    return t;
}

std::vector<uint8_t> huffman_encode(const std::vector<RleSymbol>& symbols,
                                    const HuffmanTablePair& tables) {
    HuffmanEncoder dc(tables.dc), ac(tables.ac);
    BitWriter w;
    for (const RleSymbol& s : symbols) {
        switch (s.kind) {
            case RleSymbol::Kind::Dc: {
                int size = bit_category(s.value);
                w.put(dc.code(uint8_t(size)), dc.length(uint8_t(size)));
                if (size) w.put(amplitude_bits(s.value, size), size);
                break;
            }
            case RleSymbol::Kind::Ac: {
                int size = bit_category(s.value);
                uint8_t sym = uint8_t(s.run << 4 | size);
                w.put(ac.code(sym), ac.length(sym));
                w.put(amplitude_bits(s.value, size), size);
                break;
            }
            case RleSymbol::Kind::Eob:
                w.put(ac.code(0x00), ac.length(0x00));
                break;
            case RleSymbol::Kind::Zrl:
                w.put(ac.code(0xf0), ac.length(0xf0));
                break;
        }
    }
    return w.finish();
}

std::vector<RleSymbol> huffman_decode(std::span<const uint8_t> payload, int block_count,
                                      const HuffmanTablePair& tables) {
    HuffmanDecoder dc(tables.dc), ac(tables.ac);
    BitReader r(payload);
    auto next_bit = [&r] { return r.bit(); };
    std::vector<RleSymbol> out;
    for (int n = 0; n < block_count; ++n) {
        int size = dc.decode(next_bit);
        int diff = size ? extend_amplitude(r.bits(size), size) : 0;
        out.push_back({RleSymbol::Kind::Dc, 0, int16_t(diff)});
        int pos = 1;
        while (pos < 64) {
            uint8_t sym = ac.decode(next_bit);
            if (sym == 0x00) {
                out.push_back({RleSymbol::Kind::Eob, 0, 0});
                break;
            }
            if (sym == 0xf0) {
                out.push_back({RleSymbol::Kind::Zrl, 0, 0});
                pos += 16;
                if (pos > 64) fail("coefficient index past end of block");
                continue;
            }
            int run = sym >> 4;
            int s = sym & 0xf;
            int value = extend_amplitude(r.bits(s), s);
            pos += run + 1;
            if (pos > 64) fail("coefficient index past end of block");
            out.push_back({RleSymbol::Kind::Ac, uint8_t(run), int16_t(value)});
        }
    }
    return out;
}

std::vector<uint8_t> serialize(const CoeffPlane& y, const CoeffPlane& cb, const CoeffPlane& cr,
                               QualityFactor qf, int width, int height) {
    if (width < 1 || height < 1 || width > 0xffff || height > 0xffff)
        fail("dimensions out of range [1,65535]");
    int bw = (width + 7) / 8;
    int bh = (height + 7) / 8;
    for (const CoeffPlane* p : {&y, &cb, &cr})
        if (p->blocks_w != bw || p->blocks_h != bh || p->blocks.size() != size_t(bw) * bh)
            fail("plane grid does not match dimensions");
    ByteWriter w;
    w.text("IFR1");
    w.u8(1);
    w.u16(uint16_t(width));
    w.u16(uint16_t(height));
    w.u8(uint8_t(qf.value()));
    for (auto [plane, tables] : {std::pair{&y, &luma_tables()},
                                 std::pair{&cb, &chroma_tables()},
                                 std::pair{&cr, &chroma_tables()}}) {
        std::vector<uint8_t> payload = encode_plane(*plane, *tables);
        w.u32(uint32_t(payload.size()));
        w.bytes(payload);
    }
    return w.take();
}

ExtractedStream extract_quantized_coeffs(std::span<const uint8_t> stream) {
    ByteReader r(stream);
    if (r.text(4) != "IFR1") fail("bad magic");
    if (r.u8() != 1) fail("unsupported version");
    ExtractedStream out;
    out.width = r.u16();
    out.height = r.u16();
    if (out.width < 1 || out.height < 1) fail("dimensions out of range [1,65535]");
    out.qf = QualityFactor(r.u8());
    int bw = (out.width + 7) / 8;
    int bh = (out.height + 7) / 8;
    for (auto [plane, tables] : {std::pair{&out.y, &luma_tables()},
                                 std::pair{&out.cb, &chroma_tables()},
                                 std::pair{&out.cr, &chroma_tables()}}) {
        uint32_t len = r.u32();
        *plane = decode_plane(r.take(len), bw, bh, *tables);
    }
    if (!r.done()) fail("trailing bytes after last payload");
    return out;
}

std::vector<uint8_t> encode_image(const RgbImage& image, QualityFactor qf) {
    EncodedPlanes planes = encode_planes(image, qf);
    return serialize(planes.y, planes.cb, planes.cr, qf, image.width, image.height);
}

RgbImage decode_image(std::span<const uint8_t> stream) {
    ExtractedStream s = extract_quantized_coeffs(stream);
    return decode_planes(s.y, s.cb, s.cr, s.qf, s.width, s.height);
}

}  // namespace ifc
