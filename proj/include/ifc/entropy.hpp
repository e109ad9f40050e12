#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "ifc/codec.hpp"

namespace ifc {

// Coefficients ordered low to high frequency.
using ZigzagVector = std::array<int16_t, 64>;

ZigzagVector zigzag(const QuantizedBlock& block);
QuantizedBlock inverse_zigzag(const ZigzagVector& v);

struct RleSymbol {
    enum class Kind : uint8_t { Dc, Ac, Eob, Zrl };
    Kind kind = Kind::Eob;
    uint8_t run = 0;    // AC zero run, 0..15
    int16_t value = 0;  // DC difference or AC amplitude
    bool operator==(const RleSymbol&) const = default;
};

// DC coded as difference from prev_dc, AC as (zero-run, amplitude) pairs.
// Runs of 16+ zeros emit ZRL; trailing zeros emit one EOB, omitted only when
// position 63 holds a nonzero value.
std::vector<RleSymbol> rle_encode(const ZigzagVector& v, int prev_dc);
ZigzagVector rle_decode(const std::vector<RleSymbol>& symbols, int prev_dc);

// Code counts per bit length 1..16 plus symbol values in code order.
struct HuffmanSpec {
    std::array<uint8_t, 16> counts;
    std::vector<uint8_t> symbols;
};

struct HuffmanTablePair {
    HuffmanSpec dc, ac;
};

const HuffmanTablePair& luma_tables();
const HuffmanTablePair& chroma_tables();

// Category (bit size) of a DC difference or AC amplitude.
int bit_category(int v);

// Bit-packed baseline entropy coding: Huffman symbol then sign-magnitude extra
// bits; the final partial byte is padded with 1-bits.
std::vector<uint8_t> huffman_encode(const std::vector<RleSymbol>& symbols,
                                    const HuffmanTablePair& tables);
std::vector<RleSymbol> huffman_decode(std::span<const uint8_t> payload, int block_count,
                                      const HuffmanTablePair& tables);

// Container framing: "IFR1", version, width, height, qf, then one
// length-prefixed payload per channel (Y, Cb, Cr), all integers little-endian.
std::vector<uint8_t> serialize(const CoeffPlane& y, const CoeffPlane& cb, const CoeffPlane& cr,
                               QualityFactor qf, int width, int height);

struct ExtractedStream {
    CoeffPlane y, cb, cr;
    QualityFactor qf{1};
    int width = 0;
    int height = 0;
};

// Quantized integer coefficients only; no dequantization, no inverse DCT.
ExtractedStream extract_quantized_coeffs(std::span<const uint8_t> stream);

// Whole-image conveniences composing the block pipeline with the container.
std::vector<uint8_t> encode_image(const RgbImage& image, QualityFactor qf);
RgbImage decode_image(std::span<const uint8_t> stream);

}  // namespace ifc
