#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "ifc/image.hpp"

namespace ifc {

using Block8 = Eigen::Matrix<double, 8, 8>;
using QuantizedBlock = Eigen::Matrix<int16_t, 8, 8>;
using QuantTable = Eigen::Matrix<int, 8, 8>;

// Quality knob scaling the quantization tables; valid range 1..100.
class QualityFactor {
public:
    explicit QualityFactor(int value);
    int value() const { return value_; }
    bool operator==(const QualityFactor&) const = default;

private:
    int value_;
};

// 4:4:4 planes, one full-resolution plane per channel.
struct YcbcrImage {
    int width = 0;
    int height = 0;
    PlaneImage y, cb, cr;
};

// Quantized DCT coefficients of one channel, 8x8 blocks in row-major grid order.
struct CoeffPlane {
    int blocks_w = 0;
    int blocks_h = 0;
    std::vector<QuantizedBlock> blocks;

    const QuantizedBlock& block(int bx, int by) const { return blocks[size_t(by) * blocks_w + bx]; }
    QuantizedBlock& block(int bx, int by) { return blocks[size_t(by) * blocks_w + bx]; }
    bool operator==(const CoeffPlane&) const = default;
};

// Real-valued variant used by the model-enhanced decode path.
struct RealCoeffPlane {
    int blocks_w = 0;
    int blocks_h = 0;
    std::vector<Block8> blocks;
};

struct EncodedPlanes {
    CoeffPlane y, cb, cr;
};

// Full-range BT.601 in both directions, rounded half away from zero and clamped.
YcbcrImage rgb_to_ycbcr(const RgbImage& image);
RgbImage ycbcr_to_rgb(const YcbcrImage& image);

// Rounds dims up to multiples of 8 by edge replication; no-op when already aligned.
PlaneImage pad_to_block_multiple(const PlaneImage& plane);

// Level-shifted (sample - 128) 8x8 blocks in row-major grid order. Dims must be multiples of 8.
std::vector<Block8> partition_blocks(const PlaneImage& plane);

// Inverse of partition_blocks: adds 128, rounds half away from zero, clamps to [0,255].
PlaneImage merge_blocks(const std::vector<Block8>& blocks, int blocks_w, int blocks_h);

// Orthonormal 2-D DCT-II and its inverse.
Block8 fdct(const Block8& block);
Block8 idct(const Block8& block);

// Standard base tables; luminance first, chrominance second.
std::pair<QuantTable, QuantTable> base_quant_tables();

// IJG scaling: s = qf<50 ? 5000/qf : 200-2*qf, entry = clamp((base*s+50)/100, 1, 255).
QuantTable scale_quant_table(const QuantTable& base, QualityFactor qf);

// Per-entry division, rounded half away from zero. Throws if a result exceeds
// the 2047 magnitude that the entropy coder's size categories can represent.
QuantizedBlock quantize(const Block8& block, const QuantTable& table);

Block8 dequantize(const QuantizedBlock& block, const QuantTable& table);
Block8 dequantize_real(const Block8& coeffs, const QuantTable& table);

// Encoding stages 1-4: color transform, pad, partition, DCT, quantize.
EncodedPlanes encode_planes(const RgbImage& image, QualityFactor qf);

// Inverse composition; crops padding back to width x height.
RgbImage decode_planes(const CoeffPlane& y, const CoeffPlane& cb, const CoeffPlane& cr,
                       QualityFactor qf, int width, int height);

// Same pipeline for real-valued (model-predicted) coefficients.
RgbImage decode_real_planes(const RealCoeffPlane& y, const RealCoeffPlane& cb,
                            const RealCoeffPlane& cr, QualityFactor ref_qf, int width, int height);

}  // namespace ifc
