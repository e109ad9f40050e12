#include "ifc/codec.hpp"

#include <cmath>
#include <numbers>

#include "ifc/util.hpp"

namespace ifc {
namespace {

const int kLumaBase[64] = {
    16, 11, 10, 16, 24,  40,  51,  61,   //
    12, 12, 14, 19, 26,  58,  60,  55,   //
    14, 13, 16, 24, 40,  57,  69,  56,   //
    14, 17, 22, 29, 51,  87,  80,  62,   //
    18, 22, 37, 56, 68,  109, 103, 77,   //
    24, 35, 55, 64, 81,  104, 113, 92,   //
    49, 64, 78, 87, 103, 121, 120, 101,  //
    72, 92, 95, 98, 112, 100, 103, 99,
};

const int kChromaBase[64] = {
    17, 18, 24, 47, 99, 99, 99, 99,  //
    18, 21, 26, 66, 99, 99, 99, 99,  //
    24, 26, 56, 99, 99, 99, 99, 99,  //
    47, 66, 99, 99, 99, 99, 99, 99,  //
    99, 99, 99, 99, 99, 99, 99, 99,  //
    99, 99, 99, 99, 99, 99, 99, 99,  //
    99, 99, 99, 99, 99, 99, 99, 99,  //
    99, 99, 99, 99, 99, 99, 99, 99,
};

uint8_t clamp_u8(double v) {
    double r = std::round(v);
    if (r < 0.0) return 0;
    if (r > 255.0) return 255;
    return uint8_t(r);
}

// Orthonormal DCT-II basis: C(u,x) = c_u/2 * cos((2x+1)u*pi/16), c_0 = 1/sqrt(2).
const Block8& dct_matrix() {
    static const Block8 c = [] {
        Block8 m;
        for (int u = 0; u < 8; ++u) {
            double cu = u == 0 ? 1.0 / std::sqrt(2.0) : 1.0;
            for (int x = 0; x < 8; ++x)
                m(u, x) = 0.5 * cu * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
        }
        return m;
    }();
    return c;
}

PlaneImage decode_channel(const std::vector<Block8>& dequantized, int blocks_w, int blocks_h,
                          int width, int height) {
    PlaneImage spatial = merge_blocks(dequantized, blocks_w, blocks_h);
    if (spatial.width < width || spatial.height < height) fail("coefficient planes smaller than target size");
    if (spatial.width == width && spatial.height == height) return spatial;
    PlaneImage out;
    out.width = width;
    out.height = height;
    out.data.resize(size_t(width) * height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) out.at(x, y) = spatial.at(x, y);
    return out;
}

CoeffPlane encode_channel(const PlaneImage& plane, const QuantTable& table) {
    PlaneImage padded = pad_to_block_multiple(plane);
    std::vector<Block8> blocks = partition_blocks(padded);
    CoeffPlane out;
    out.blocks_w = padded.width / 8;
    out.blocks_h = padded.height / 8;
    out.blocks.reserve(blocks.size());
    for (const Block8& b : blocks) out.blocks.push_back(quantize(fdct(b), table));
    return out;
}

}  // namespace

QualityFactor::QualityFactor(int value) : value_(value) {
    if (value < 1 || value > 100) fail("quality factor out of range [1,100]");
}

YcbcrImage rgb_to_ycbcr(const RgbImage& image) {
    YcbcrImage out;
    out.width = image.width;
    out.height = image.height;
    for (PlaneImage* p : {&out.y, &out.cb, &out.cr}) {
        p->width = image.width;
        p->height = image.height;
        p->data.resize(size_t(image.width) * image.height);
    }
    for (size_t i = 0; i < out.y.data.size(); ++i) {
        double r = image.data[3 * i + 0];
        double g = image.data[3 * i + 1];
        double b = image.data[3 * i + 2];
        out.y.data[i] = clamp_u8(0.299 * r + 0.587 * g + 0.114 * b);
        out.cb.data[i] = clamp_u8(128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b);
        out.cr.data[i] = clamp_u8(128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b);
    }
    return out;
}

RgbImage ycbcr_to_rgb(const YcbcrImage& image) {
    if (image.y.width != image.width || image.y.height != image.height ||
        image.cb.width != image.width || image.cr.width != image.width ||
        image.cb.height != image.height || image.cr.height != image.height)
        fail("plane dimensions disagree");
    RgbImage out;
    out.width = image.width;
    out.height = image.height;
    out.data.resize(size_t(image.width) * image.height * 3);
    for (size_t i = 0; i < image.y.data.size(); ++i) {
        double y = image.y.data[i];
        double cb = image.cb.data[i] - 128.0;
        double cr = image.cr.data[i] - 128.0;
        out.data[3 * i + 0] = clamp_u8(y + 1.402 * cr);
        out.data[3 * i + 1] = clamp_u8(y - 0.344136 * cb - 0.714136 * cr);
        out.data[3 * i + 2] = clamp_u8(y + 1.772 * cb);
    }
    return out;
}

PlaneImage pad_to_block_multiple(const PlaneImage& plane) {
    if (plane.width <= 0 || plane.height <= 0) fail("empty plane");
    int pw = (plane.width + 7) / 8 * 8;
    int ph = (plane.height + 7) / 8 * 8;
    if (pw == plane.width && ph == plane.height) return plane;
    PlaneImage out;
    out.width = pw;
    out.height = ph;
    out.data.resize(size_t(pw) * ph);
    for (int y = 0; y < ph; ++y) {
        int sy = y < plane.height ? y : plane.height - 1;
        for (int x = 0; x < pw; ++x) {
            int sx = x < plane.width ? x : plane.width - 1;
            out.at(x, y) = plane.at(sx, sy);
        }
    }
    return out;
}

std::vector<Block8> partition_blocks(const PlaneImage& plane) {
    if (plane.width % 8 != 0 || plane.height % 8 != 0) fail("plane dimensions not multiples of 8");
    int bw = plane.width / 8;
    int bh = plane.height / 8;
    std::vector<Block8> blocks(size_t(bw) * bh);
    for (int by = 0; by < bh; ++by)
        for (int bx = 0; bx < bw; ++bx) {
            Block8& b = blocks[size_t(by) * bw + bx];
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x) b(y, x) = double(plane.at(bx * 8 + x, by * 8 + y)) - 128.0;
        }
    return blocks;
}

PlaneImage merge_blocks(const std::vector<Block8>& blocks, int blocks_w, int blocks_h) {
    if (blocks_w <= 0 || blocks_h <= 0 || blocks.size() != size_t(blocks_w) * blocks_h)
        fail("block count does not match grid");
    PlaneImage out;
    out.width = blocks_w * 8;
    out.height = blocks_h * 8;
    out.data.resize(size_t(out.width) * out.height);
    for (int by = 0; by < blocks_h; ++by)
        for (int bx = 0; bx < blocks_w; ++bx) {
            const Block8& b = blocks[size_t(by) * blocks_w + bx];
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x) out.at(bx * 8 + x, by * 8 + y) = clamp_u8(b(y, x) + 128.0);
        }
    return out;
}

Block8 fdct(const Block8& block) {
    const Block8& c = dct_matrix();
    return c * block * c.transpose();
}

Block8 idct(const Block8& block) {
    const Block8& c = dct_matrix();
    return c.transpose() * block * c;
}

std::pair<QuantTable, QuantTable> base_quant_tables() {
    QuantTable luma, chroma;
    for (int i = 0; i < 64; ++i) {
        luma(i / 8, i % 8) = kLumaBase[i];
        chroma(i / 8, i % 8) = kChromaBase[i];
    }
    return {luma, chroma};
}

QuantTable scale_quant_table(const QuantTable& base, QualityFactor qf) {
    int s = qf.value() < 50 ? 5000 / qf.value() : 200 - 2 * qf.value();
    QuantTable out;
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) {
            int v = (base(r, c) * s + 50) / 100;
            out(r, c) = v < 1 ? 1 : (v > 255 ? 255 : v);
        }
    return out;
}

QuantizedBlock quantize(const Block8& block, const QuantTable& table) {
    QuantizedBlock out;
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) {
            double q = std::round(block(r, c) / table(r, c));
            if (std::abs(q) > 2047.0) fail("quantized coefficient out of range");
            out(r, c) = int16_t(q);
        }
    return out;
}

Block8 dequantize(const QuantizedBlock& block, const QuantTable& table) {
    return block.cast<double>().cwiseProduct(table.cast<double>());
}

Block8 dequantize_real(const Block8& coeffs, const QuantTable& table) {
    return coeffs.cwiseProduct(table.cast<double>());
}

EncodedPlanes encode_planes(const RgbImage& image, QualityFactor qf) {
    auto [luma_base, chroma_base] = base_quant_tables();
    QuantTable luma = scale_quant_table(luma_base, qf);
    QuantTable chroma = scale_quant_table(chroma_base, qf);
    YcbcrImage planes = rgb_to_ycbcr(image);
    EncodedPlanes out;
    out.y = encode_channel(planes.y, luma);
    out.cb = encode_channel(planes.cb, chroma);
    out.cr = encode_channel(planes.cr, chroma);
    return out;
}

RgbImage decode_planes(const CoeffPlane& y, const CoeffPlane& cb, const CoeffPlane& cr,
                       QualityFactor qf, int width, int height) {
    if (cb.blocks_w != y.blocks_w || cr.blocks_w != y.blocks_w || cb.blocks_h != y.blocks_h ||
        cr.blocks_h != y.blocks_h)
        fail("channel block grids disagree");
    auto [luma_base, chroma_base] = base_quant_tables();
    QuantTable luma = scale_quant_table(luma_base, qf);
    QuantTable chroma = scale_quant_table(chroma_base, qf);
    YcbcrImage planes;
    planes.width = width;
    planes.height = height;
    auto channel = [&](const CoeffPlane& plane, const QuantTable& table) {
        std::vector<Block8> deq;
        deq.reserve(plane.blocks.size());
        for (const QuantizedBlock& b : plane.blocks) deq.push_back(idct(dequantize(b, table)));
        return decode_channel(deq, plane.blocks_w, plane.blocks_h, width, height);
    };
    planes.y = channel(y, luma);
    planes.cb = channel(cb, chroma);
    planes.cr = channel(cr, chroma);
    return ycbcr_to_rgb(planes);
}

RgbImage decode_real_planes(const RealCoeffPlane& y, const RealCoeffPlane& cb,
                            const RealCoeffPlane& cr, QualityFactor ref_qf, int width, int height) {
    auto [luma_base, chroma_base] = base_quant_tables();
    QuantTable luma = scale_quant_table(luma_base, ref_qf);
    QuantTable chroma = scale_quant_table(chroma_base, ref_qf);
    YcbcrImage planes;
    planes.width = width;
    planes.height = height;
    auto channel = [&](const RealCoeffPlane& plane, const QuantTable& table) {
        std::vector<Block8> deq;
        deq.reserve(plane.blocks.size());
        for (const Block8& b : plane.blocks) deq.push_back(idct(dequantize_real(b, table)));
        return decode_channel(deq, plane.blocks_w, plane.blocks_h, width, height);
    };
    planes.y = channel(y, luma);
    planes.cb = channel(cb, chroma);
    planes.cr = channel(cr, chroma);
    return ycbcr_to_rgb(planes);
}

}  // namespace ifc
