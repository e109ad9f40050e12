#include <cmath>

#include "doctest.h"
#include "ifc/codec.hpp"
#include "ifc/synthetic.hpp"
#include "ifc/tensor.hpp"

using namespace ifc;

namespace {

// Independent O(64^2) reference transform, kept deliberately naive.
Block8 dct_oracle(const Block8& x) {
    constexpr double pi = 3.14159265358979323846;
    Block8 out;
    for (int u = 0; u < 8; ++u)
        for (int v = 0; v < 8; ++v) {
            double cu = u == 0 ? 1.0 / std::sqrt(2.0) : 1.0;
            double cv = v == 0 ? 1.0 / std::sqrt(2.0) : 1.0;
            double s = 0;
            for (int y = 0; y < 8; ++y)
                for (int xx = 0; xx < 8; ++xx)
                    s += x(y, xx) * std::cos((2 * y + 1) * u * pi / 16.0) *
                         std::cos((2 * xx + 1) * v * pi / 16.0);
            out(u, v) = 0.25 * cu * cv * s;
        }
    return out;
}

Block8 random_block(Rng& rng, double lo, double hi) {
    Block8 b;
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) b(r, c) = lo + rng.uniform() * (hi - lo);
    return b;
}

}  // namespace

TEST_CASE("color transform known pixels") {
    RgbImage img(3, 1);
    uint8_t px[3][3] = {{255, 0, 0}, {255, 255, 255}, {128, 128, 128}};
    for (int i = 0; i < 3; ++i)
        for (int c = 0; c < 3; ++c) img.at(i, 0, c) = px[i][c];
    YcbcrImage ycc = rgb_to_ycbcr(img);
    CHECK(ycc.y.at(0, 0) == 76);    // 0.299 * 255 = 76.245
    CHECK(ycc.cb.at(0, 0) == 85);   // 128 - 0.168736 * 255 = 84.97
    CHECK(ycc.cr.at(0, 0) == 255);  // 128 + 0.5 * 255 = 255.5, clamped
    CHECK(ycc.y.at(1, 0) == 255);
    CHECK(ycc.cb.at(1, 0) == 128);
    CHECK(ycc.cr.at(1, 0) == 128);
    CHECK(ycc.y.at(2, 0) == 128);
    CHECK(ycc.cb.at(2, 0) == 128);
    CHECK(ycc.cr.at(2, 0) == 128);
}

TEST_CASE("inverse color transform known pixel") {
    YcbcrImage ycc;
    ycc.width = 1;
    ycc.height = 1;
    ycc.y = PlaneImage(1, 1);
    ycc.cb = PlaneImage(1, 1);
    ycc.cr = PlaneImage(1, 1);
    ycc.y.at(0, 0) = 76;
    ycc.cb.at(0, 0) = 85;
    ycc.cr.at(0, 0) = 255;
    RgbImage rgb = ycbcr_to_rgb(ycc);
    CHECK(rgb.at(0, 0, 0) == 254);  // 76 + 1.402 * 127
    CHECK(rgb.at(0, 0, 1) == 0);
    CHECK(rgb.at(0, 0, 2) == 0);  // 76 - 1.772 * 43 rounds to 0
}

TEST_CASE("color round-trip stays within rounding error") {
    RgbImage img = synthetic_frame(64, 40, 7);
    RgbImage back = ycbcr_to_rgb(rgb_to_ycbcr(img));
    int max_diff = 0;
    for (size_t i = 0; i < img.data.size(); ++i)
        max_diff = std::max(max_diff, std::abs(int(img.data[i]) - int(back.data[i])));
    CHECK(max_diff <= 3);
}

TEST_CASE("forward DCT matches the naive reference") {
    Rng rng(11);
    for (int i = 0; i < 50; ++i) {
        Block8 x = random_block(rng, -128.0, 127.0);
        Block8 got = fdct(x);
        Block8 want = dct_oracle(x);
        CHECK((got - want).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("DCT round-trip and energy preservation") {
    Rng rng(12);
    for (int i = 0; i < 50; ++i) {
        Block8 x = random_block(rng, -128.0, 127.0);
        Block8 f = fdct(x);
        CHECK((idct(f) - x).cwiseAbs().maxCoeff() < 1e-9);
        double ex = x.squaredNorm(), ef = f.squaredNorm();
        CHECK(std::abs(ex - ef) / ex < 1e-9);
    }
}

TEST_CASE("quant table scaling endpoints") {
    auto [luma, chroma] = base_quant_tables();
    CHECK(luma(0, 0) == 16);
    CHECK(luma(7, 7) == 99);
    CHECK(chroma(0, 0) == 17);

    CHECK(scale_quant_table(luma, QualityFactor(50)) == luma);
    CHECK(scale_quant_table(chroma, QualityFactor(50)) == chroma);

    QuantTable ones = scale_quant_table(luma, QualityFactor(100));
    CHECK(ones.minCoeff() == 1);
    CHECK(ones.maxCoeff() == 1);

    CHECK(scale_quant_table(luma, QualityFactor(10))(0, 0) == 80);
}

TEST_CASE("quality factor range is enforced") {
    CHECK_THROWS_AS(QualityFactor(0), Error);
    CHECK_THROWS_AS(QualityFactor(101), Error);
    CHECK(QualityFactor(1).value() == 1);
}

TEST_CASE("quantize rounds half away from zero") {
    Block8 b = Block8::Zero();
    b(0, 0) = 40.0;   // 40/16 = 2.5
    b(0, 1) = -40.0;  // table entry 11: -40/11 = -3.63
    auto [luma, chroma] = base_quant_tables();
    QuantizedBlock q = quantize(b, luma);
    CHECK(q(0, 0) == 3);
    CHECK(q(0, 1) == -4);
    Block8 d = dequantize(q, luma);
    CHECK(d(0, 0) == 48.0);
    CHECK(d(0, 1) == -44.0);
}

TEST_CASE("quantize rejects magnitudes past the coder's range") {
    Block8 b = Block8::Zero();
    b(0, 0) = 3000.0;
    QuantTable ones = scale_quant_table(base_quant_tables().first, QualityFactor(100));
    CHECK_THROWS_AS(quantize(b, ones), Error);
}

TEST_CASE("padding replicates edges") {
    PlaneImage p(5, 3);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 5; ++x) p.at(x, y) = uint8_t(10 * y + x);
    PlaneImage padded = pad_to_block_multiple(p);
    CHECK(padded.width == 8);
    CHECK(padded.height == 8);
    CHECK(padded.at(4, 2) == 24);
    CHECK(padded.at(7, 2) == 24);  // replicated right edge
    CHECK(padded.at(4, 7) == 24);  // replicated bottom edge
    CHECK(padded.at(7, 7) == 24);

    PlaneImage aligned(8, 8);
    CHECK(pad_to_block_multiple(aligned) == aligned);
}

TEST_CASE("partition and merge invert each other") {
    PlaneImage p(16, 8);
    Rng rng(5);
    for (auto& v : p.data) v = uint8_t(rng.below(256));
    auto blocks = partition_blocks(p);
    CHECK(blocks.size() == 2);
    CHECK(blocks[0](0, 0) == double(p.at(0, 0)) - 128.0);
    CHECK(merge_blocks(blocks, 2, 1) == p);
}

TEST_CASE("encode/decode at high quality is near lossless") {
    RgbImage img = synthetic_frame(64, 48, 3);
    EncodedPlanes planes = encode_planes(img, QualityFactor(100));
    RgbImage dec = decode_planes(planes.y, planes.cb, planes.cr, QualityFactor(100), 64, 48);
    double mse = 0;
    for (size_t i = 0; i < img.data.size(); ++i) {
        double d = double(img.data[i]) - double(dec.data[i]);
        mse += d * d;
    }
    mse /= double(img.data.size());
    CHECK(10.0 * std::log10(255.0 * 255.0 / mse) > 40.0);
}

TEST_CASE("decode crops padding back to the requested size") {
    RgbImage img = synthetic_frame(13, 9, 21);
    EncodedPlanes planes = encode_planes(img, QualityFactor(75));
    CHECK(planes.y.blocks_w == 2);
    CHECK(planes.y.blocks_h == 2);
    RgbImage dec = decode_planes(planes.y, planes.cb, planes.cr, QualityFactor(75), 13, 9);
    CHECK(dec.width == 13);
    CHECK(dec.height == 9);
}
