#include "ifc/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "ifc/tensor.hpp"
#include "ifc/util.hpp"

namespace ifc {

namespace {

constexpr int kCell = 40;
constexpr int kTile = 3;
constexpr double kPi = 3.14159265358979323846;

enum class Pattern : int { flat, checker_a, checker_b, weave };

struct Region {
    Pattern pattern;
    double amplitude;
    double sign;
};

}  // namespace

RgbImage synthetic_frame(int width, int height, uint64_t seed) {
    if (width < 1 || height < 1) fail("frame dimensions must be positive");
    Rng rng(seed);

    double base[3];
    for (int c = 0; c < 3; ++c) base[c] = 96.0 + rng.uniform() * 64.0;
    double gx = (rng.uniform() - 0.5) * 96.0 / width;
    double gy = (rng.uniform() - 0.5) * 96.0 / height;
    double wave_amp = 4.0 + rng.uniform() * 2.0;
    double wave_px = 2.0 * kPi / (64.0 + rng.uniform() * 64.0);
    double wave_py = 2.0 * kPi / (64.0 + rng.uniform() * 64.0);
    double wave_hx = rng.uniform() * 2.0 * kPi;
    double wave_hy = rng.uniform() * 2.0 * kPi;

    // Texture cells tile in lockstep with the 8x8 block grid and each kind
    // uses one fixed amplitude, so every textured block carries the same
    // clean frequency signature. A coarse encode distorts the amplitudes in
    // a systematic, recognizable way instead of burying them in variety.
    // Kinds are dealt per 3x3-cell tile from a fixed multiset, so every tile
    // sees the same mix of textures in a shuffled arrangement.
    int cells_x = (width + kCell - 1) / kCell;
    int cells_y = (height + kCell - 1) / kCell;
    std::vector<Region> regions(static_cast<size_t>(cells_x) * cells_y);
    static constexpr Pattern kMenu[kTile * kTile] = {
        Pattern::flat,      Pattern::checker_a, Pattern::checker_a,
        Pattern::checker_a, Pattern::checker_a, Pattern::checker_b,
        Pattern::checker_b, Pattern::weave,     Pattern::weave,
    };
    for (int ty = 0; ty < cells_y; ty += kTile)
        for (int tx = 0; tx < cells_x; tx += kTile) {
            Pattern deck[kTile * kTile];
            std::copy(std::begin(kMenu), std::end(kMenu), deck);
            for (int i = kTile * kTile - 1; i > 0; --i)
                std::swap(deck[i], deck[rng.below(uint64_t(i) + 1)]);
            int slot = 0;
            for (int cy = ty; cy < std::min(ty + kTile, cells_y); ++cy)
                for (int cx = tx; cx < std::min(tx + kTile, cells_x); ++cx)
                    regions[size_t(cy) * cells_x + cx].pattern = deck[slot++];
        }
    for (auto& r : regions) {
        r.amplitude = r.pattern == Pattern::checker_a ? 44.0
                    : r.pattern == Pattern::checker_b ? 44.0
                                                      : 36.0;
        r.sign = rng.below(2) == 0 ? 1.0 : -1.0;
    }

    RgbImage img(width, height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const Region& r =
                regions[static_cast<size_t>(y / kCell) * cells_x + x / kCell];
            double pat = 0.0;
            switch (r.pattern) {
                case Pattern::flat:
                    break;
                case Pattern::checker_a:
                    pat = ((x / 2 + y / 2) % 2 == 0) ? 1.0 : -1.0;
                    break;
                case Pattern::checker_b:
                    pat = (((x + 1) / 2 + (y + 1) / 2) % 2 == 0) ? 1.0 : -1.0;
                    break;
                case Pattern::weave:
                    pat = std::sin(2.0 * kPi * x / 8.0) * std::sin(2.0 * kPi * y / 8.0);
                    break;
            }
            double wave = wave_amp * std::sin(wave_px * x + wave_hx) *
                          std::sin(wave_py * y + wave_hy);
            for (int c = 0; c < 3; ++c) {
                double v = base[c] + gx * x + gy * y + wave +
                           pat * r.sign * r.amplitude;
                img.at(x, y, c) = static_cast<uint8_t>(
                    std::clamp(std::lround(v), 0L, 255L));
            }
        }
    }
    return img;
}

}  // namespace ifc
