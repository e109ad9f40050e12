#pragma once

#include <cstdint>

#include "ifc/image.hpp"

namespace ifc {

// Deterministic textured RGB test frame: global color gradients overlaid with
// a grid of per-region patterns (checkerboards, sinusoids, stripes, flats)
// whose scales sit in the mid frequencies that coarse quantization damages.
// Same (width, height, seed) always yields the same image.
RgbImage synthetic_frame(int width, int height, uint64_t seed);

}  // namespace ifc
