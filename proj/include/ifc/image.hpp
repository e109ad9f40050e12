#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ifc {

// Row-major interleaved 8-bit R,G,B samples.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> data;

    RgbImage() = default;
    RgbImage(int w, int h) : width(w), height(h), data(size_t(w) * h * 3, 0) {}

    uint8_t& at(int x, int y, int ch) { return data[(size_t(y) * width + x) * 3 + ch]; }
    uint8_t at(int x, int y, int ch) const { return data[(size_t(y) * width + x) * 3 + ch]; }

    bool operator==(const RgbImage&) const = default;
};

// Row-major 8-bit single-channel raster.
struct PlaneImage {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> data;

    PlaneImage() = default;
    PlaneImage(int w, int h) : width(w), height(h), data(size_t(w) * h, 0) {}

    uint8_t& at(int x, int y) { return data[size_t(y) * width + x]; }
    uint8_t at(int x, int y) const { return data[size_t(y) * width + x]; }

    bool operator==(const PlaneImage&) const = default;
};

// Binary PPM (P6) / PGM (P5), 8-bit, max value 255. Header comments are skipped.
RgbImage read_ppm(const std::string& path);
void write_ppm(const RgbImage& image, const std::string& path);

PlaneImage read_pgm(const std::string& path);
void write_pgm(const PlaneImage& plane, const std::string& path);

}  // namespace ifc
