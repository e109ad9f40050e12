#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ifc/codec.hpp"
#include "ifc/tensor.hpp"

namespace ifc {

// Quantized DCT coefficients laid out spatially: entry (c, y, x) is coefficient
// (y%8, x%8) of block (y/8, x/8), channels ordered Y, Cb, Cr.
struct CoeffTensor {
    int channels = 0, height = 0, width = 0;
    std::vector<int16_t> v;

    CoeffTensor() = default;
    CoeffTensor(int c, int h, int w) : channels(c), height(h), width(w) {
        v.assign(size_t(c) * h * w, 0);
    }
    int16_t& at(int c, int y, int x) { return v[(size_t(c) * height + y) * width + x]; }
    int16_t at(int c, int y, int x) const { return v[(size_t(c) * height + y) * width + x]; }
    bool operator==(const CoeffTensor&) const = default;
};

// Non-overlapping size x size tiles, row-major; partial edge tiles discarded.
std::vector<RgbImage> extract_patches(const RgbImage& frame, int size = 120);

// encode_planes output rearranged into the spatial coefficient layout.
CoeffTensor patch_to_coeff_tensor(const RgbImage& patch, QualityFactor qf);

// Layout transforms between per-channel block grids and the spatial tensor.
CoeffTensor planes_to_coeff_tensor(const EncodedPlanes& planes);
EncodedPlanes coeff_tensor_to_planes(const CoeffTensor& t);

// Float views for model input/output (1 x channels x h x w).
Tensor4<float> to_float_tensor(const CoeffTensor& t);

struct NormStats {
    std::array<double, 3> mean{};
    std::array<double, 3> stddev{};  // epsilon-floored, always > 0
};

Tensor4<float> normalize(const Tensor4<float>& x, const NormStats& stats);
Tensor4<float> denormalize(const Tensor4<float>& x, const NormStats& stats);

// One coefficient sample on disk: "DCTS", version, dims, channel count,
// QF byte, then little-endian 16-bit coefficients.
void write_dcts(const std::string& path, const CoeffTensor& t, QualityFactor qf);
struct DctsFile {
    CoeffTensor tensor;
    QualityFactor qf{1};
};
DctsFile read_dcts(const std::string& path);

struct SampleEntry {
    std::string id;
    std::string source;  // frame path relative to the input directory
    int patch_index = 0;
    std::string split;  // "train", "valid", or "test:<source dir>"
};

struct DatasetManifest {
    int patch_size = 120;
    uint64_t seed = 0;
    std::vector<int> qfs;
    NormStats stats;
    std::vector<SampleEntry> samples;
};

// Loose .ppm files in frames_dir are the training source (seeded 95/5
// train/valid split over patches); each subdirectory is a held-out test
// source. Writes one DCTS file per patch per QF plus manifest.txt; rebuilding
// with the same inputs and seed is byte-identical.
DatasetManifest build_dataset(const std::string& frames_dir, const std::string& out_dir,
                              const std::vector<int>& qfs, uint64_t seed);

void save_manifest(const std::string& path, const DatasetManifest& m);
DatasetManifest load_manifest(const std::string& path);

// Per-channel mean / population std of the split's QF=10 tensors.
NormStats compute_norm_stats(const std::string& dataset_dir, const DatasetManifest& m,
                             const std::string& split = "train");

std::string sample_path(const std::string& dataset_dir, const std::string& id, int qf);
std::vector<const SampleEntry*> split_samples(const DatasetManifest& m, const std::string& split);

}  // namespace ifc
