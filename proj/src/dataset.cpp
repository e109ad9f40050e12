#include "ifc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>

#include "ifc/util.hpp"

namespace fs = std::filesystem;

namespace ifc {
namespace {

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<fs::path> sorted_ppm_files(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".ppm")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    return files;
}

std::string id_stem(const std::string& rel) {
    std::string s = rel.substr(0, rel.size() - 4);  // strip .ppm
    for (char& c : s)
        if (c == '/') c = '_';
    return s;
}

}  // namespace

std::vector<RgbImage> extract_patches(const RgbImage& frame, int size) {
    if (size < 1) fail("patch size must be >= 1");
    if (frame.width < size || frame.height < size) fail("frame smaller than patch size");
    std::vector<RgbImage> patches;
    for (int py = 0; py + size <= frame.height; py += size)
        for (int px = 0; px + size <= frame.width; px += size) {
            RgbImage p;
            p.width = size;
            p.height = size;
            p.data.resize(size_t(size) * size * 3);
            for (int y = 0; y < size; ++y)
                for (int x = 0; x < size; ++x)
                    for (int ch = 0; ch < 3; ++ch)
                        p.at(x, y, ch) = frame.at(px + x, py + y, ch);
            patches.push_back(std::move(p));
        }
    return patches;
}

CoeffTensor patch_to_coeff_tensor(const RgbImage& patch, QualityFactor qf) {
    if (patch.width % 8 != 0 || patch.height % 8 != 0)
        fail("patch dimensions must be multiples of 8");
    return planes_to_coeff_tensor(encode_planes(patch, qf));
}

CoeffTensor planes_to_coeff_tensor(const EncodedPlanes& planes) {
    int h = planes.y.blocks_h * 8, w = planes.y.blocks_w * 8;
    CoeffTensor t(3, h, w);
    const CoeffPlane* chans[3] = {&planes.y, &planes.cb, &planes.cr};
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                t.at(c, y, x) = chans[c]->block(x / 8, y / 8)(y % 8, x % 8);
    return t;
}

EncodedPlanes coeff_tensor_to_planes(const CoeffTensor& t) {
    if (t.channels != 3) fail("coefficient tensor must have 3 channels");
    if (t.height % 8 != 0 || t.width % 8 != 0) fail("tensor dims must be multiples of 8");
    EncodedPlanes planes;
    CoeffPlane* chans[3] = {&planes.y, &planes.cb, &planes.cr};
    for (int c = 0; c < 3; ++c) {
        chans[c]->blocks_w = t.width / 8;
        chans[c]->blocks_h = t.height / 8;
        chans[c]->blocks.assign(size_t(t.width / 8) * (t.height / 8), QuantizedBlock::Zero());
        for (int y = 0; y < t.height; ++y)
            for (int x = 0; x < t.width; ++x)
                chans[c]->block(x / 8, y / 8)(y % 8, x % 8) = t.at(c, y, x);
    }
    return planes;
}

Tensor4<float> to_float_tensor(const CoeffTensor& t) {
    Tensor4<float> out(1, t.channels, t.height, t.width);
    for (size_t i = 0; i < t.v.size(); ++i) out.v[i] = float(t.v[i]);
    return out;
}

Tensor4<float> normalize(const Tensor4<float>& x, const NormStats& stats) {
    if (x.c != 3) fail("normalization expects 3 channels");
    Tensor4<float> out = x;
    size_t plane = size_t(x.h) * x.w;
    for (int in = 0; in < x.n; ++in)
        for (int c = 0; c < 3; ++c) {
            float* p = out.batch(in) + size_t(c) * plane;
            float mu = float(stats.mean[c]), inv = float(1.0 / stats.stddev[c]);
            for (size_t i = 0; i < plane; ++i) p[i] = (p[i] - mu) * inv;
        }
    return out;
}

Tensor4<float> denormalize(const Tensor4<float>& x, const NormStats& stats) {
    if (x.c != 3) fail("normalization expects 3 channels");
    Tensor4<float> out = x;
    size_t plane = size_t(x.h) * x.w;
    for (int in = 0; in < x.n; ++in)
        for (int c = 0; c < 3; ++c) {
            float* p = out.batch(in) + size_t(c) * plane;
            float mu = float(stats.mean[c]), sd = float(stats.stddev[c]);
            for (size_t i = 0; i < plane; ++i) p[i] = p[i] * sd + mu;
        }
    return out;
}

void write_dcts(const std::string& path, const CoeffTensor& t, QualityFactor qf) {
    if (t.width > 0xffff || t.height > 0xffff) fail("dimensions out of range [1,65535]");
    ByteWriter w;
    w.text("DCTS");
    w.u8(1);
    w.u16(uint16_t(t.width));
    w.u16(uint16_t(t.height));
    w.u8(uint8_t(t.channels));
    w.u8(uint8_t(qf.value()));
    for (int16_t v : t.v) w.i16(v);
    write_file(path, w.data());
}

DctsFile read_dcts(const std::string& path) {
    std::vector<uint8_t> bytes = read_file(path);
    ByteReader r(bytes);
    if (r.text(4) != "DCTS") fail("bad magic");
    if (r.u8() != 1) fail("unsupported version");
    int w = r.u16(), h = r.u16(), c = r.u8();
    if (w < 1 || h < 1 || c < 1) fail("tensor dims out of range");
    DctsFile out{CoeffTensor(c, h, w), QualityFactor(r.u8())};
    for (int16_t& v : out.tensor.v) v = r.i16();
    if (!r.done()) fail("trailing bytes after coefficients");
    return out;
}

DatasetManifest build_dataset(const std::string& frames_dir, const std::string& out_dir,
                              const std::vector<int>& qfs, uint64_t seed) {
    if (qfs.empty()) fail("at least one quality factor required");
    if (std::find(qfs.begin(), qfs.end(), 10) == qfs.end())
        fail("quality factor 10 (the model input) must be included");
    if (!fs::is_directory(frames_dir)) fail("not a directory: " + frames_dir);
    fs::create_directories(out_dir);

    struct Source {
        std::string rel;   // path relative to frames_dir
        std::string test;  // empty = training source, else test set name
    };
    std::vector<Source> sources;
    for (const fs::path& p : sorted_ppm_files(frames_dir))
        sources.push_back({p.filename().string(), ""});
    std::vector<fs::path> subdirs;
    for (const auto& entry : fs::directory_iterator(frames_dir))
        if (entry.is_directory()) subdirs.push_back(entry.path());
    std::sort(subdirs.begin(), subdirs.end());
    for (const fs::path& dir : subdirs)
        for (const fs::path& p : sorted_ppm_files(dir))
            sources.push_back({dir.filename().string() + "/" + p.filename().string(),
                               dir.filename().string()});
    if (sources.empty()) fail("no .ppm frames found in " + frames_dir);

    DatasetManifest m;
    m.seed = seed;
    m.qfs = qfs;
    std::set<std::string> seen;
    std::vector<size_t> train_source_rows;
    std::vector<std::vector<CoeffTensor>> qf10_tensors_by_row;  // only rows needing stats
    for (const Source& src : sources) {
        if (src.rel.find_first_of(" \t\n") != std::string::npos)
            fail("frame names must not contain whitespace: " + src.rel);
        RgbImage frame = read_ppm(frames_dir + "/" + src.rel);
        std::vector<RgbImage> patches = extract_patches(frame, m.patch_size);
        for (int i = 0; i < int(patches.size()); ++i) {
            SampleEntry e;
            e.id = id_stem(src.rel) + "_p" + std::to_string(i);
            e.source = src.rel;
            e.patch_index = i;
            e.split = src.test.empty() ? "train" : "test:" + src.test;
            if (!seen.insert(e.id).second) fail("duplicate sample id " + e.id);
            for (int qf : qfs) {
                CoeffTensor t = patch_to_coeff_tensor(patches[i], QualityFactor(qf));
                write_dcts(sample_path(out_dir, e.id, qf), t, QualityFactor(qf));
            }
            if (src.test.empty()) train_source_rows.push_back(m.samples.size());
            m.samples.push_back(std::move(e));
        }
    }

    // Seeded 95/5 patch split over the training source.
    std::vector<size_t> order = train_source_rows;
    Rng rng(seed);
    rng.shuffle(order.begin(), order.end());
    size_t n_train = size_t(std::llround(0.95 * double(order.size())));
    if (n_train == order.size() && order.size() > 1) --n_train;  // keep a validation patch
    for (size_t k = 0; k < order.size(); ++k)
        m.samples[order[k]].split = k < n_train ? "train" : "valid";

    m.stats = compute_norm_stats(out_dir, m, "train");
    save_manifest(out_dir + "/manifest.txt", m);
    return m;
}

void save_manifest(const std::string& path, const DatasetManifest& m) {
    std::string out;
    out += "ifc-dataset 1\n";
    out += "patch-size " + std::to_string(m.patch_size) + "\n";
    out += "seed " + std::to_string(m.seed) + "\n";
    out += "qfs ";
    for (size_t i = 0; i < m.qfs.size(); ++i) out += (i ? "," : "") + std::to_string(m.qfs[i]);
    out += "\n";
    out += "norm-mean";
    for (double v : m.stats.mean) out += " " + g17(v);
    out += "\nnorm-std";
    for (double v : m.stats.stddev) out += " " + g17(v);
    out += "\nsamples " + std::to_string(m.samples.size()) + "\n";
    for (const SampleEntry& e : m.samples)
        out += e.id + " " + e.source + " " + std::to_string(e.patch_index) + " " + e.split + "\n";
    write_file(path, std::span(reinterpret_cast<const uint8_t*>(out.data()), out.size()));
}

DatasetManifest load_manifest(const std::string& path) {
    std::vector<uint8_t> bytes = read_file(path);
    std::istringstream in(std::string(bytes.begin(), bytes.end()));
    std::string key;
    DatasetManifest m;
    if (!(in >> key) || key != "ifc-dataset") fail("not a dataset manifest");
    int version;
    in >> version;
    if (version != 1) fail("unsupported version");
    size_t count = 0;
    while (in >> key) {
        if (key == "patch-size")
            in >> m.patch_size;
        else if (key == "seed")
            in >> m.seed;
        else if (key == "qfs") {
            std::string list;
            in >> list;
            std::istringstream ls(list);
            std::string item;
            while (std::getline(ls, item, ',')) m.qfs.push_back(std::stoi(item));
        } else if (key == "norm-mean")
            in >> m.stats.mean[0] >> m.stats.mean[1] >> m.stats.mean[2];
        else if (key == "norm-std")
            in >> m.stats.stddev[0] >> m.stats.stddev[1] >> m.stats.stddev[2];
        else if (key == "samples") {
            in >> count;
            break;
        } else
            fail("unknown manifest key '" + key + "'");
    }
    for (size_t i = 0; i < count; ++i) {
        SampleEntry e;
        if (!(in >> e.id >> e.source >> e.patch_index >> e.split)) fail("truncated sample table");
        m.samples.push_back(std::move(e));
    }
    return m;
}

NormStats compute_norm_stats(const std::string& dataset_dir, const DatasetManifest& m,
                             const std::string& split) {
    std::vector<const SampleEntry*> rows = split_samples(m, split);
    if (rows.empty()) fail("split '" + split + "' is empty");
    double sum[3] = {}, sq[3] = {};
    size_t count = 0;
    for (const SampleEntry* e : rows) {
        DctsFile f = read_dcts(sample_path(dataset_dir, e->id, 10));
        if (f.tensor.channels != 3) fail("expected 3-channel tensor for " + e->id);
        size_t plane = size_t(f.tensor.height) * f.tensor.width;
        for (int c = 0; c < 3; ++c) {
            const int16_t* p = f.tensor.v.data() + size_t(c) * plane;
            for (size_t i = 0; i < plane; ++i) {
                sum[c] += p[i];
                sq[c] += double(p[i]) * p[i];
            }
        }
        count += plane;
    }
    NormStats stats;
    for (int c = 0; c < 3; ++c) {
        stats.mean[c] = sum[c] / double(count);
        double var = sq[c] / double(count) - stats.mean[c] * stats.mean[c];
        stats.stddev[c] = std::sqrt(std::max(var, 0.0));
        if (stats.stddev[c] < 1e-6) stats.stddev[c] = 1e-6;
    }
    return stats;
}

std::string sample_path(const std::string& dataset_dir, const std::string& id, int qf) {
    return dataset_dir + "/" + id + "_qf" + std::to_string(qf) + ".dcts";
}

std::vector<const SampleEntry*> split_samples(const DatasetManifest& m, const std::string& split) {
    std::vector<const SampleEntry*> out;
    for (const SampleEntry& e : m.samples)
        if (e.split == split || (split == "test" && e.split.starts_with("test:")))
            out.push_back(&e);
    return out;
}

}  // namespace ifc
