#include "ifc/model.hpp"

#include <charconv>

#include "ifc/util.hpp"

namespace ifc {
namespace {

int input_count(LayerKind kind) {
    switch (kind) {
        case LayerKind::concat:
        case LayerKind::add:
        case LayerKind::subtract:
            return 2;
        default:
            return 1;
    }
}

}  // namespace

void validate_graph(const ModelGraph& g) {
    if (g.layers.empty()) fail("empty model graph");
    if (g.output < 0 || g.output >= int(g.layers.size())) fail("graph output index out of range");
    for (int i = 0; i < int(g.layers.size()); ++i) {
        const LayerSpec& l = g.layers[i];
        if (int(l.inputs.size()) != input_count(l.kind)) fail("layer input count mismatch");
        for (int idx : l.inputs)
            if (idx < -1 || idx >= i) fail("layer inputs must reference earlier nodes");
        if (l.kind == LayerKind::conv || l.kind == LayerKind::transpose_conv) {
            if (l.filters < 1 || l.kernel < 1 || l.stride < 1)
                fail("conv hyperparameters must be >= 1");
        }
        if (l.kind == LayerKind::maxpool && l.stride < 1) fail("pool stride must be >= 1");
        if (l.kind == LayerKind::transpose_conv && (l.target_of < -1 || l.target_of >= i))
            fail("transpose conv target must reference an earlier node");
    }
}

std::vector<Shape> infer_shapes(const ModelGraph& g, Shape input) {
    validate_graph(g);
    if (input.c < 1 || input.h < 1 || input.w < 1) fail("input shape must be positive");
    std::vector<Shape> shapes(g.layers.size());
    auto of = [&](int idx) -> const Shape& { return idx < 0 ? input : shapes[idx]; };
    for (int i = 0; i < int(g.layers.size()); ++i) {
        const LayerSpec& l = g.layers[i];
        const Shape& a = of(l.inputs[0]);
        switch (l.kind) {
            case LayerKind::conv: {
                ConvGeometry geo = conv_geometry(a.h, a.w, l.kernel, l.kernel, l.stride, PadMode::same);
                shapes[i] = {l.filters, geo.out_h, geo.out_w};
                break;
            }
            case LayerKind::maxpool: {
                ConvGeometry geo = conv_geometry(a.h, a.w, 3, 3, l.stride, PadMode::same);
                shapes[i] = {a.c, geo.out_h, geo.out_w};
                break;
            }
            case LayerKind::transpose_conv: {
                const Shape& t = of(l.target_of);
                shapes[i] = {l.filters, t.h, t.w};
                break;
            }
            case LayerKind::concat: {
                const Shape& b = of(l.inputs[1]);
                if (a.h != b.h || a.w != b.w) fail("concat spatial dims disagree");
                shapes[i] = {a.c + b.c, a.h, a.w};
                break;
            }
            case LayerKind::add:
            case LayerKind::subtract: {
                const Shape& b = of(l.inputs[1]);
                if (!(a == b)) fail("residual shapes disagree");
                shapes[i] = a;
                break;
            }
            default:
                shapes[i] = a;
        }
    }
    return shapes;
}

std::map<std::string, std::array<int, 4>> expected_params(const ModelGraph& g, int input_channels) {
    // Spatial extent is irrelevant to parameter shapes; any poolable size works.
    std::vector<Shape> shapes = infer_shapes(g, {input_channels, 256, 256});
    std::map<std::string, std::array<int, 4>> out;
    auto channels_of = [&](int idx) { return idx < 0 ? input_channels : shapes[idx].c; };
    for (int i = 0; i < int(g.layers.size()); ++i) {
        const LayerSpec& l = g.layers[i];
        int in_c = channels_of(l.inputs[0]);
        switch (l.kind) {
            case LayerKind::conv:
                out[param_key(i, "w")] = {l.filters, in_c, l.kernel, l.kernel};
                out[param_key(i, "b")] = {1, l.filters, 1, 1};
                break;
            case LayerKind::transpose_conv:
                out[param_key(i, "w")] = {in_c, l.filters, l.kernel, l.kernel};
                out[param_key(i, "b")] = {1, l.filters, 1, 1};
                break;
            case LayerKind::batchnorm:
                for (const char* f : {"scale", "shift", "mean", "var"})
                    out[param_key(i, f)] = {1, in_c, 1, 1};
                break;
            default:
                break;
        }
    }
    return out;
}

std::string graph_descriptor(const ModelGraph& g) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, g.width_mult);
    return "arch=" + g.name + " width_mult=" + std::string(buf, p);
}

void save_weights(const std::string& path, const WeightsFile& weights) {
    ByteWriter w;
    w.text("DCTW");
    w.u8(1);
    w.u32(uint32_t(weights.descriptor.size()));
    w.text(weights.descriptor);
    w.u32(uint32_t(weights.tensors.size()));
    for (const auto& [name, t] : weights.tensors) {
        w.u32(uint32_t(name.size()));
        w.text(name);
        w.u32(uint32_t(t.n));
        w.u32(uint32_t(t.c));
        w.u32(uint32_t(t.h));
        w.u32(uint32_t(t.w));
        for (float v : t.v) w.f32(v);
    }
    write_file_atomic(path, w.data());
}

WeightsFile load_weights(const std::string& path) {
    std::vector<uint8_t> bytes = read_file(path);
    ByteReader r(bytes);
    if (r.text(4) != "DCTW") fail("bad magic");
    if (r.u8() != 1) fail("unsupported version");
    WeightsFile out;
    out.descriptor = r.text(r.u32());
    uint32_t count = r.u32();
    for (uint32_t i = 0; i < count; ++i) {
        std::string name = r.text(r.u32());
        uint32_t n = r.u32(), c = r.u32(), h = r.u32(), w = r.u32();
        if (n < 1 || c < 1 || h < 1 || w < 1 || size_t(n) * c * h * w > (1u << 28))
            fail("tensor dims out of range");
        Tensor4<float> t{int(n), int(c), int(h), int(w)};
        for (float& v : t.v) v = r.f32();
        if (!out.tensors.emplace(std::move(name), std::move(t)).second)
            fail("duplicate tensor name");
    }
    if (!r.done()) fail("trailing bytes after last tensor");
    return out;
}

}  // namespace ifc
