#include "ifc/zoo.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ifc/util.hpp"

namespace ifc {
namespace {

int scaled(int width, double mult) { return std::max(1, int(std::lround(width * mult))); }

struct Builder {
    ModelGraph g;

    explicit Builder(std::string name, double width_mult) {
        g.name = std::move(name);
        g.width_mult = width_mult;
    }

    int node(LayerSpec l) {
        g.layers.push_back(std::move(l));
        return int(g.layers.size()) - 1;
    }
    int conv(int from, int filters, int kernel) {
        return node({LayerKind::conv, filters, kernel, 1, {from}, -1});
    }
    int bn(int from) { return node({LayerKind::batchnorm, 0, 0, 1, {from}, -1}); }
    int relu(int from) { return node({LayerKind::relu, 0, 0, 1, {from}, -1}); }
    int pool(int from) { return node({LayerKind::maxpool, 0, 3, 2, {from}, -1}); }
    int tconv(int from, int filters, int target_of) {
        return node({LayerKind::transpose_conv, filters, 3, 2, {from}, target_of});
    }
    int cat(int a, int b) { return node({LayerKind::concat, 0, 0, 1, {a, b}, -1}); }
    int add(int a, int b) { return node({LayerKind::add, 0, 0, 1, {a, b}, -1}); }
    int sub(int a, int b) { return node({LayerKind::subtract, 0, 0, 1, {a, b}, -1}); }
    // conv + batchnorm + relu
    int cbr(int from, int filters, int kernel) { return relu(bn(conv(from, filters, kernel))); }

    ModelGraph take(int output) {
        g.output = output;
        validate_graph(g);
        return std::move(g);
    }
};

ModelGraph build_unet_family(const std::string& name, int base_width, double mult, bool residual) {
    Builder b(name, mult);
    auto level_width = [&](int level) { return scaled(std::min(base_width << level, 256), mult); };
    std::vector<int> enc;
    int p = -1;
    for (int i = 0; i < 5; ++i) {
        int c = b.cbr(p, level_width(i), 3);
        enc.push_back(c);
        p = b.pool(c);
    }
    p = b.cbr(p, level_width(5), 3);
    for (int i = 4; i >= 0; --i) {
        int up = b.tconv(p, level_width(i), enc[i]);
        p = b.cbr(b.cat(up, enc[i]), level_width(i), 3);
    }
    int proj = b.conv(p, 3, 3);
    return b.take(residual ? b.add(-1, proj) : proj);
}

}  // namespace

ModelGraph build_dncnn(double width_mult) {
    Builder b("dncnn", width_mult);
    int w = scaled(64, width_mult);
    int p = b.relu(b.conv(-1, w, 3));
    for (int i = 0; i < 18; ++i) p = b.relu(b.bn(b.conv(p, w, 3)));
    int noise = b.conv(p, 3, 3);
    return b.take(b.sub(-1, noise));
}

ModelGraph build_deeper_srcnn(double width_mult) {
    Builder b("deeper-srcnn", width_mult);
    int w = scaled(32, width_mult);
    int p = b.relu(b.conv(-1, w, 5));
    for (int block = 0; block < 6; ++block) {
        int entry = p;
        for (int i = 0; i < 3; ++i) p = b.relu(b.conv(p, w, 5));
        if (block > 0) p = b.add(entry, p);
    }
    int head = b.conv(p, 3, 5);
    return b.take(b.add(-1, head));
}

ModelGraph build_resnet(int blocks, int width, double width_mult) {
    if (blocks < 1) fail("resnet needs at least one block");
    Builder b("resnet", width_mult);
    int w = scaled(width, width_mult);
    int p = b.relu(b.conv(-1, w, 3));
    for (int i = 0; i < blocks; ++i) {
        int entry = p;
        int t = b.relu(b.bn(b.conv(p, w, 3)));
        t = b.bn(b.conv(t, w, 3));
        p = b.relu(b.add(entry, t));
    }
    int head = b.conv(p, 3, 3);
    return b.take(b.add(-1, head));
}

ModelGraph build_unet(int base_width, double width_mult) {
    return build_unet_family("unet", base_width, width_mult, false);
}

ModelGraph build_res_unet(int base_width, double width_mult) {
    return build_unet_family("res-unet", base_width, width_mult, true);
}

ModelGraph build_arcnn(double width_mult) {
    Builder b("arcnn", width_mult);
    int p = b.relu(b.conv(-1, scaled(64, width_mult), 9));
    p = b.relu(b.conv(p, scaled(32, width_mult), 7));
    p = b.relu(b.conv(p, scaled(16, width_mult), 1));
    return b.take(b.conv(p, 3, 5));
}

ModelGraph build_fast_arcnn(double width_mult) {
    Builder b("fast-arcnn", width_mult);
    int p = b.relu(b.conv(-1, scaled(64, width_mult), 9));
    p = b.relu(b.conv(p, scaled(32, width_mult), 1));
    p = b.relu(b.conv(p, scaled(32, width_mult), 7));
    p = b.relu(b.conv(p, scaled(16, width_mult), 1));
    return b.take(b.conv(p, 3, 5));
}

ModelGraph build_model(const std::string& name, double width_mult) {
    if (name == "dncnn") return build_dncnn(width_mult);
    if (name == "deeper-srcnn") return build_deeper_srcnn(width_mult);
    if (name == "resnet") return build_resnet(8, 64, width_mult);
    if (name == "unet") return build_unet(32, width_mult);
    if (name == "res-unet") return build_res_unet(32, width_mult);
    if (name == "arcnn") return build_arcnn(width_mult);
    if (name == "fast-arcnn") return build_fast_arcnn(width_mult);
    fail("unknown architecture '" + name + "'");
}

std::vector<std::string> model_names() {
    return {"dncnn", "deeper-srcnn", "resnet", "unet", "res-unet", "arcnn", "fast-arcnn"};
}

ModelGraph model_from_descriptor(const std::string& descriptor) {
    std::string arch;
    double mult = 1.0;
    std::istringstream in(descriptor);
    std::string token;
    while (in >> token) {
        size_t eq = token.find('=');
        if (eq == std::string::npos) fail("malformed descriptor '" + descriptor + "'");
        std::string key = token.substr(0, eq), value = token.substr(eq + 1);
        if (key == "arch")
            arch = value;
        else if (key == "width_mult")
            mult = std::stod(value);
        else
            fail("unknown descriptor key '" + key + "'");
    }
    if (arch.empty()) fail("descriptor missing arch");
    return build_model(arch, mult);
}

ModelGraph graph_for_weights(const WeightsFile& weights, int input_channels) {
    ModelGraph g = model_from_descriptor(weights.descriptor);
    std::map<std::string, std::array<int, 4>> expected = expected_params(g, input_channels);
    for (const auto& [name, dims] : expected) {
        auto it = weights.tensors.find(name);
        if (it == weights.tensors.end()) fail("architecture mismatch: missing tensor " + name);
        const Tensor4<float>& t = it->second;
        if (t.n != dims[0] || t.c != dims[1] || t.h != dims[2] || t.w != dims[3])
            fail("architecture mismatch: tensor " + name + " has wrong shape");
    }
    for (const auto& [name, t] : weights.tensors)
        if (!expected.count(name) && !name.starts_with("norm."))
            fail("architecture mismatch: unexpected tensor " + name);
    return g;
}

long parameter_count(const ModelGraph& g, int input_channels) {
    long count = 0;
    for (const auto& [name, d] : expected_params(g, input_channels))
        if (!name.ends_with(".mean") && !name.ends_with(".var"))
            count += long(d[0]) * d[1] * d[2] * d[3];
    return count;
}

}  // namespace ifc
