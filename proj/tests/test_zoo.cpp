#include <algorithm>

#include "doctest.h"
#include "ifc/zoo.hpp"

using namespace ifc;

namespace {

int count_kind(const ModelGraph& g, LayerKind k) {
    int n = 0;
    for (const auto& l : g.layers) n += l.kind == k;
    return n;
}

// Parameter tally derived straight from inferred shapes, independent of the
// expected_params bookkeeping.
long shape_walk_param_count(const ModelGraph& g, int input_channels) {
    auto shapes = infer_shapes(g, {input_channels, 64, 64});
    auto in_c = [&](int node) {
        int src = g.layers[node].inputs.at(0);
        return src < 0 ? input_channels : shapes[src].c;
    };
    long total = 0;
    for (int i = 0; i < int(g.layers.size()); ++i) {
        const LayerSpec& l = g.layers[i];
        if (l.kind == LayerKind::conv || l.kind == LayerKind::transpose_conv)
            total += long(l.filters) * in_c(i) * l.kernel * l.kernel + l.filters;
        else if (l.kind == LayerKind::batchnorm)
            total += 2L * shapes[i].c;
    }
    return total;
}

}  // namespace

TEST_CASE("registry knows every architecture") {
    auto names = model_names();
    for (const char* want : {"dncnn", "deeper-srcnn", "resnet", "unet", "res-unet", "arcnn",
                             "fast-arcnn"})
        CHECK(std::find(names.begin(), names.end(), want) != names.end());
    CHECK_THROWS_AS(build_model("vgg"), Error);
}

TEST_CASE("denoiser is 20 convolutions with a subtractive skip") {
    ModelGraph g = build_dncnn();
    CHECK(count_kind(g, LayerKind::conv) == 20);
    CHECK(count_kind(g, LayerKind::batchnorm) == 18);
    CHECK(count_kind(g, LayerKind::subtract) == 1);
    const LayerSpec& out = g.layers[g.output];
    CHECK(out.kind == LayerKind::subtract);
    CHECK(out.inputs[0] == -1);  // input minus predicted noise
    for (const auto& l : g.layers)
        if (l.kind == LayerKind::conv) CHECK(l.kernel == 3);
    CHECK(parameter_count(g, 3) == 670531);
}

TEST_CASE("deep mapper is 20 width-32 k5 convolutions with additive skips") {
    ModelGraph g = build_deeper_srcnn();
    CHECK(count_kind(g, LayerKind::conv) == 20);
    CHECK(count_kind(g, LayerKind::batchnorm) == 0);
    int adds = count_kind(g, LayerKind::add);
    CHECK(adds == 6);  // 5 block skips + global
    CHECK(g.layers[g.output].kind == LayerKind::add);
    CHECK(g.layers[g.output].inputs[0] == -1);
    for (const auto& l : g.layers)
        if (l.kind == LayerKind::conv) {
            CHECK(l.kernel == 5);
            bool hidden = l.filters == 32 || l.filters == 3;
            CHECK(hidden);
        }
}

TEST_CASE("residual stack counts") {
    ModelGraph g = build_resnet();
    CHECK(count_kind(g, LayerKind::conv) == 18);  // stem + 2 per block + head
    CHECK(count_kind(g, LayerKind::batchnorm) == 16);
    CHECK(count_kind(g, LayerKind::add) == 9);  // 8 block skips + global
}

TEST_CASE("hourglass models have 11 coder convs, 5 pools, matched skips") {
    for (const char* name : {"unet", "res-unet"}) {
        ModelGraph g = build_model(name);
        CHECK(count_kind(g, LayerKind::maxpool) == 5);
        CHECK(count_kind(g, LayerKind::transpose_conv) == 5);
        CHECK(count_kind(g, LayerKind::concat) == 5);
        int coder_convs = 0;
        for (const auto& l : g.layers)
            if (l.kind == LayerKind::conv && l.filters != 3) ++coder_convs;
        CHECK(coder_convs == 11);
        CHECK(count_kind(g, LayerKind::add) == (g.name == std::string("res-unet") ? 1 : 0));

        auto shapes = infer_shapes(g, {3, 120, 120});
        for (int i = 0; i < int(g.layers.size()); ++i) {
            const LayerSpec& l = g.layers[i];
            if (l.kind != LayerKind::concat) continue;
            Shape a = shapes[l.inputs[0]], b = shapes[l.inputs[1]];
            CHECK(a.h == b.h);
            CHECK(a.w == b.w);
        }
        CHECK(shapes.back() == Shape{3, 120, 120});
    }
}

TEST_CASE("coarse-to-fine feature widths at the standard multiplier") {
    ModelGraph g = build_res_unet();
    std::vector<int> widths;
    for (const auto& l : g.layers)
        if (l.kind == LayerKind::conv && l.filters != 3) widths.push_back(l.filters);
    CHECK(widths == std::vector<int>{32, 64, 128, 256, 256, 256, 256, 256, 128, 64, 32});
}

TEST_CASE("artifact reducer layer plan") {
    ModelGraph g = build_arcnn();
    std::vector<std::pair<int, int>> plan;  // (filters, kernel)
    for (const auto& l : g.layers)
        if (l.kind == LayerKind::conv) plan.push_back({l.filters, l.kernel});
    CHECK(plan == std::vector<std::pair<int, int>>{{64, 9}, {32, 7}, {16, 1}, {3, 5}});

    ModelGraph f = build_fast_arcnn();
    plan.clear();
    for (const auto& l : f.layers)
        if (l.kind == LayerKind::conv) plan.push_back({l.filters, l.kernel});
    CHECK(plan == std::vector<std::pair<int, int>>{{64, 9}, {32, 1}, {32, 7}, {16, 1}, {3, 5}});
}

TEST_CASE("width multiplier scales hidden widths with a floor of 1") {
    ModelGraph g = build_dncnn(0.5);
    for (const auto& l : g.layers)
        if (l.kind == LayerKind::conv && l.filters != 3) CHECK(l.filters == 32);
    ModelGraph tinyg = build_dncnn(0.001);
    for (const auto& l : tinyg.layers)
        if (l.kind == LayerKind::conv && l.filters != 3) CHECK(l.filters == 1);
    ModelGraph ru = build_res_unet(32, 0.5);
    std::vector<int> widths;
    for (const auto& l : ru.layers)
        if (l.kind == LayerKind::conv && l.filters != 3) widths.push_back(l.filters);
    CHECK(widths == std::vector<int>{16, 32, 64, 128, 128, 128, 128, 128, 64, 32, 16});
}

TEST_CASE("parameter count matches a shape walk") {
    for (const auto& name : model_names()) {
        ModelGraph g = build_model(name, 0.5);
        CHECK(parameter_count(g, 3) == shape_walk_param_count(g, 3));
    }
}

TEST_CASE("every architecture preserves 3x120x120 at small width") {
    Rng rng(3);
    for (const auto& name : model_names()) {
        ModelGraph g = build_model(name, 0.25);
        auto params = init_params<float>(g, 3, rng);
        Tensor4<float> x(1, 3, 120, 120);
        for (float& v : x.v) v = float(rng.normal(0.0, 1.0));
        Tensor4<float> y = forward(g, x, params, Mode::infer);
        CHECK(y.c == 3);
        CHECK(y.h == 120);
        CHECK(y.w == 120);
    }
}

TEST_CASE("weights validation catches mismatches") {
    ModelGraph g = build_arcnn(0.25);
    Rng rng(1);
    WeightsFile wf;
    wf.descriptor = graph_descriptor(g);
    for (auto& [name, t] : init_params<float>(g, 3, rng)) wf.tensors.emplace(name, std::move(t));
    CHECK_NOTHROW(graph_for_weights(wf, 3));

    WeightsFile missing = wf;
    missing.tensors.erase("n0.b");
    CHECK_THROWS_AS(graph_for_weights(missing, 3), Error);

    WeightsFile extra = wf;
    extra.tensors.emplace("n99.w", Tensor4<float>(1, 1, 1, 1));
    CHECK_THROWS_AS(graph_for_weights(extra, 3), Error);

    WeightsFile allowed = wf;
    allowed.tensors.emplace("norm.mean", Tensor4<float>(1, 3, 1, 1));
    allowed.tensors.emplace("norm.std", Tensor4<float>(1, 3, 1, 1));
    CHECK_NOTHROW(graph_for_weights(allowed, 3));

    WeightsFile bad = wf;
    bad.tensors.at("n0.w") = Tensor4<float>(1, 1, 1, 1);
    CHECK_THROWS_AS(graph_for_weights(bad, 3), Error);
}
