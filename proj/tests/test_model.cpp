#include <filesystem>

#include "doctest.h"
#include "ifc/model.hpp"
#include "ifc/util.hpp"
#include "ifc/zoo.hpp"

using namespace ifc;

namespace {

// input -> conv(2,k3) -> bn -> relu -> add(input path via 1x1 conv) for
// exercising every bookkeeping path with cheap shapes.
ModelGraph tiny_graph() {
    ModelGraph g;
    g.name = "tiny";
    g.layers = {
        {LayerKind::conv, 2, 3, 1, {-1}, -1},       // 0
        {LayerKind::batchnorm, 0, 0, 1, {0}, -1},   // 1
        {LayerKind::relu, 0, 0, 1, {1}, -1},        // 2
        {LayerKind::conv, 2, 1, 1, {-1}, -1},       // 3
        {LayerKind::add, 0, 0, 1, {2, 3}, -1},      // 4
    };
    g.output = 4;
    return g;
}

}  // namespace

TEST_CASE("graph validation rejects malformed graphs") {
    ModelGraph g = tiny_graph();
    CHECK_NOTHROW(validate_graph(g));
    g.layers[1].inputs = {0};  // explicit index instead of relative, still fine
    CHECK_NOTHROW(validate_graph(g));
    g.layers[1].inputs = {1};  // self reference
    CHECK_THROWS_AS(validate_graph(g), Error);
    g = tiny_graph();
    g.output = 9;
    CHECK_THROWS_AS(validate_graph(g), Error);
    g = tiny_graph();
    g.layers[0].filters = 0;
    CHECK_THROWS_AS(validate_graph(g), Error);
}

TEST_CASE("shape inference walks the graph") {
    ModelGraph g = tiny_graph();
    auto shapes = infer_shapes(g, {3, 16, 12});
    CHECK(shapes[0] == Shape{2, 16, 12});
    CHECK(shapes[4] == Shape{2, 16, 12});

    ModelGraph bad = tiny_graph();
    bad.layers[3].filters = 5;  // add with mismatched channels
    CHECK_THROWS_AS(infer_shapes(bad, {3, 16, 12}), Error);
}

TEST_CASE("expected params lists every tensor with its shape") {
    auto params = expected_params(tiny_graph(), 3);
    CHECK(params.size() == 2 + 4 + 2);  // two convs, one bn
    CHECK(params.at("n0.w") == std::array<int, 4>{2, 3, 3, 3});
    CHECK(params.at("n0.b") == std::array<int, 4>{1, 2, 1, 1});
    CHECK(params.at("n1.scale") == std::array<int, 4>{1, 2, 1, 1});
    CHECK(params.at("n3.w") == std::array<int, 4>{2, 3, 1, 1});
}

TEST_CASE("init params is deterministic in the seed") {
    ModelGraph g = tiny_graph();
    Rng r1(9), r2(9), r3(10);
    auto p1 = init_params<float>(g, 3, r1);
    auto p2 = init_params<float>(g, 3, r2);
    auto p3 = init_params<float>(g, 3, r3);
    CHECK(p1.at("n0.w") == p2.at("n0.w"));
    CHECK(p1.at("n0.w").v != p3.at("n0.w").v);
    CHECK(p1.at("n1.var").v == std::vector<float>{1.0f, 1.0f});
    CHECK(p1.at("n1.shift").v == std::vector<float>{0.0f, 0.0f});
}

TEST_CASE("weights container round-trips") {
    WeightsFile wf;
    wf.descriptor = "arch=tiny width_mult=1";
    Tensor4<float> t(2, 3, 1, 1);
    for (size_t i = 0; i < t.v.size(); ++i) t.v[i] = float(i) * 0.25f;
    wf.tensors.emplace("n0.w", t);
    wf.tensors.emplace("norm.mean", Tensor4<float>(1, 3, 1, 1));
    std::string path = (std::filesystem::temp_directory_path() / "ifc_w.dctw").string();
    save_weights(path, wf);
    WeightsFile back = load_weights(path);
    CHECK(back.descriptor == wf.descriptor);
    CHECK(back.tensors.size() == 2);
    CHECK(back.tensors.at("n0.w") == t);

    auto bytes = read_file(path);
    bytes[0] = 'x';
    write_file(path, bytes);
    CHECK_THROWS_AS(load_weights(path), Error);
    bytes[0] = 'D';
    bytes.push_back(0);
    write_file(path, bytes);
    CHECK_THROWS_AS(load_weights(path), Error);
    std::filesystem::remove(path);
}

TEST_CASE("descriptor round-trips through the registry") {
    ModelGraph g = build_model("res-unet", 0.5);
    std::string desc = graph_descriptor(g);
    CHECK(desc == "arch=res-unet width_mult=0.5");
    ModelGraph back = model_from_descriptor(desc);
    CHECK(back.name == g.name);
    CHECK(back.layers.size() == g.layers.size());
    CHECK_THROWS_AS(model_from_descriptor("arch=nope width_mult=1"), Error);
    CHECK_THROWS_AS(model_from_descriptor("width_mult=1"), Error);
    CHECK_THROWS_AS(model_from_descriptor("arch=dncnn bogus=2"), Error);
}

TEST_CASE("forward/backward full-graph gradients") {
    ModelGraph g = tiny_graph();
    Rng rng(21);
    auto params = init_params<double>(g, 3, rng);
    Tensor4<double> x(2, 3, 6, 6);
    for (double& v : x.v) v = rng.normal(0.0, 1.0);

    auto clone = params;
    ForwardTrace<double> trace;
    Tensor4<double> out = forward(g, x, clone, Mode::train, &trace);
    Tensor4<double> dir(out.n, out.c, out.h, out.w);
    Rng drng(22);
    for (double& v : dir.v) v = drng.normal(0.0, 1.0 / double(dir.v.size()));
    auto grads = backward(g, x, trace, clone, dir);

    for (const char* name : {"n0.w", "n0.b", "n1.scale", "n1.shift", "n3.w"}) {
        Tensor4<double>& p = params.at(name);
        const Tensor4<double>& ana = grads.at(name);
        Rng prng(33);
        double worst = 0, scale = 1;
        for (int probe = 0; probe < 10; ++probe) {
            size_t i = prng.below(p.v.size());
            double orig = p.v[i];
            auto eval = [&](double v) {
                p.v[i] = v;
                auto tmp = params;
                Tensor4<double> o = forward(g, x, tmp, Mode::train);
                double s = 0;
                for (size_t k = 0; k < o.v.size(); ++k) s += o.v[k] * dir.v[k];
                return s;
            };
            double h = 1e-5;
            double num = (eval(orig + h) - eval(orig - h)) / (2 * h);
            p.v[i] = orig;
            worst = std::max(worst, std::abs(num - double(ana.v[i])));
            scale = std::max({scale, std::abs(num), std::abs(double(ana.v[i]))});
        }
        CHECK(worst / scale < 1e-7);
    }
}

TEST_CASE("batchnorm running stats update only in train mode") {
    ModelGraph g = tiny_graph();
    Rng rng(5);
    auto params = init_params<float>(g, 3, rng);
    Tensor4<float> x(1, 3, 4, 4);
    for (float& v : x.v) v = float(rng.normal(0.0, 1.0));
    auto before = params.at("n1.mean");
    forward(g, x, params, Mode::infer);
    CHECK(params.at("n1.mean") == before);
    forward(g, x, params, Mode::train);
    CHECK(params.at("n1.mean").v != before.v);
}
