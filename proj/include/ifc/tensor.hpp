#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "ifc/util.hpp"

namespace ifc {

// Dense (batch, channels, height, width) tensor, row-major.
// float for production, double for oracle-grade gradient checks.
template <class S>
struct Tensor4 {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<S> v;

    Tensor4() = default;
    Tensor4(int n_, int c_, int h_, int w_) : n(n_), c(c_), h(h_), w(w_) {
        if (n < 1 || c < 1 || h < 1 || w < 1) fail("tensor dims must be >= 1");
        v.assign(size_t(n) * c * h * w, S(0));
    }

    size_t size() const { return v.size(); }
    bool same_shape(const Tensor4& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }

    S& at(int in, int ic, int iy, int ix) { return v[((size_t(in) * c + ic) * h + iy) * w + ix]; }
    S at(int in, int ic, int iy, int ix) const {
        return v[((size_t(in) * c + ic) * h + iy) * w + ix];
    }

    S* batch(int in) { return v.data() + size_t(in) * c * h * w; }
    const S* batch(int in) const { return v.data() + size_t(in) * c * h * w; }

    template <class T>
    Tensor4<T> cast() const {
        Tensor4<T> out(n, c, h, w);
        for (size_t i = 0; i < v.size(); ++i) out.v[i] = T(v[i]);
        return out;
    }

    bool operator==(const Tensor4&) const = default;
};

// Deterministic generator: one seed, one stream.
class Rng {
public:
    explicit Rng(uint64_t seed) : seed_(seed), gen_(seed) {}

    double normal(double mean, double stddev) {
        return std::normal_distribution<double>(mean, stddev)(gen_);
    }
    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(gen_); }
    uint64_t next_u64() { return gen_(); }
    // Uniform in [0, bound)
    uint64_t below(uint64_t bound) {
        return std::uniform_int_distribution<uint64_t>(0, bound - 1)(gen_);
    }
    template <class It>
    void shuffle(It first, It last) {
        std::shuffle(first, last, gen_);
    }
    // Independent substream for a named purpose.
    Rng fork(uint64_t salt) const {
        return Rng(seed_ ^ (salt * 0x9e3779b97f4a7c15ull) ^ 0x5851f42d4c957f2dull);
    }

private:
    uint64_t seed_;
    std::mt19937_64 gen_;
};

}  // namespace ifc
