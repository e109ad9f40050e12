#include <cmath>
#include <limits>

#include "doctest.h"
#include "ifc/entropy.hpp"
#include "ifc/metrics.hpp"
#include "ifc/synthetic.hpp"
#include "ifc/util.hpp"

using namespace ifc;

namespace {

// Brute-force references, written blind to the library implementation: direct
// per-window accumulation with a non-separable kernel.
double psnr_oracle(const RgbImage& a, const RgbImage& b) {
    double se = 0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        double d = double(a.data[i]) - double(b.data[i]);
        se += d * d;
    }
    if (se == 0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(255.0 * 255.0 / (se / double(a.data.size())));
}

double nrmse_oracle(const RgbImage& a, const RgbImage& b) {
    double num = 0, den = 0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        double d = double(a.data[i]) - double(b.data[i]);
        num += d * d;
        den += double(b.data[i]) * double(b.data[i]);
    }
    return std::sqrt(num) / std::sqrt(den);
}

double ssim_plane_oracle(const std::vector<double>& a, const std::vector<double>& b, int w,
                         int h) {
    double kernel[11][11], ksum = 0;
    for (int i = 0; i < 11; ++i)
        for (int j = 0; j < 11; ++j) {
            double d2 = double((i - 5) * (i - 5) + (j - 5) * (j - 5));
            kernel[i][j] = std::exp(-d2 / (2.0 * 1.5 * 1.5));
            ksum += kernel[i][j];
        }
    for (auto& row : kernel)
        for (double& v : row) v /= ksum;
    const double c1 = (0.01 * 255) * (0.01 * 255), c2 = (0.03 * 255) * (0.03 * 255);
    double total = 0;
    long windows = 0;
    for (int y = 0; y + 11 <= h; ++y)
        for (int x = 0; x + 11 <= w; ++x) {
            double mua = 0, mub = 0;
            for (int i = 0; i < 11; ++i)
                for (int j = 0; j < 11; ++j) {
                    mua += kernel[i][j] * a[size_t(y + i) * w + x + j];
                    mub += kernel[i][j] * b[size_t(y + i) * w + x + j];
                }
            double va = 0, vb = 0, cov = 0;
            for (int i = 0; i < 11; ++i)
                for (int j = 0; j < 11; ++j) {
                    double da = a[size_t(y + i) * w + x + j] - mua;
                    double db = b[size_t(y + i) * w + x + j] - mub;
                    va += kernel[i][j] * da * da;
                    vb += kernel[i][j] * db * db;
                    cov += kernel[i][j] * da * db;
                }
            total += ((2 * mua * mub + c1) * (2 * cov + c2)) /
                     ((mua * mua + mub * mub + c1) * (va + vb + c2));
            ++windows;
        }
    return total / double(windows);
}

double ssim_oracle(const RgbImage& a, const RgbImage& b) {
    double acc = 0;
    for (int c = 0; c < 3; ++c) {
        std::vector<double> pa(size_t(a.width) * a.height), pb(pa.size());
        for (int y = 0; y < a.height; ++y)
            for (int x = 0; x < a.width; ++x) {
                pa[size_t(y) * a.width + x] = a.at(x, y, c);
                pb[size_t(y) * a.width + x] = b.at(x, y, c);
            }
        acc += ssim_plane_oracle(pa, pb, a.width, a.height);
    }
    return acc / 3.0;
}

}  // namespace

TEST_CASE("metrics agree with brute-force references on codec pairs") {
    for (uint64_t seed : {1, 2, 3}) {
        RgbImage original = synthetic_frame(48, 40, seed);
        RgbImage decoded = decode_image(encode_image(original, QualityFactor(10 + 20 * int(seed))));
        CHECK(std::abs(psnr(decoded, original) - psnr_oracle(decoded, original)) < 1e-9);
        CHECK(std::abs(nrmse(decoded, original) - nrmse_oracle(decoded, original)) < 1e-9);
        CHECK(std::abs(ssim(decoded, original) - ssim_oracle(decoded, original)) < 1e-6);
    }
}

TEST_CASE("identical images are lossless by every metric") {
    RgbImage img = synthetic_frame(32, 24, 5);
    CHECK(std::isinf(psnr(img, img)));
    CHECK(ssim(img, img) == doctest::Approx(1.0));
    CHECK(nrmse(img, img) == 0.0);
}

TEST_CASE("metric error cases") {
    RgbImage a = synthetic_frame(32, 24, 1), b = synthetic_frame(24, 32, 1);
    CHECK_THROWS_AS(psnr(a, b), Error);
    RgbImage small_a(8, 8), small_b(8, 8);
    CHECK_THROWS_AS(ssim(small_a, small_b), Error);  // below the window size
    RgbImage zero(16, 16);
    RgbImage other = synthetic_frame(16, 16, 2);
    CHECK_THROWS_AS(nrmse(other, zero), Error);  // all-zero reference
    CHECK_NOTHROW(nrmse(zero, other));
}

TEST_CASE("plane overloads match rgb behaviour") {
    PlaneImage a(16, 16), b(16, 16);
    for (int i = 0; i < 256; ++i) {
        a.data[i] = uint8_t(i);
        b.data[i] = uint8_t(i < 128 ? i : i - 1);
    }
    CHECK(psnr(a, b) > 40.0);
    CHECK(ssim(a, b) > 0.99);
    CHECK(nrmse(a, b) < 0.01);
}

TEST_CASE("aggregate weights rows and excludes lossless psnr samples") {
    std::vector<MetricRow> rows = {
        {"a", 0.9, 30.0, 0.1, 1, 0},
        {"b", 0.7, 20.0, 0.3, 3, 0},
    };
    MetricRow agg = aggregate(rows, "both");
    CHECK(agg.n == 4);
    CHECK(agg.ssim == doctest::Approx((0.9 + 3 * 0.7) / 4));
    CHECK(agg.psnr == doctest::Approx((30.0 + 3 * 20.0) / 4));

    double inf = std::numeric_limits<double>::infinity();
    rows.push_back({"c", 1.0, inf, 0.0, 1, 0});
    MetricRow agg2 = aggregate(rows, "with-inf");
    CHECK(agg2.n == 5);
    CHECK(agg2.psnr_inf == 1);
    CHECK(agg2.psnr == doctest::Approx((30.0 + 3 * 20.0) / 4));  // inf sample excluded

    std::vector<MetricRow> justinf = {{"x", 1.0, inf, 0.0, 1, 0}};
    CHECK(std::isinf(aggregate(justinf, "all-inf").psnr));

    // nested aggregation keeps the exclusion bookkeeping
    std::vector<MetricRow> nested = {agg2, {"d", 0.5, 10.0, 0.5, 1, 0}};
    MetricRow agg3 = aggregate(nested, "nested");
    CHECK(agg3.n == 6);
    CHECK(agg3.psnr_inf == 1);
    CHECK(agg3.psnr == doctest::Approx((30.0 + 3 * 20.0 + 10.0) / 5));

    CHECK_THROWS_AS(aggregate({}, "empty"), Error);
}

TEST_CASE("renderings sort by ssim descending") {
    std::vector<MetricRow> rows = {
        {"worst", 0.5, 20.0, 0.3, 1, 0},
        {"best", 0.9, 35.0, 0.1, 1, 0},
        {"mid,comma", 0.7, 30.0, 0.2, 1, 0},
    };
    std::string csv = render_csv(rows);
    size_t best = csv.find("best"), mid = csv.find("mid;comma"), worst = csv.find("worst");
    CHECK(best != std::string::npos);
    CHECK(mid != std::string::npos);
    CHECK(best < mid);
    CHECK(mid < worst);
    CHECK(csv.rfind("label,ssim,psnr,nrmse,n", 0) == 0);

    std::string table = render_table(rows);
    CHECK(table.find("best") < table.find("worst"));

    double inf = std::numeric_limits<double>::infinity();
    std::string with_inf = render_csv({{"x", 1.0, inf, 0.0, 1, 0}});
    CHECK(with_inf.find("inf") != std::string::npos);
    std::string foot = render_table({{"x", 1.0, 30.0, 0.0, 4, 2}});
    CHECK(foot.find("lossless") != std::string::npos);
}
