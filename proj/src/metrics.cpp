#include "ifc/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "ifc/util.hpp"

namespace ifc {
namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = (0.01 * 255) * (0.01 * 255);
constexpr double kC2 = (0.03 * 255) * (0.03 * 255);

using Mat = Eigen::MatrixXd;

Eigen::Matrix<double, kWindow, 1> gaussian_kernel() {
    Eigen::Matrix<double, kWindow, 1> k;
    for (int i = 0; i < kWindow; ++i) {
        double d = i - (kWindow - 1) / 2.0;
        k(i) = std::exp(-d * d / (2.0 * kSigma * kSigma));
    }
    return k / k.sum();
}

// Separable valid-placement Gaussian filter.
Mat gauss_valid(const Mat& img) {
    static const auto k = gaussian_kernel();
    Mat rows(img.rows(), img.cols() - kWindow + 1);
    for (int j = 0; j < rows.cols(); ++j)
        rows.col(j) = img.middleCols(j, kWindow) * k;
    Mat out(img.rows() - kWindow + 1, rows.cols());
    for (int i = 0; i < out.rows(); ++i)
        out.row(i) = k.transpose() * rows.middleRows(i, kWindow);
    return out;
}

double ssim_channel(const Mat& a, const Mat& b) {
    Mat mu1 = gauss_valid(a), mu2 = gauss_valid(b);
    Mat s11 = gauss_valid(a.cwiseProduct(a)) - mu1.cwiseProduct(mu1);
    Mat s22 = gauss_valid(b.cwiseProduct(b)) - mu2.cwiseProduct(mu2);
    Mat s12 = gauss_valid(a.cwiseProduct(b)) - mu1.cwiseProduct(mu2);
    Mat num = (2.0 * mu1.cwiseProduct(mu2).array() + kC1).matrix().cwiseProduct(
        (2.0 * s12.array() + kC2).matrix());
    Mat den = (mu1.cwiseProduct(mu1).array() + mu2.cwiseProduct(mu2).array() + kC1)
                  .matrix()
                  .cwiseProduct((s11.array() + s22.array() + kC2).matrix());
    return num.cwiseQuotient(den).mean();
}

Mat channel_matrix(const RgbImage& img, int ch) {
    Mat m(img.height, img.width);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) m(y, x) = img.at(x, y, ch);
    return m;
}

Mat plane_matrix(const PlaneImage& img) {
    Mat m(img.height, img.width);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) m(y, x) = img.at(x, y);
    return m;
}

double psnr_from(double sq_err, size_t count) {
    if (sq_err == 0.0) return std::numeric_limits<double>::infinity();
    double mse = sq_err / double(count);
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double nrmse_from(double sq_err, double sq_ref) {
    if (sq_ref == 0.0) fail("reference image is all zero");
    return std::sqrt(sq_err / sq_ref);
}

template <class T>
void sq_sums(const std::vector<T>& a, const std::vector<T>& b, double& sq_err, double& sq_ref) {
    sq_err = sq_ref = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        double d = double(a[i]) - double(b[i]);
        sq_err += d * d;
        sq_ref += double(b[i]) * double(b[i]);
    }
}

std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

double psnr(const RgbImage& a, const RgbImage& b) {
    if (a.width != b.width || a.height != b.height) fail("image dimensions disagree");
    double sq_err, sq_ref;
    sq_sums(a.data, b.data, sq_err, sq_ref);
    return psnr_from(sq_err, a.data.size());
}

double psnr(const PlaneImage& a, const PlaneImage& b) {
    if (a.width != b.width || a.height != b.height) fail("image dimensions disagree");
    double sq_err, sq_ref;
    sq_sums(a.data, b.data, sq_err, sq_ref);
    return psnr_from(sq_err, a.data.size());
}

double ssim(const RgbImage& a, const RgbImage& b) {
    if (a.width != b.width || a.height != b.height) fail("image dimensions disagree");
    if (a.width < kWindow || a.height < kWindow) fail("image smaller than SSIM window");
    double sum = 0;
    for (int ch = 0; ch < 3; ++ch) sum += ssim_channel(channel_matrix(a, ch), channel_matrix(b, ch));
    return sum / 3.0;
}

double ssim(const PlaneImage& a, const PlaneImage& b) {
    if (a.width != b.width || a.height != b.height) fail("image dimensions disagree");
    if (a.width < kWindow || a.height < kWindow) fail("image smaller than SSIM window");
    return ssim_channel(plane_matrix(a), plane_matrix(b));
}

double nrmse(const RgbImage& a, const RgbImage& b) {
    if (a.width != b.width || a.height != b.height) fail("image dimensions disagree");
    double sq_err, sq_ref;
    sq_sums(a.data, b.data, sq_err, sq_ref);
    return nrmse_from(sq_err, sq_ref);
}

double nrmse(const PlaneImage& a, const PlaneImage& b) {
    if (a.width != b.width || a.height != b.height) fail("image dimensions disagree");
    double sq_err, sq_ref;
    sq_sums(a.data, b.data, sq_err, sq_ref);
    return nrmse_from(sq_err, sq_ref);
}

MetricRow aggregate(const std::vector<MetricRow>& rows, const std::string& label) {
    if (rows.empty()) fail("no rows to aggregate");
    MetricRow out;
    out.label = label;
    out.n = 0;
    double psnr_sum = 0;
    long psnr_n = 0;
    for (const MetricRow& r : rows) {
        out.ssim += r.ssim * double(r.n);
        out.nrmse += r.nrmse * double(r.n);
        out.n += r.n;
        long finite = r.n - r.psnr_inf;
        if (std::isinf(r.psnr))
            out.psnr_inf += r.n;
        else {
            psnr_sum += r.psnr * double(finite);
            psnr_n += finite;
            out.psnr_inf += r.psnr_inf;
        }
    }
    out.ssim /= double(out.n);
    out.nrmse /= double(out.n);
    out.psnr = psnr_n ? psnr_sum / double(psnr_n) : std::numeric_limits<double>::infinity();
    return out;
}

std::string render_csv(std::vector<MetricRow> rows) {
    std::stable_sort(rows.begin(), rows.end(),
                     [](const MetricRow& a, const MetricRow& b) { return a.ssim > b.ssim; });
    std::string out = "label,ssim,psnr,nrmse,n\n";
    for (const MetricRow& r : rows) {
        std::string label = r.label;
        for (char& c : label)
            if (c == ',') c = ';';
        out += label + "," + fmt(r.ssim) + "," + fmt(r.psnr) + "," + fmt(r.nrmse) + "," +
               std::to_string(r.n) + "\n";
    }
    return out;
}

std::string render_table(std::vector<MetricRow> rows) {
    std::stable_sort(rows.begin(), rows.end(),
                     [](const MetricRow& a, const MetricRow& b) { return a.ssim > b.ssim; });
    size_t width = 5;
    for (const MetricRow& r : rows) width = std::max(width, r.label.size());
    char buf[160];
    std::string out;
    std::snprintf(buf, sizeof buf, "%-*s  %10s  %10s  %10s  %6s\n", int(width), "label", "ssim",
                  "psnr", "nrmse", "n");
    out += buf;
    out += std::string(width + 44, '-') + "\n";
    for (const MetricRow& r : rows) {
        std::snprintf(buf, sizeof buf, "%-*s  %10s  %10s  %10s  %6ld\n", int(width),
                      r.label.c_str(), fmt(r.ssim).c_str(), fmt(r.psnr).c_str(),
                      fmt(r.nrmse).c_str(), r.n);
        out += buf;
        if (r.psnr_inf > 0) {
            std::snprintf(buf, sizeof buf, "%-*s  (%ld lossless sample%s excluded from psnr mean)\n",
                          int(width), "", r.psnr_inf, r.psnr_inf == 1 ? "" : "s");
            out += buf;
        }
    }
    return out;
}

}  // namespace ifc
