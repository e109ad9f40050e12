#pragma once

#include <string>
#include <vector>

#include "ifc/image.hpp"

namespace ifc {

// 10*log10(255^2 / MSE) over all channels; +infinity when images are equal.
double psnr(const RgbImage& a, const RgbImage& b);
double psnr(const PlaneImage& a, const PlaneImage& b);

// Mean local SSIM, Gaussian window 11 sigma 1.5, K1=0.01 K2=0.03 L=255,
// valid-placement windows, per channel then averaged. Dims must be >= 11.
double ssim(const RgbImage& a, const RgbImage& b);
double ssim(const PlaneImage& a, const PlaneImage& b);

// ||a - b||_2 / ||b||_2 with b the reference.
double nrmse(const RgbImage& a, const RgbImage& b);
double nrmse(const PlaneImage& a, const PlaneImage& b);

struct MetricRow {
    std::string label;
    double ssim = 0;
    double psnr = 0;
    double nrmse = 0;
    long n = 1;
    long psnr_inf = 0;  // lossless samples excluded from the PSNR mean
};

// Arithmetic mean per metric; +inf PSNR samples are excluded from the PSNR
// mean and counted in psnr_inf.
MetricRow aggregate(const std::vector<MetricRow>& rows, const std::string& label);

// Rows ordered by SSIM descending in both renderings.
std::string render_csv(std::vector<MetricRow> rows);
std::string render_table(std::vector<MetricRow> rows);

}  // namespace ifc
