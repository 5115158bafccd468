#pragma once

#include "lfsr/lightfield.hpp"
#include "lfsr/tensor.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace lfsr {

double mse(const Tensor& a, const Tensor& b);
/// 10 log10(peak^2 / MSE); +infinity when the images are identical.
double psnr(const Tensor& a, const Tensor& b, double peak = 1.0);
/// Mean SSIM over the valid region with an 11x11 Gaussian window (sigma 1.5),
/// K1 = 0.01, K2 = 0.03, peak 1. Accepts (h, w) or (h, w, 1).
double ssim(const Tensor& a, const Tensor& b);

/// Per-view metrics over an angular grid, row-major (rho, tau).
struct MetricReport {
    std::string protocol;
    Index angular_rho = 0;
    Index angular_tau = 0;
    std::vector<bool> mask;
    /// NaN where the mask is off.
    std::vector<double> psnr;
    std::vector<double> ssim;
    double mean_psnr = 0.0;
    double mean_ssim = 0.0;
    /// PSNR of the MSE averaged over the masked views; finite unless every view is exact.
    double pooled_psnr = 0.0;
    std::string channel = "Y";

    std::size_t masked_count() const;
    nlohmann::json to_json() const;
    static std::string csv_header();
    std::string csv_row(const std::string& label) const;
};

/// Central 7x7 views of a 9x9 grid.
std::vector<bool> ssr_mask(Index angular_rho, Index angular_tau);
/// Views missing after even-index decimation.
std::vector<bool> asr_mask(Index angular_rho, Index angular_tau);

/// Metrics on the clipped Y channel for every view where mask is set.
MetricReport evaluate_views(const LightField4D& pred, const LightField4D& gt, const std::vector<bool>& mask,
                            const std::string& protocol);
MetricReport eval_ssr(const LightField4D& pred, const LightField4D& gt);
MetricReport eval_asr(const LightField4D& pred, const LightField4D& gt);
/// All views.
MetricReport eval_all(const LightField4D& pred, const LightField4D& gt);

} // namespace lfsr
