#include "lfsr/metrics.hpp"

#include "lfsr/error.hpp"
#include "lfsr/parallel.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace lfsr {
namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;

std::vector<double> gaussian_1d() {
    std::vector<double> g(kWindow);
    double total = 0.0;
    for (int i = 0; i < kWindow; ++i) {
        const double d = i - kWindow / 2;
        g[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * kSigma * kSigma));
        total += g[static_cast<std::size_t>(i)];
    }
    for (double& v : g) v /= total;
    return g;
}

// Valid-region separable filtering of an h x w double image.
std::vector<double> filter_valid(const std::vector<double>& img, Index h, Index w, const std::vector<double>& g) {
    const Index oh = h - kWindow + 1, ow = w - kWindow + 1;
    std::vector<double> rows(static_cast<std::size_t>(h * ow));
    for (Index y = 0; y < h; ++y)
        for (Index x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int k = 0; k < kWindow; ++k) s += g[static_cast<std::size_t>(k)] * img[static_cast<std::size_t>(y * w + x + k)];
            rows[static_cast<std::size_t>(y * ow + x)] = s;
        }
    std::vector<double> out(static_cast<std::size_t>(oh * ow));
    for (Index y = 0; y < oh; ++y)
        for (Index x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int k = 0; k < kWindow; ++k) s += g[static_cast<std::size_t>(k)] * rows[static_cast<std::size_t>((y + k) * ow + x)];
            out[static_cast<std::size_t>(y * ow + x)] = s;
        }
    return out;
}

std::pair<Index, Index> image_dims(const Tensor& t) {
    const Shape& s = t.shape();
    require(s.size() == 2 || (s.size() == 3 && s[2] == 1), "SSIM expects a single-channel image, got " + shape_string(s));
    return {s[0], s[1]};
}

std::string number(double v) {
    if (std::isnan(v)) return "";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os << std::setprecision(10) << v;
    return os.str();
}

nlohmann::json json_number(double v) {
    if (std::isnan(v)) return nullptr;
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

} // namespace

double mse(const Tensor& a, const Tensor& b) {
    require(a.shape() == b.shape(), "metric inputs differ in shape: " + shape_string(a.shape()) + " vs " +
                                        shape_string(b.shape()));
    require(a.size() > 0, "metric inputs are empty");
    double s = 0.0;
    for (Index i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - b[i];
        s += d * d;
    }
    return s / static_cast<double>(a.size());
}

double psnr(const Tensor& a, const Tensor& b, double peak) {
    const double e = mse(a, b);
    if (e == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / e);
}

double ssim(const Tensor& a, const Tensor& b) {
    require(a.shape() == b.shape(), "SSIM inputs differ in shape");
    const auto [h, w] = image_dims(a);
    require(h >= kWindow && w >= kWindow, "image smaller than the 11x11 SSIM window");
    const auto n = static_cast<std::size_t>(h * w);
    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = a[static_cast<Index>(i)];
        y[i] = b[static_cast<Index>(i)];
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }
    const std::vector<double> g = gaussian_1d();
    const auto mx = filter_valid(x, h, w, g), my = filter_valid(y, h, w, g);
    const auto sxx = filter_valid(xx, h, w, g), syy = filter_valid(yy, h, w, g), sxy = filter_valid(xy, h, w, g);
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    double total = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
        const double va = sxx[i] - mx[i] * mx[i];
        const double vb = syy[i] - my[i] * my[i];
        const double cov = sxy[i] - mx[i] * my[i];
        total += ((2 * mx[i] * my[i] + c1) * (2 * cov + c2)) /
                 ((mx[i] * mx[i] + my[i] * my[i] + c1) * (va + vb + c2));
    }
    return total / static_cast<double>(mx.size());
}

std::vector<bool> ssr_mask(Index angular_rho, Index angular_tau) {
    require(angular_rho == 9 && angular_tau == 9, "the SSR protocol expects a 9x9 angular grid");
    std::vector<bool> m(81, false);
    for (Index r = 1; r < 8; ++r)
        for (Index t = 1; t < 8; ++t) m[static_cast<std::size_t>(r * 9 + t)] = true;
    return m;
}

std::vector<bool> asr_mask(Index angular_rho, Index angular_tau) {
    require(angular_rho % 2 == 1 && angular_tau % 2 == 1, "the ASR protocol expects odd angular extents");
    std::vector<bool> m(static_cast<std::size_t>(angular_rho * angular_tau));
    for (Index r = 0; r < angular_rho; ++r)
        for (Index t = 0; t < angular_tau; ++t) m[static_cast<std::size_t>(r * angular_tau + t)] = r % 2 == 1 || t % 2 == 1;
    return m;
}

std::size_t MetricReport::masked_count() const {
    std::size_t n = 0;
    for (bool b : mask) n += b ? 1 : 0;
    return n;
}

nlohmann::json MetricReport::to_json() const {
    nlohmann::json psnr_grid = nlohmann::json::array(), ssim_grid = nlohmann::json::array(),
                   mask_grid = nlohmann::json::array();
    for (Index r = 0; r < angular_rho; ++r) {
        nlohmann::json pr = nlohmann::json::array(), sr = nlohmann::json::array(), mr = nlohmann::json::array();
        for (Index t = 0; t < angular_tau; ++t) {
            const auto i = static_cast<std::size_t>(r * angular_tau + t);
            pr.push_back(json_number(psnr[i]));
            sr.push_back(json_number(ssim[i]));
            mr.push_back(mask[i] ? 1 : 0);
        }
        psnr_grid.push_back(pr);
        ssim_grid.push_back(sr);
        mask_grid.push_back(mr);
    }
    return {{"protocol", protocol},
            {"channel", channel},
            {"peak", 1.0},
            {"angular", {angular_rho, angular_tau}},
            {"views", masked_count()},
            {"grid", {{"psnr", psnr_grid}, {"ssim", ssim_grid}}},
            {"mask", mask_grid},
            {"means", {{"psnr", json_number(mean_psnr)}, {"ssim", json_number(mean_ssim)},
                       {"pooled_psnr", json_number(pooled_psnr)}}}};
}

std::string MetricReport::csv_header() { return "label,protocol,channel,views,mean_psnr,mean_ssim,pooled_psnr"; }

std::string MetricReport::csv_row(const std::string& label) const {
    std::ostringstream os;
    os << label << ',' << protocol << ',' << channel << ',' << masked_count() << ',' << number(mean_psnr) << ','
       << number(mean_ssim) << ',' << number(pooled_psnr);
    return os.str();
}

MetricReport evaluate_views(const LightField4D& pred, const LightField4D& gt, const std::vector<bool>& mask,
                            const std::string& protocol) {
    require(pred.data().shape() == gt.data().shape(), "prediction and ground truth differ in shape: " +
                                                          shape_string(pred.data().shape()) + " vs " +
                                                          shape_string(gt.data().shape()));
    const Index AR = gt.angular_rho(), AT = gt.angular_tau();
    require(mask.size() == static_cast<std::size_t>(AR * AT), "mask size does not match the angular grid");
    const LightField4D py = clip_unit(luma(pred)), gy = clip_unit(luma(gt));
    MetricReport rep;
    rep.protocol = protocol;
    rep.angular_rho = AR;
    rep.angular_tau = AT;
    rep.mask = mask;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    rep.psnr.assign(mask.size(), nan);
    rep.ssim.assign(mask.size(), nan);
    std::vector<double> errors(mask.size(), 0.0);
    parallel_for(mask.size(), [&](std::size_t i) {
        if (!mask[i]) return;
        const ViewIndex v{static_cast<Index>(i) / AT, static_cast<Index>(i) % AT};
        const Tensor a = extract_sai(py, v), b = extract_sai(gy, v);
        errors[i] = mse(a, b);
        rep.psnr[i] = psnr(a, b);
        rep.ssim[i] = ssim(a, b);
    });
    double sp = 0.0, ss = 0.0, se = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        sp += rep.psnr[i];
        ss += rep.ssim[i];
        se += errors[i];
        ++n;
    }
    require(n > 0, "mask selects no views");
    rep.mean_psnr = sp / static_cast<double>(n);
    rep.mean_ssim = ss / static_cast<double>(n);
    const double pooled = se / static_cast<double>(n);
    rep.pooled_psnr = pooled == 0.0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(1.0 / pooled);
    return rep;
}

MetricReport eval_ssr(const LightField4D& pred, const LightField4D& gt) {
    require(gt.angular_rho() == 9 && gt.angular_tau() == 9, "SSR evaluation expects 9x9 light fields");
    return evaluate_views(pred, gt, ssr_mask(9, 9), "ssr-central-7x7");
}

MetricReport eval_asr(const LightField4D& pred, const LightField4D& gt) {
    require(gt.angular_rho() == 9 && gt.angular_tau() == 9, "ASR evaluation expects 9x9 light fields");
    return evaluate_views(pred, gt, asr_mask(9, 9), "asr-novel-56");
}

MetricReport eval_all(const LightField4D& pred, const LightField4D& gt) {
    return evaluate_views(pred, gt, std::vector<bool>(static_cast<std::size_t>(gt.angular_rho() * gt.angular_tau()), true),
                          "all-views");
}

} // namespace lfsr
