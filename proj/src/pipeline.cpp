#include "dfd/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dfd {

namespace {

void check_odd(int v, const char* name) {
    if (v < 1 || v % 2 == 0)
        throw std::invalid_argument(std::string(name) + " must be odd and >= 1");
}

double box_sum_flops_per_px(int size) {
    // Two sliding passes, 2 adds per pixel each; a 1x1 window is free.
    return size > 1 ? 4.0 : 0.0;
}

} // namespace

void PipelineParams::validate() const {
    check_odd(highpass_size, "pipeline.highpass_size");
    check_odd(window, "pipeline.window");
    if (denoise_std < 0.0)
        throw std::invalid_argument("pipeline.denoise_std must be >= 0");
    if (a == 0.0)
        throw std::invalid_argument("pipeline.a must be nonzero (calibrate first)");
    if (sparsity < 0.0 || sparsity >= 1.0)
        throw std::invalid_argument("pipeline.sparsity must be in [0, 1)");
    if (!h.invertible())
        throw std::invalid_argument("pipeline.h is not invertible");
}

std::string FlopReport::to_text(double budget) const {
    std::ostringstream out;
    out << "scope=depth_stage\n";
    out << "rules=multiply, add, subtract and divide count 1 each; comparisons, index "
           "arithmetic, masking and the sparsity sort are free; box sums run as two "
           "sliding passes at 2 adds per pixel each; preprocessing and alignment are "
           "reported for information but sit outside the budget scope\n";
    out << "pixels=" << pixels << "\n";
    char buf[64];
    auto line = [&](const char* k, double v) {
        std::snprintf(buf, sizeof buf, "%s=%.3f\n", k, v);
        out << buf;
    };
    line("derivative_per_px", derivative_per_px);
    line("aggregation_per_px", aggregation_per_px);
    line("confidence_per_px", confidence_per_px);
    line("depth_stage_total_per_px", depth_stage_per_px());
    line("budget_per_px", budget);
    out << "within_budget=" << (depth_stage_per_px() <= budget ? "yes" : "no") << "\n";
    line("informational_preprocess_per_px", preprocess_per_px);
    line("informational_warp_per_px", warp_per_px);
    return out.str();
}

ScalarImage grayscale_average(const std::vector<ScalarImage>& channels) {
    if (channels.empty()) throw std::invalid_argument("grayscale: no channels");
    ScalarImage out = channels[0];
    for (size_t c = 1; c < channels.size(); ++c) {
        if (!channels[c].same_dims(out))
            throw std::invalid_argument("grayscale: channel dimensions differ");
        for (size_t i = 0; i < out.size(); ++i) out[i] += channels[c][i];
    }
    if (channels.size() > 1)
        for (size_t i = 0; i < out.size(); ++i) out[i] /= double(channels.size());
    return out;
}

ScalarImage highpass(const ScalarImage& img, int k, FlopReport* flops) {
    check_odd(k, "highpass size");
    ScalarImage mean = box_filter(img, k);
    ScalarImage out(img.width(), img.height(), 0.0, img.pitch());
    for (size_t i = 0; i < img.size(); ++i) out[i] = img[i] - mean[i];
    if (flops) // box passes + normalization + subtraction
        flops->preprocess_per_px += box_sum_flops_per_px(k) + (k > 1 ? 1.0 : 0.0) + 1.0;
    return out;
}

ScalarImage denoise(const ScalarImage& img, double g_std, FlopReport* flops) {
    if (g_std < 0.0) throw std::invalid_argument("denoise: std must be >= 0");
    if (g_std == 0.0) return img;
    Kernel g = make_gaussian_kernel(g_std);
    if (flops) {
        const double taps = 2.0 * g.radius + 1.0;
        flops->preprocess_per_px += 2.0 * (taps + (taps - 1.0)); // two 1D passes
    }
    return convolve(img, g);
}

DerivativeField approx_derivatives(const ScalarImage& i1, const ScalarImage& i2,
                                   const Homography& h, LaplacianStencil stencil,
                                   FlopReport* flops) {
    if (!i1.same_dims(i2))
        throw std::invalid_argument("approx_derivatives: image dimensions differ");
    WarpResult w1 = warp(i1, h);

    const int w = i2.width(), hgt = i2.height();
    ScalarImage sum(w, hgt, 0.0, i2.pitch());
    DerivativeField f;
    f.is = ScalarImage(w, hgt, 0.0, i2.pitch());
    for (int y = 0; y < hgt; ++y)
        for (int x = 0; x < w; ++x) {
            if (!w1.valid.at(x, y)) continue;
            f.is.at(x, y) = w1.image.at(x, y) - i2.at(x, y);
            sum.at(x, y) = 0.5 * (w1.image.at(x, y) + i2.at(x, y));
        }

    ScalarImage lap_full = laplacian(sum, stencil);

    // A pixel is valid only if the whole stencil support was valid, so the
    // Laplacian never reads zero-filled samples.
    f.valid = MaskImage(w, hgt, false);
    f.lap = ScalarImage(w, hgt, 0.0, i2.pitch());
    for (int y = 1; y < hgt - 1; ++y)
        for (int x = 1; x < w - 1; ++x) {
            bool ok = true;
            for (int dy = -1; dy <= 1 && ok; ++dy)
                for (int dx = -1; dx <= 1 && ok; ++dx)
                    ok = w1.valid.at(x + dx, y + dy);
            if (!ok) continue;
            f.valid.set(x, y, true);
            f.lap.at(x, y) = lap_full.at(x, y);
        }
    for (int y = 0; y < hgt; ++y)
        for (int x = 0; x < w; ++x)
            if (!f.valid.at(x, y)) {
                f.is.at(x, y) = 0.0;
                f.lap.at(x, y) = 0.0;
            }

    const double lo = std::min(image_min(w1.image), image_min(i2));
    const double hi = std::max(image_max(w1.image), image_max(i2));
    f.source_range = hi - lo;

    if (flops) {
        // difference (1), mean (1 add + 1 mul), stencil taps, scale
        const double lap_ops = stencil == LaplacianStencil::FivePoint ? 6.0 : 11.0;
        flops->derivative_per_px += 1.0 + 2.0 + lap_ops;
        flops->warp_per_px += 18.0; // projective map + bilinear blend
        flops->pixels = size_t(w) * hgt;
    }
    return f;
}

namespace {

// Shared post-division masking: finite, inside the plausibility window.
void finalize_depth(DepthResult& r, const ScalarImage& num, const ScalarImage& den,
                    double den_eps, const DepthLimits& lim) {
    for (int y = 0; y < r.depth.height(); ++y)
        for (int x = 0; x < r.depth.width(); ++x) {
            if (!r.valid.at(x, y)) {
                r.depth.at(x, y) = 0.0;
                continue;
            }
            if (!(std::abs(den.at(x, y)) > den_eps)) {
                r.valid.set(x, y, false);
                r.depth.at(x, y) = 0.0;
                continue;
            }
            const double z = num.at(x, y) / den.at(x, y);
            if (!std::isfinite(z) || z <= lim.z_min || z > lim.z_max) {
                r.valid.set(x, y, false);
                r.depth.at(x, y) = 0.0;
                continue;
            }
            r.depth.at(x, y) = z;
        }
}

DepthResult depth_from_ratio_maps(const ScalarImage& is, const ScalarImage& lap,
                                  const MaskImage& valid, double a, double b, int window,
                                  const DepthLimits& limits, bool window_summed_confidence,
                                  FlopReport* flops) {
    check_odd(window, "window");
    const int w = is.width(), h = is.height();
    ScalarImage num_pre(w, h, 0.0, is.pitch());
    ScalarImage den_pre(w, h, 0.0, is.pitch());
    DepthResult r{ScalarImage(w, h, 0.0, is.pitch()), ScalarImage(w, h, 0.0, is.pitch()),
                  valid};

    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double t = b * lap.at(x, y) + is.at(x, y);
            num_pre.at(x, y) = (a * lap.at(x, y)) * t;
            den_pre.at(x, y) = t * t;
            r.confidence.at(x, y) = is.at(x, y) * is.at(x, y);
        }
    // Pointwise pixels with a degenerate Laplacian carry no depth claim.
    if (limits.lap_eps > 0.0 && window == 1)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if (std::abs(lap.at(x, y)) < limits.lap_eps) r.valid.set(x, y, false);

    ScalarImage num = window > 1 ? box_sum(num_pre, window) : num_pre;
    ScalarImage den = window > 1 ? box_sum(den_pre, window) : den_pre;
    if (window_summed_confidence && window > 1)
        r.confidence = box_sum(r.confidence, window);

    const double den_eps = 1e-12 * std::max(image_max(den), 0.0);
    finalize_depth(r, num, den, den_eps, limits);

    if (flops) {
        flops->aggregation_per_px += 2.0 /*t*/ + 2.0 /*num*/ + 1.0 /*den*/ +
                                     2.0 * box_sum_flops_per_px(window) + 1.0 /*divide*/;
        flops->confidence_per_px += 1.0 +
                                    (window_summed_confidence ? box_sum_flops_per_px(window)
                                                              : 0.0);
    }
    return r;
}

} // namespace

DepthResult depth_pointwise(const DerivativeField& f, double a, double b,
                            const DepthLimits& limits, FlopReport* flops) {
    return depth_from_ratio_maps(f.is, f.lap, f.valid, a, b, 1, limits, true, flops);
}

DepthResult depth_windowed(const DerivativeField& f, double a, double b, int window,
                           const DepthLimits& limits, bool window_summed_confidence,
                           FlopReport* flops) {
    return depth_from_ratio_maps(f.is, f.lap, f.valid, a, b, window, limits,
                                 window_summed_confidence, flops);
}

DerivativeField legacy_derivatives(const ScalarImage& i1, const ScalarImage& i2, double d,
                                   LaplacianStencil stencil) {
    if (!i1.same_dims(i2)) throw std::invalid_argument("legacy_derivatives: dimensions differ");
    const int w = i1.width(), h = i1.height();
    const double p = i1.pitch();
    ScalarImage avg(w, h, 0.0, p);
    ScalarImage is(w, h, 0.0, p);
    for (size_t i = 0; i < avg.size(); ++i) {
        avg[i] = 0.5 * (i1[i] + i2[i]);
        is[i] = i1[i] - i2[i];
    }
    ScalarImage lap = laplacian(avg, stencil);

    DerivativeField f;
    f.is = ScalarImage(w, h, 0.0, p);
    f.lap = ScalarImage(w, h, 0.0, p);
    f.valid = MaskImage(w, h, false);
    const double cx = avg.center_x(), cy = avg.center_y();
    for (int y = 1; y < h - 1; ++y)
        for (int x = 1; x < w - 1; ++x) {
            const double ix = (avg.at(x + 1, y) - avg.at(x - 1, y)) / (2.0 * p);
            const double iy = (avg.at(x, y + 1) - avg.at(x, y - 1)) / (2.0 * p);
            const double xm = (x - cx) * p, ym = (y - cy) * p;
            f.is.at(x, y) = d * (xm * ix + ym * iy) + is.at(x, y);
            f.lap.at(x, y) = lap.at(x, y);
            f.valid.set(x, y, true);
        }
    const double lo = std::min(image_min(i1), image_min(i2));
    const double hi = std::max(image_max(i1), image_max(i2));
    f.source_range = hi - lo;
    return f;
}

DepthResult depth_old(const ScalarImage& i1, const ScalarImage& i2, double a, double b,
                      double d, int window, LaplacianStencil stencil,
                      const DepthLimits& limits) {
    DerivativeField f = legacy_derivatives(i1, i2, d, stencil);
    return depth_from_ratio_maps(f.is, f.lap, f.valid, a, b, window, limits, true, nullptr);
}

SparsityOutcome sparsity_filter(const DepthResult& res, double target_sparsity) {
    if (target_sparsity < 0.0 || target_sparsity >= 1.0)
        throw std::invalid_argument("sparsity_filter: target must be in [0, 1)");
    SparsityOutcome out{res, 0.0, 0};
    if (target_sparsity == 0.0) return out;

    std::vector<std::pair<double, size_t>> order; // (confidence, row-major index)
    order.reserve(res.valid.count_valid());
    for (size_t i = 0; i < res.valid.size(); ++i)
        if (res.valid[i]) order.emplace_back(res.confidence[i], i);

    const size_t k = size_t(target_sparsity * double(order.size()));
    if (k == 0) return out;
    std::sort(order.begin(), order.end()); // pairs: ties fall back to pixel order
    for (size_t i = 0; i < k; ++i) {
        out.result.valid.set(order[i].second, false);
        out.result.depth[order[i].second] = 0.0;
    }
    out.threshold = order[k - 1].first;
    out.removed = k;
    return out;
}

Homography alignment_homography(const OpticsConfig& optics, int width, int height) {
    return Homography::scaling_about(optics.s1 / optics.s2, 0.5 * (width - 1),
                                     0.5 * (height - 1));
}

PipelineOutput run_pipeline(const std::vector<ScalarImage>& i1_channels,
                            const std::vector<ScalarImage>& i2_channels,
                            const PipelineParams& params) {
    params.validate();
    PipelineOutput out;
    FlopReport& fl = out.flops;

    ScalarImage g1 = grayscale_average(i1_channels);
    ScalarImage g2 = grayscale_average(i2_channels);
    if (!g1.same_dims(g2))
        throw std::invalid_argument("run_pipeline: image dimensions differ");

    // Preprocessing counts cover both images; they are informational only.
    g1 = denoise(highpass(g1, params.highpass_size, &fl), params.denoise_std, &fl);
    g2 = denoise(highpass(g2, params.highpass_size, &fl), params.denoise_std, &fl);

    DerivativeField f = approx_derivatives(g1, g2, params.h, params.stencil, &fl);

    DepthLimits lim;
    lim.z_min = params.z_min;
    lim.z_max = params.z_max;
    const double pitch = g1.pitch();
    lim.lap_eps = params.lap_eps_scale * f.source_range / (pitch * pitch);

    DepthResult res = depth_windowed(f, params.a, params.b, params.window, lim,
                                     params.window_summed_confidence, &fl);

    if (params.border_margin > 0) {
        const int m = params.border_margin;
        for (int y = 0; y < res.valid.height(); ++y)
            for (int x = 0; x < res.valid.width(); ++x)
                if (x < m || y < m || x >= res.valid.width() - m ||
                    y >= res.valid.height() - m)
                    res.valid.set(x, y, false);
    }

    SparsityOutcome sp = sparsity_filter(res, params.sparsity);
    out.result = std::move(sp.result);
    out.sparsity_threshold = sp.threshold;
    return out;
}

} // namespace dfd
