#pragma once

#include <string>
#include <vector>

#include "dfd/filters.hpp"
#include "dfd/homography.hpp"
#include "dfd/optics.hpp"

namespace dfd {

/// Per-pixel floating-point operation counts of the depth stage, plus
/// informational counts for the stages outside the budget scope. Multiply,
/// add, subtract and divide each count as 1; comparisons, index arithmetic
/// and masking are free. Counts are closed-form per pixel and independent
/// of the execution schedule.
struct FlopReport {
    double derivative_per_px = 0.0;  // image difference + Laplacian average
    double aggregation_per_px = 0.0; // windowed depth equation
    double confidence_per_px = 0.0;  // squared derivative + window sum
    double preprocess_per_px = 0.0;  // informational: high-pass + denoise
    double warp_per_px = 0.0;        // informational: alignment resampling
    size_t pixels = 0;

    double depth_stage_per_px() const {
        return derivative_per_px + aggregation_per_px + confidence_per_px;
    }
    std::string to_text(double budget = 600.0) const;
};

struct PipelineParams {
    int highpass_size = 21;   // K
    double denoise_std = 11.0; // Gaussian std in pixels
    int window = 21;          // L
    double a = 0.0;           // calibrated depth-equation constants
    double b = 0.0;
    double d = 0.0;           // magnification-term constant of the legacy estimator
    Homography h;             // maps sensor-2 pixel coords into sensor-1's grid
    double sparsity = 0.0;    // fraction of least-confident pixels to drop
    double z_min = 0.0;       // physical plausibility window, meters
    double z_max = 10.0;
    double lap_eps_scale = 1e-6; // |lap| floor as fraction of input range (pitch-corrected)
    int border_margin = 21;   // pixels masked near the border
    LaplacianStencil stencil = LaplacianStencil::FivePoint;
    bool window_summed_confidence = true; // false keeps pointwise Is^2

    void validate() const;
};

struct DepthResult {
    ScalarImage depth;       // meters
    ScalarImage confidence;  // squared derivative, arbitrary units
    MaskImage valid;
};

/// Derivative maps shared by the depth estimators. Invalid pixels carry
/// zeros in both maps.
struct DerivativeField {
    ScalarImage is;   // difference of the aligned pair
    ScalarImage lap;  // Laplacian of their mean, per square meter of pitch
    MaskImage valid;
    double source_range = 0.0; // dynamic range of the preprocessed inputs
};

struct DepthLimits {
    double z_min = 0.0;
    double z_max = 10.0;
    double lap_eps = 0.0; // absolute; 0 disables the floor
};

ScalarImage grayscale_average(const std::vector<ScalarImage>& channels);

/// Background-light removal: img minus its K x K box mean.
ScalarImage highpass(const ScalarImage& img, int k, FlopReport* flops = nullptr);

/// Gaussian smoothing; std 0 is the identity.
ScalarImage denoise(const ScalarImage& img, double g_std, FlopReport* flops = nullptr);

/// Difference and Laplacian of the aligned pair: is = i1(h(x)) - i2(x),
/// lap = Laplacian of (i1(h(x)) + i2(x)) / 2. Pixels whose warp sample or
/// stencil support leaves the grid are masked and zeroed.
DerivativeField approx_derivatives(const ScalarImage& i1, const ScalarImage& i2,
                                   const Homography& h,
                                   LaplacianStencil stencil = LaplacianStencil::FivePoint,
                                   FlopReport* flops = nullptr);

/// Per-pixel closed-form depth. Computed as (a*lap)*t / t^2 with
/// t = b*lap + is, which is the window form with a 1x1 window; confidence
/// is is^2. Degenerate or non-physical pixels are masked, never thrown.
DepthResult depth_pointwise(const DerivativeField& f, double a, double b,
                            const DepthLimits& limits = {}, FlopReport* flops = nullptr);

/// Windowed aggregation with an L x L box on both the numerator and the
/// denominator; window-summed confidence unless pointwise is requested.
DepthResult depth_windowed(const DerivativeField& f, double a, double b, int window,
                           const DepthLimits& limits = {},
                           bool window_summed_confidence = true,
                           FlopReport* flops = nullptr);

/// Derivative maps of the legacy estimator on the un-rescaled pair: the
/// raw difference gains a radial magnification term d*(x*Ix + y*Iy) with
/// x, y in meters from the principal point and Ix, Iy central differences
/// of the pair mean.
DerivativeField legacy_derivatives(const ScalarImage& i1, const ScalarImage& i2, double d,
                                   LaplacianStencil stencil = LaplacianStencil::FivePoint);

/// Legacy estimator; same aggregation machinery as depth_windowed.
DepthResult depth_old(const ScalarImage& i1, const ScalarImage& i2, double a, double b,
                      double d, int window = 1,
                      LaplacianStencil stencil = LaplacianStencil::FivePoint,
                      const DepthLimits& limits = {});

struct SparsityOutcome {
    DepthResult result;
    double threshold = 0.0; // confidence of the strongest removed pixel
    size_t removed = 0;
};

/// Masks exactly floor(target_sparsity * valid_count) of the least-confident
/// valid pixels; ties resolve in row-major pixel order.
SparsityOutcome sparsity_filter(const DepthResult& res, double target_sparsity);

struct PipelineOutput {
    DepthResult result;
    FlopReport flops;
    double sparsity_threshold = 0.0;
};

/// Full path: grayscale, high-pass, denoise, align + differentiate,
/// windowed depth, confidence sparsity filter.
PipelineOutput run_pipeline(const std::vector<ScalarImage>& i1_channels,
                            const std::vector<ScalarImage>& i2_channels,
                            const PipelineParams& params);

/// Magnification alignment of sensor 1 onto sensor 2's grid for a rig:
/// pure scaling by s1/s2 about the principal point.
Homography alignment_homography(const OpticsConfig& optics, int width, int height);

} // namespace dfd
