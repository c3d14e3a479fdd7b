#pragma once

#include "dfd/scene.hpp"

namespace dfd {

enum class RenderMethod {
    Auto,      // analytic when available, numerical otherwise
    Analytic,  // closed-form blur; Gaussian PSF + procedural texture only
    Numerical  // pinhole resampling followed by PSF convolution
};

struct RenderedPair {
    ScalarImage i1;     // sensor at s1
    ScalarImage i2;     // sensor at s2, after any inter-frame motion
    ScalarImage truth;  // per-pixel object distance (constant plane)
    double sigma1 = 0.0; // signed defocus levels of the first frame, meters
    double sigma2 = 0.0;
    double range_lo = 0.0; // value window of the pair, for quantized export
    double range_hi = 1.0;
    RenderMethod method_used = RenderMethod::Analytic;
};

/// Renders the differentially defocused pair. Deterministic: identical
/// scene/optics/noise (including seed) give bit-identical output. The noise
/// field is a pure function of (seed, sensor distance, pixel), so equal
/// sensor distances see equal noise.
RenderedPair render_pair(const SceneSpec& scene, const OpticsConfig& optics,
                         const NoiseSpec& noise, RenderMethod method = RenderMethod::Auto);

/// One sensor image on its native grid (noise-free).
ScalarImage render_sensor(const Texture& texture, double z, double s,
                          const OpticsConfig& optics, int width, int height,
                          RenderMethod method);

// -- Analytic oracles (Gaussian PSF, procedural texture) ---------------------
//
// Magnification-aligned image and its derivatives at the consensus sensor
// distance, sampled on the consensus pixel grid. These are the reference
// values the estimation pipeline is judged against.

// `coord_scale` rescales the sample positions: pixel n is evaluated at the
// consensus coordinate coord_scale * pitch * (n - center). 1.0 samples the
// consensus grid; c/s2 samples where sensor-2's grid lands after alignment.
ScalarImage analytic_aligned_image(const ProceduralTexture& t, double z,
                                   const OpticsConfig& o, double s, int w, int h,
                                   double coord_scale = 1.0);
/// d/ds of the aligned image, evaluated at s = c.
ScalarImage analytic_aligned_ds(const ProceduralTexture& t, double z,
                                const OpticsConfig& o, int w, int h,
                                double coord_scale = 1.0);
/// Spatial Laplacian (per square meter) of the aligned image at s = c.
ScalarImage analytic_aligned_lap(const ProceduralTexture& t, double z,
                                 const OpticsConfig& o, int w, int h,
                                 double coord_scale = 1.0);

// -- Scaled-PSF derivative identity ------------------------------------------

struct PsfCheckReport {
    double max_rel_error_fd = 0.0;    // finite difference vs closed form
    double max_closed_form_gap = 0.0; // the two closed forms against each other
    int points = 0;
};

/// Verifies d/ds of the scaled PSF against -(c^2 sigma A / s^3) times its
/// spatial Laplacian over the kernel support, with d/ds taken by central
/// finite difference of step `eps_s`. Also cross-checks the two closed-form
/// expressions of those derivatives. Gaussian model only. `fault_scale`
/// multiplies A on the closed-form side; 1.0 is the honest check.
PsfCheckReport scaled_psf_derivative_check(const OpticsConfig& o, double z, double eps_s,
                                           double fault_scale = 1.0);

} // namespace dfd
