#pragma once

#include <vector>

#include "dfd/image.hpp"

namespace dfd {

/// Convolution kernel. Separable kernels store one 1D tap row applied
/// horizontally then vertically; dense kernels store a full (2r+1)^2 grid.
struct Kernel {
    int radius = 0;
    bool separable = true;
    std::vector<double> taps; // 1D taps (2r+1) or dense row-major (2r+1)^2

    int width() const { return 2 * radius + 1; }
    double sum() const;
    /// Second moment about the center along one axis, in squared pixels.
    double second_moment() const;
    /// Equivalent dense representation (outer product for separable kernels).
    std::vector<double> dense() const;
};

/// K x K normalized box filter, K odd.
Kernel make_box_kernel(int size);

/// Sampled Gaussian, truncated at ceil(4*std) and renormalized.
/// std <= 0 or a sub-pixel support yields the identity (delta) kernel.
Kernel make_gaussian_kernel(double std_px);

/// Normalized disk of the given radius in pixels with an anti-aliased rim.
/// Radius below ~half a pixel degenerates to a near-delta kernel.
Kernel make_pillbox_kernel(double radius_px);

} // namespace dfd
