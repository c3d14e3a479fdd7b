#pragma once

#include "dfd/image.hpp"
#include "dfd/kernel.hpp"

namespace dfd {

enum class BoundaryMode {
    Replicate, // clamp to edge
    Zero       // treat outside as 0
};

enum class LaplacianStencil {
    FivePoint, // {0,1,0; 1,-4,1; 0,1,0}
    NinePoint  // {1,4,1; 4,-20,4; 1,4,1} / 6
};

ScalarImage convolve(const ScalarImage& img, const Kernel& k,
                     BoundaryMode boundary = BoundaryMode::Replicate);

/// Box mean of size K x K (normalized). Runs as two sliding-sum passes.
ScalarImage box_filter(const ScalarImage& img, int size,
                       BoundaryMode boundary = BoundaryMode::Replicate);

/// Unnormalized K x K box sum, same sliding-window scheme.
ScalarImage box_sum(const ScalarImage& img, int size,
                    BoundaryMode boundary = BoundaryMode::Replicate);

ScalarImage gaussian_filter(const ScalarImage& img, double std_px,
                            BoundaryMode boundary = BoundaryMode::Replicate);

/// Discrete Laplacian. Divides by pitch^2, so an image with metric pitch
/// yields a Laplacian per square meter; unit pitch stays in pixel units.
ScalarImage laplacian(const ScalarImage& img,
                      LaplacianStencil stencil = LaplacianStencil::FivePoint,
                      BoundaryMode boundary = BoundaryMode::Replicate);

} // namespace dfd
