#include "dfd/filters.hpp"

#include <cmath>
#include <stdexcept>

namespace dfd {

namespace {

inline double sample(const ScalarImage& img, int x, int y, BoundaryMode mode) {
    if (mode == BoundaryMode::Replicate) return img.at_clamped(x, y);
    if (x < 0 || x >= img.width() || y < 0 || y >= img.height()) return 0.0;
    return img.at(x, y);
}

void check_kernel_fits(const ScalarImage& img, int radius, const char* op) {
    if (radius > std::min(img.width(), img.height()) / 2)
        throw std::invalid_argument(std::string(op) + ": kernel larger than image");
}

// One horizontal then one vertical pass; fixed left-to-right summation
// order within each row keeps results schedule-independent.
ScalarImage convolve_separable(const ScalarImage& img, const std::vector<double>& taps,
                               int radius, BoundaryMode mode) {
    ScalarImage mid(img.width(), img.height(), 0.0, img.pitch());
#pragma omp parallel for schedule(static)
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            double acc = 0.0;
            for (int t = -radius; t <= radius; ++t)
                acc += taps[t + radius] * sample(img, x - t, y, mode);
            mid.at(x, y) = acc;
        }
    ScalarImage out(img.width(), img.height(), 0.0, img.pitch());
#pragma omp parallel for schedule(static)
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            double acc = 0.0;
            for (int t = -radius; t <= radius; ++t)
                acc += taps[t + radius] * sample(mid, x, y - t, mode);
            out.at(x, y) = acc;
        }
    return out;
}

ScalarImage convolve_dense(const ScalarImage& img, const std::vector<double>& taps,
                           int radius, BoundaryMode mode) {
    const int w = 2 * radius + 1;
    ScalarImage out(img.width(), img.height(), 0.0, img.pitch());
#pragma omp parallel for schedule(static)
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            double acc = 0.0;
            for (int dy = -radius; dy <= radius; ++dy)
                for (int dx = -radius; dx <= radius; ++dx)
                    acc += taps[static_cast<size_t>(dy + radius) * w + (dx + radius)] *
                           sample(img, x - dx, y - dy, mode);
            out.at(x, y) = acc;
        }
    return out;
}

// Sliding-window row sum of width 2r+1; 2 adds per output pixel in steady
// state. `scale` folds the normalization.
// Each row (or column) owns an independent running sum, so the parallel
// schedule cannot change any result bit.
void sliding_sum_rows(const ScalarImage& in, ScalarImage& out, int radius,
                      double scale, BoundaryMode mode) {
    const int w = in.width();
#pragma omp parallel for schedule(static)
    for (int y = 0; y < in.height(); ++y) {
        double acc = 0.0;
        for (int t = -radius; t <= radius; ++t) acc += sample(in, t, y, mode);
        out.at(0, y) = acc * scale;
        for (int x = 1; x < w; ++x) {
            acc += sample(in, x + radius, y, mode) - sample(in, x - radius - 1, y, mode);
            out.at(x, y) = acc * scale;
        }
    }
}

void sliding_sum_cols(const ScalarImage& in, ScalarImage& out, int radius,
                      double scale, BoundaryMode mode) {
    const int h = in.height();
#pragma omp parallel for schedule(static)
    for (int x = 0; x < in.width(); ++x) {
        double acc = 0.0;
        for (int t = -radius; t <= radius; ++t) acc += sample(in, x, t, mode);
        out.at(x, 0) = acc * scale;
        for (int y = 1; y < h; ++y) {
            acc += sample(in, x, y + radius, mode) - sample(in, x, y - radius - 1, mode);
            out.at(x, y) = acc * scale;
        }
    }
}

ScalarImage box_pass(const ScalarImage& img, int size, double scale, BoundaryMode mode) {
    if (size < 1 || size % 2 == 0)
        throw std::invalid_argument("box filter: size must be odd and >= 1");
    check_kernel_fits(img, size / 2, "box filter");
    if (size == 1) {
        ScalarImage out = img;
        if (scale != 1.0)
            for (size_t i = 0; i < out.size(); ++i) out[i] *= scale;
        return out;
    }
    ScalarImage mid(img.width(), img.height(), 0.0, img.pitch());
    ScalarImage out(img.width(), img.height(), 0.0, img.pitch());
    sliding_sum_rows(img, mid, size / 2, 1.0, mode);
    sliding_sum_cols(mid, out, size / 2, scale, mode);
    return out;
}

} // namespace

ScalarImage convolve(const ScalarImage& img, const Kernel& k, BoundaryMode boundary) {
    if (img.empty()) throw std::invalid_argument("convolve: empty image");
    check_kernel_fits(img, k.radius, "convolve");
    if (k.radius == 0) {
        ScalarImage out = img;
        const double g = k.separable ? k.taps[0] * k.taps[0] : k.taps[0];
        if (g != 1.0)
            for (size_t i = 0; i < out.size(); ++i) out[i] *= g;
        return out;
    }
    return k.separable ? convolve_separable(img, k.taps, k.radius, boundary)
                       : convolve_dense(img, k.taps, k.radius, boundary);
}

ScalarImage box_filter(const ScalarImage& img, int size, BoundaryMode boundary) {
    return box_pass(img, size, 1.0 / (double(size) * size), boundary);
}

ScalarImage box_sum(const ScalarImage& img, int size, BoundaryMode boundary) {
    return box_pass(img, size, 1.0, boundary);
}

ScalarImage gaussian_filter(const ScalarImage& img, double std_px, BoundaryMode boundary) {
    if (std_px <= 0.0) return img;
    return convolve(img, make_gaussian_kernel(std_px), boundary);
}

ScalarImage laplacian(const ScalarImage& img, LaplacianStencil stencil, BoundaryMode boundary) {
    if (img.width() < 3 || img.height() < 3)
        throw std::invalid_argument("laplacian: image must be at least 3x3");
    const double inv_p2 = 1.0 / (img.pitch() * img.pitch());
    ScalarImage out(img.width(), img.height(), 0.0, img.pitch());
#pragma omp parallel for schedule(static)
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            const double c = img.at(x, y);
            const double n = sample(img, x, y - 1, boundary);
            const double s = sample(img, x, y + 1, boundary);
            const double w = sample(img, x - 1, y, boundary);
            const double e = sample(img, x + 1, y, boundary);
            if (stencil == LaplacianStencil::FivePoint) {
                out.at(x, y) = (n + s + w + e - 4.0 * c) * inv_p2;
            } else {
                const double nw = sample(img, x - 1, y - 1, boundary);
                const double ne = sample(img, x + 1, y - 1, boundary);
                const double sw = sample(img, x - 1, y + 1, boundary);
                const double se = sample(img, x + 1, y + 1, boundary);
                out.at(x, y) =
                    ((nw + ne + sw + se) + 4.0 * (n + s + w + e) - 20.0 * c) / 6.0 * inv_p2;
            }
        }
    return out;
}

} // namespace dfd
