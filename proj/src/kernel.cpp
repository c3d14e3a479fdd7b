#include "dfd/kernel.hpp"

#include <cmath>
#include <stdexcept>

namespace dfd {

double Kernel::sum() const {
    // Effective 2D mass: separable kernels apply their taps twice.
    double acc = 0.0;
    for (double t : taps) acc += t;
    return separable ? acc * acc : acc;
}

double Kernel::second_moment() const {
    // Marginal second moment along x about the kernel center.
    double acc = 0.0, norm = 0.0;
    if (separable) {
        for (int i = 0; i < width(); ++i) {
            const double d = i - radius;
            acc += taps[i] * d * d;
            norm += taps[i];
        }
    } else {
        for (int y = 0; y < width(); ++y)
            for (int x = 0; x < width(); ++x) {
                const double d = x - radius;
                acc += taps[y * width() + x] * d * d;
                norm += taps[y * width() + x];
            }
    }
    return acc / norm;
}

std::vector<double> Kernel::dense() const {
    if (!separable) return taps;
    const int w = width();
    std::vector<double> out(static_cast<size_t>(w) * w);
    for (int y = 0; y < w; ++y)
        for (int x = 0; x < w; ++x)
            out[static_cast<size_t>(y) * w + x] = taps[y] * taps[x];
    return out;
}

Kernel make_box_kernel(int size) {
    if (size < 1 || size % 2 == 0)
        throw std::invalid_argument("make_box_kernel: size must be odd and >= 1");
    Kernel k;
    k.radius = size / 2;
    k.separable = true;
    k.taps.assign(size, 1.0 / size);
    return k;
}

Kernel make_gaussian_kernel(double std_px) {
    Kernel k;
    k.separable = true;
    const int radius =
        std_px > 0.125 ? static_cast<int>(std::ceil(4.0 * std_px)) : 0;
    if (radius < 1) {
        // Sub-pixel support degenerates to a delta.
        k.radius = 0;
        k.taps = {1.0};
        return k;
    }
    k.radius = radius;
    k.taps.resize(2 * radius + 1);
    double norm = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * double(i) * i / (std_px * std_px));
        k.taps[i + radius] = v;
        norm += v;
    }
    for (double& t : k.taps) t /= norm;
    return k;
}

Kernel make_pillbox_kernel(double radius_px) {
    Kernel k;
    k.separable = false;
    radius_px = std::abs(radius_px);
    const int r = std::max(1, static_cast<int>(std::ceil(radius_px + 0.5)));
    if (radius_px < 0.25) {
        k.radius = 0;
        k.taps = {1.0};
        return k;
    }
    k.radius = r;
    const int w = 2 * r + 1;
    k.taps.assign(static_cast<size_t>(w) * w, 0.0);
    double norm = 0.0;
    for (int y = -r; y <= r; ++y)
        for (int x = -r; x <= r; ++x) {
            const double d = std::sqrt(double(x) * x + double(y) * y);
            // Linear coverage ramp over the rim pixel.
            const double v = std::clamp(radius_px + 0.5 - d, 0.0, 1.0);
            k.taps[static_cast<size_t>(y + r) * w + (x + r)] = v;
            norm += v;
        }
    for (double& t : k.taps) t /= norm;
    return k;
}

} // namespace dfd
