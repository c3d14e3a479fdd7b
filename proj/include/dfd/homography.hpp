#pragma once

#include <array>

#include "dfd/image.hpp"

namespace dfd {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

/// 3x3 projective map on pixel coordinates, normalized so m[8] = 1
/// whenever that entry is usable.
class Homography {
public:
    Homography() : m_{1, 0, 0, 0, 1, 0, 0, 0, 1} {}
    explicit Homography(const std::array<double, 9>& m) : m_(m) { normalize(); }

    static Homography identity() { return Homography(); }
    static Homography translation(double dx, double dy);
    /// Isotropic scaling by `factor` about (cx, cy).
    static Homography scaling_about(double factor, double cx, double cy);
    /// Affine map x' = R x + t (row-major 2x2 R).
    static Homography affine(const std::array<double, 4>& r, double tx, double ty);

    const std::array<double, 9>& m() const { return m_; }
    double at(int row, int col) const { return m_[row * 3 + col]; }

    double det() const;
    bool invertible(double eps = 1e-12) const;
    Homography inverse() const;
    Homography compose(const Homography& rhs) const; // this ∘ rhs

    Point2 apply(const Point2& p) const;

    bool is_identity(double eps = 1e-12) const;

private:
    void normalize();
    std::array<double, 9> m_;
};

struct WarpResult {
    ScalarImage image;
    MaskImage valid;
};

/// Resamples so that out(x) = img(h(x)), bilinear interpolation.
/// Samples falling outside the source grid are zeroed and masked invalid.
WarpResult warp(const ScalarImage& img, const Homography& h);

/// Pure spatial rescaling to the consensus sensor distance:
/// out(x) = img((s/c) * x) about the principal point.
WarpResult rescale_to_consensus(const ScalarImage& img, double s, double c);

} // namespace dfd
