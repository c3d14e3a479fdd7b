#include "dfd/homography.hpp"

#include <cmath>
#include <stdexcept>

namespace dfd {

Homography Homography::translation(double dx, double dy) {
    return Homography({1, 0, dx, 0, 1, dy, 0, 0, 1});
}

Homography Homography::scaling_about(double factor, double cx, double cy) {
    // x' = c + factor * (x - c)
    return Homography({factor, 0, cx * (1.0 - factor),
                       0, factor, cy * (1.0 - factor),
                       0, 0, 1});
}

Homography Homography::affine(const std::array<double, 4>& r, double tx, double ty) {
    return Homography({r[0], r[1], tx, r[2], r[3], ty, 0, 0, 1});
}

void Homography::normalize() {
    if (std::abs(m_[8]) > 1e-12) {
        for (double& v : m_) v /= m_[8];
        m_[8] = 1.0;
    }
}

double Homography::det() const {
    return m_[0] * (m_[4] * m_[8] - m_[5] * m_[7]) -
           m_[1] * (m_[3] * m_[8] - m_[5] * m_[6]) +
           m_[2] * (m_[3] * m_[7] - m_[4] * m_[6]);
}

bool Homography::invertible(double eps) const {
    return std::abs(det()) > eps;
}

Homography Homography::inverse() const {
    const double d = det();
    if (std::abs(d) <= 1e-12)
        throw std::invalid_argument("Homography::inverse: singular matrix");
    const auto& m = m_;
    std::array<double, 9> inv{
        (m[4] * m[8] - m[5] * m[7]) / d, (m[2] * m[7] - m[1] * m[8]) / d,
        (m[1] * m[5] - m[2] * m[4]) / d, (m[5] * m[6] - m[3] * m[8]) / d,
        (m[0] * m[8] - m[2] * m[6]) / d, (m[2] * m[3] - m[0] * m[5]) / d,
        (m[3] * m[7] - m[4] * m[6]) / d, (m[1] * m[6] - m[0] * m[7]) / d,
        (m[0] * m[4] - m[1] * m[3]) / d};
    return Homography(inv);
}

Homography Homography::compose(const Homography& rhs) const {
    std::array<double, 9> p{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 3; ++k) acc += m_[i * 3 + k] * rhs.m_[k * 3 + j];
            p[i * 3 + j] = acc;
        }
    return Homography(p);
}

Point2 Homography::apply(const Point2& p) const {
    const double w = m_[6] * p.x + m_[7] * p.y + m_[8];
    if (std::abs(w) < 1e-300)
        throw std::runtime_error("Homography::apply: point at infinity");
    return {(m_[0] * p.x + m_[1] * p.y + m_[2]) / w,
            (m_[3] * p.x + m_[4] * p.y + m_[5]) / w};
}

bool Homography::is_identity(double eps) const {
    static const double id[9] = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    for (int i = 0; i < 9; ++i)
        if (std::abs(m_[i] - id[i]) > eps) return false;
    return true;
}

WarpResult warp(const ScalarImage& img, const Homography& h) {
    if (!h.invertible())
        throw std::invalid_argument("warp: homography is not invertible");
    WarpResult res{ScalarImage(img.width(), img.height(), 0.0, img.pitch()),
                   MaskImage(img.width(), img.height(), false)};
    const int w = img.width(), hh = img.height();
    const auto& m = h.m();
#pragma omp parallel for schedule(static)
    for (int y = 0; y < hh; ++y)
        for (int x = 0; x < w; ++x) {
            // inline projective map; points near the horizon stay masked
            const double den = m[6] * x + m[7] * y + m[8];
            if (std::abs(den) < 1e-12) continue;
            const double sx = (m[0] * x + m[1] * y + m[2]) / den;
            const double sy = (m[3] * x + m[4] * y + m[5]) / den;
            if (!(sx >= 0.0 && sx <= w - 1 && sy >= 0.0 && sy <= hh - 1))
                continue; // out of bounds: stays invalid
            const int ix = std::min(int(sx), w - 2 >= 0 ? w - 2 : 0);
            const int iy = std::min(int(sy), hh - 2 >= 0 ? hh - 2 : 0);
            const double fx = sx - ix, fy = sy - iy;
            const double v00 = img.at(ix, iy);
            const double v10 = img.at(std::min(ix + 1, w - 1), iy);
            const double v01 = img.at(ix, std::min(iy + 1, hh - 1));
            const double v11 = img.at(std::min(ix + 1, w - 1), std::min(iy + 1, hh - 1));
            res.image.at(x, y) = (1 - fy) * ((1 - fx) * v00 + fx * v10) +
                                 fy * ((1 - fx) * v01 + fx * v11);
            res.valid.set(x, y, true);
        }
    return res;
}

WarpResult rescale_to_consensus(const ScalarImage& img, double s, double c) {
    if (s <= 0.0 || c <= 0.0)
        throw std::invalid_argument("rescale_to_consensus: distances must be positive");
    if (s == c) return {img, MaskImage(img.width(), img.height(), true)};
    return warp(img, Homography::scaling_about(s / c, img.center_x(), img.center_y()));
}

} // namespace dfd
