#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "dfd/filters.hpp"
#include "dfd/homography.hpp"

using namespace dfd;

namespace {

ScalarImage smooth_random_image(int w, int h, uint32_t seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    ScalarImage img(w, h);
    for (size_t i = 0; i < img.size(); ++i) img[i] = dist(rng);
    return gaussian_filter(img, 3.0);
}

} // namespace

TEST_CASE("homography compose and inverse") {
    Homography h = Homography::affine({1.02, 0.01, -0.02, 0.98}, 3.5, -1.25);
    Homography prod = h.compose(h.inverse());
    CHECK(prod.is_identity(1e-9));
    Point2 p{12.0, 7.5};
    Point2 q = h.inverse().apply(h.apply(p));
    CHECK(q.x == doctest::Approx(p.x).epsilon(1e-12));
    CHECK(q.y == doctest::Approx(p.y).epsilon(1e-12));
}

TEST_CASE("non-invertible homography is rejected") {
    CHECK_THROWS(Homography({1, 0, 0, 2, 0, 0, 0, 0, 1}).inverse());
    ScalarImage img(8, 8, 1.0);
    CHECK_THROWS(warp(img, Homography({1, 0, 0, 2, 0, 0, 0, 0, 1})));
}

TEST_CASE("projective warp masks points behind the horizon instead of failing") {
    ScalarImage img = smooth_random_image(24, 24, 2);
    // strong perspective: the denominator changes sign inside the frame
    Homography h({1, 0, 0, 0, 1, 0, -0.1, 0, 1});
    WarpResult out = warp(img, h);
    CHECK(all_finite(out.image));
    CHECK(out.valid.count_valid() > 0);
    CHECK(out.valid.count_valid() < out.valid.size());
}

TEST_CASE("warp with the identity is the identity on data and mask") {
    ScalarImage img = smooth_random_image(37, 29, 5);
    WarpResult out = warp(img, Homography::identity());
    for (size_t i = 0; i < img.size(); ++i) {
        CHECK(out.image[i] == img[i]); // bitwise
        CHECK(out.valid[i]);
    }
}

TEST_CASE("integer translation shifts exactly and masks the border strip") {
    ScalarImage img = smooth_random_image(32, 24, 9);
    const int dx = 3, dy = -2;
    WarpResult out = warp(img, Homography::translation(dx, dy));
    for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 32; ++x) {
            const int sx = x + dx, sy = y + dy;
            const bool inside = sx >= 0 && sx < 32 && sy >= 0 && sy < 24;
            CHECK(out.valid.at(x, y) == inside);
            if (inside) CHECK(out.image.at(x, y) == img.at(sx, sy));
        }
}

TEST_CASE("scale round trip returns the original on smooth images") {
    ScalarImage img = smooth_random_image(96, 96, 17);
    const double ratio = 1.01;
    WarpResult fwd = rescale_to_consensus(img, ratio, 1.0);
    WarpResult back = rescale_to_consensus(fwd.image, 1.0, ratio);
    double acc = 0.0;
    size_t n = 0;
    for (int y = 4; y < 92; ++y)
        for (int x = 4; x < 92; ++x) {
            const double d = back.image.at(x, y) - img.at(x, y);
            acc += d * d;
            ++n;
        }
    CHECK(std::sqrt(acc / n) < 1e-3);
}

TEST_CASE("rescale_to_consensus with s == c is the identity") {
    ScalarImage img = smooth_random_image(41, 41, 3);
    WarpResult out = rescale_to_consensus(img, 0.0313, 0.0313);
    for (size_t i = 0; i < img.size(); ++i) CHECK(out.image[i] == img[i]);
    CHECK_THROWS(rescale_to_consensus(img, -1.0, 1.0));
    CHECK_THROWS(rescale_to_consensus(img, 1.0, 0.0));
}

TEST_CASE("rescale by factor 2 moves a centered delta to half offset") {
    // 129x129 so the principal point (64,64) is a grid point.
    ScalarImage img(129, 129, 0.0);
    img.at(104, 104) = 1.0; // +40 px from center
    WarpResult out = rescale_to_consensus(img, 2.0, 1.0);
    CHECK(out.image.at(84, 84) == doctest::Approx(1.0).epsilon(1e-12)); // +20 px
    double total = 0.0;
    for (size_t i = 0; i < out.image.size(); ++i) total += out.image[i];
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}
