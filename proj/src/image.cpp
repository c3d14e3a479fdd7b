#include "dfd/image.hpp"

#include <algorithm>
#include <cmath>

namespace dfd {

double image_min(const ScalarImage& img) {
    double m = img[0];
    for (size_t i = 1; i < img.size(); ++i) m = std::min(m, img[i]);
    return m;
}

double image_max(const ScalarImage& img) {
    double m = img[0];
    for (size_t i = 1; i < img.size(); ++i) m = std::max(m, img[i]);
    return m;
}

double image_mean(const ScalarImage& img) {
    double acc = 0.0;
    for (size_t i = 0; i < img.size(); ++i) acc += img[i];
    return acc / double(img.size());
}

double dynamic_range(const ScalarImage& img) {
    return image_max(img) - image_min(img);
}

bool all_finite(const ScalarImage& img) {
    for (size_t i = 0; i < img.size(); ++i)
        if (!std::isfinite(img[i])) return false;
    return true;
}

void require_finite(const ScalarImage& img, const std::string& what) {
    if (!all_finite(img))
        throw std::runtime_error(what + ": non-finite sample");
}

double rms_difference(const ScalarImage& a, const ScalarImage& b) {
    if (!a.same_dims(b))
        throw std::invalid_argument("rms_difference: dimension mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc / double(a.size()));
}

} // namespace dfd
