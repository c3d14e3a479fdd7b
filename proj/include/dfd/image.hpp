#pragma once

#include <cstdint>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace dfd {

/// Row-major 2D grid of real-valued samples. Carries an optional pixel
/// pitch in meters per pixel (1.0 means "pixel units").
class ScalarImage {
public:
    ScalarImage() = default;
    ScalarImage(int width, int height, double fill = 0.0, double pitch = 1.0)
        : width_(width), height_(height), pitch_(pitch),
          data_(static_cast<size_t>(check_dims(width, height)) , fill) {}

    int width() const { return width_; }
    int height() const { return height_; }
    double pitch() const { return pitch_; }
    void set_pitch(double p) { pitch_ = p; }

    size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& at(int x, int y) { return data_[static_cast<size_t>(y) * width_ + x]; }
    double at(int x, int y) const { return data_[static_cast<size_t>(y) * width_ + x]; }

    double& operator[](size_t i) { return data_[i]; }
    double operator[](size_t i) const { return data_[i]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    /// Sample with edge replication for out-of-range coordinates.
    double at_clamped(int x, int y) const {
        if (x < 0) x = 0; else if (x >= width_) x = width_ - 1;
        if (y < 0) y = 0; else if (y >= height_) y = height_ - 1;
        return at(x, y);
    }

    /// Principal point (image center) in pixel coordinates.
    double center_x() const { return 0.5 * (width_ - 1); }
    double center_y() const { return 0.5 * (height_ - 1); }

    bool same_dims(const ScalarImage& o) const {
        return width_ == o.width_ && height_ == o.height_;
    }

private:
    static size_t check_dims(int w, int h) {
        if (w <= 0 || h <= 0)
            throw std::invalid_argument("ScalarImage: dimensions must be positive");
        return static_cast<size_t>(w) * static_cast<size_t>(h);
    }

    int width_ = 0;
    int height_ = 0;
    double pitch_ = 1.0;
    std::vector<double> data_;
};

/// Boolean validity grid matching an image.
class MaskImage {
public:
    MaskImage() = default;
    MaskImage(int width, int height, bool valid = true)
        : width_(width), height_(height),
          data_(static_cast<size_t>(width) * height, valid ? 1 : 0) {}

    int width() const { return width_; }
    int height() const { return height_; }
    size_t size() const { return data_.size(); }

    bool at(int x, int y) const { return data_[static_cast<size_t>(y) * width_ + x] != 0; }
    void set(int x, int y, bool v) { data_[static_cast<size_t>(y) * width_ + x] = v ? 1 : 0; }

    bool operator[](size_t i) const { return data_[i] != 0; }
    void set(size_t i, bool v) { data_[i] = v ? 1 : 0; }

    size_t count_valid() const {
        size_t n = 0;
        for (uint8_t v : data_) n += v;
        return n;
    }

    bool same_dims(const MaskImage& o) const {
        return width_ == o.width_ && height_ == o.height_;
    }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<uint8_t> data_;
};

double image_min(const ScalarImage& img);
double image_max(const ScalarImage& img);
double image_mean(const ScalarImage& img);
/// max - min.
double dynamic_range(const ScalarImage& img);
/// True if every sample is finite.
bool all_finite(const ScalarImage& img);
/// Throws std::runtime_error naming `what` if any sample is non-finite.
void require_finite(const ScalarImage& img, const std::string& what);

double rms_difference(const ScalarImage& a, const ScalarImage& b);

} // namespace dfd
