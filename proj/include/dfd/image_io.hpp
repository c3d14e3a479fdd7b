#pragma once

#include <string>
#include <vector>

#include "dfd/image.hpp"

namespace dfd {

/// Multi-channel 8/16-bit integer image as it comes off a file.
struct RawImage {
    int width = 0;
    int height = 0;
    int channels = 0;     // 1 or 3
    int bit_depth = 0;    // 8 or 16
    std::vector<uint16_t> data; // interleaved, row-major
};

// -- PGM (P5, 8/16-bit) -------------------------------------------------

RawImage read_pgm(const std::string& path);
void write_pgm(const std::string& path, const RawImage& img);

// -- PNG (grayscale or RGB, 8/16-bit, non-interlaced) ---------------------

RawImage read_png(const std::string& path);
void write_png(const std::string& path, const RawImage& img);

// -- PFM (grayscale float32) ----------------------------------------------

ScalarImage read_pfm(const std::string& path);
void write_pfm(const std::string& path, const ScalarImage& img);

// -- CSV ------------------------------------------------------------------

void write_csv(const std::string& path, const ScalarImage& img);
ScalarImage read_csv(const std::string& path);

// -- Conversions ------------------------------------------------------------

/// Average the channels into one ScalarImage scaled to [0,1].
ScalarImage to_gray(const RawImage& raw);

/// Quantize to the integer range using the given value window.
RawImage quantize(const ScalarImage& img, double lo, double hi, int bit_depth);

/// Map file samples back through the window recorded at write time.
ScalarImage dequantize(const RawImage& raw, double lo, double hi);

/// 8-bit PNG where valid pixels are white.
void write_mask_png(const std::string& path, const MaskImage& mask);

/// 8-bit RGB preview of `img` over [lo, hi] with a fixed color ramp;
/// invalid pixels render black.
void write_colormap_png(const std::string& path, const ScalarImage& img,
                        const MaskImage& valid, double lo, double hi);

} // namespace dfd
