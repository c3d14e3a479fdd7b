#pragma once

#include <string>
#include <vector>

#include "dfd/homography.hpp"

namespace dfd {

/// Point match between the two sensors: `from` in sensor-2 pixel
/// coordinates, `to` the matching position in sensor-1 coordinates. The
/// fitted homography maps from -> to, the direction the aligner consumes.
struct CorrespondencePair {
    Point2 from;
    Point2 to;
};

struct HomographyFit {
    Homography h;
    double reprojection_rms = 0.0; // pixels
};

/// Least-squares direct linear transform on normalized coordinates.
/// Needs >= 4 non-degenerate pairs; collinear configurations are rejected.
HomographyFit fit_homography(const std::vector<CorrespondencePair>& pairs);

enum class CalibMethod { LinearInverseDepth, GaussNewton };

/// One calibration distance: the true depth and the derivative ratios
/// is/lap collected from the valid pixels of that capture.
struct CalibSample {
    double z_true = 0.0;
    std::vector<double> ratios;
};

struct CalibrationRecord {
    double a = 0.0;
    double b = 0.0;
    double residual_rms = 0.0; // meters, depth-domain
    CalibMethod method = CalibMethod::GaussNewton;
    int iterations = 0;
    std::vector<double> dataset_depths;
    std::string dataset_note;
};

/// Stage 1 solves the inverse-depth linearization 1/Z = (b + r)/a by least
/// squares; stage 2 (unless `refine` is false) runs damped Gauss-Newton on
/// the squared depth-error objective. Throws on fewer than two distinct
/// distances, a rank-deficient system, or non-convergence.
CalibrationRecord calibrate_ab(const std::vector<CalibSample>& data, bool refine = true);

std::string to_string(CalibMethod m);
CalibMethod calib_method_from_string(const std::string& s);

/// Key-value serialization the pipeline can load (a, b, h) from.
void save_calibration(const std::string& path, const CalibrationRecord& rec,
                      const Homography* h = nullptr);
CalibrationRecord load_calibration(const std::string& path, Homography* h_out = nullptr);

} // namespace dfd
