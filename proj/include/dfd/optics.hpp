#pragma once

#include <string>

#include "dfd/kernel.hpp"

namespace dfd {

enum class PsfModel { Gaussian, Pillbox };

PsfModel psf_model_from_string(const std::string& s);
std::string to_string(PsfModel m);

/// Optical constants of the two-sensor rig. All lengths in meters.
struct OpticsConfig {
    double aperture_std = 1.0e-3;  // A: std of the Gaussian aperture code
    double focal_length = 0.030;   // f; optical power rho = 1/f
    double s1 = 0.0313433;         // sensor distances (conjugates ~0.7 m / ~1.2 m)
    double s2 = 0.0307692;
    double consensus = 0.0;        // c; 0 selects the midpoint of s1, s2
    double pitch = 4.0e-6;         // meters per pixel on each sensor
    PsfModel psf_model = PsfModel::Gaussian;

    double rho() const { return 1.0 / focal_length; }
    double c() const { return consensus > 0.0 ? consensus : 0.5 * (s1 + s2); }
    double delta_s() const { return s1 - s2; }       // signed
    double abs_delta_s() const;
    /// Object distance imaged in focus at sensor distance s.
    double conjugate_depth(double s) const;
    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

/// Signed defocus level sigma(Z, s) = A*(1/Z - rho)*s + A, in meters on the
/// sensor. Callers take |sigma| for PSF width; the sign marks the focus side.
double defocus_level(double z, double s, const OpticsConfig& o);

/// Blur kernel for a defocus level. Gaussian: std |sigma|/pitch px truncated
/// at 4 std. Pillbox: anti-aliased disk of radius |sigma|/pitch px.
Kernel make_psf(double sigma_m, PsfModel model, double pitch);

// Closed-form depth-equation constants for derivative maps normalized by
// (s1 - s2) and the spatial Laplacian taken per square meter.
double closed_form_a(const OpticsConfig& o); // -A^2
double closed_form_b(const OpticsConfig& o); // -A^2 (1/f - 1/c)

} // namespace dfd
