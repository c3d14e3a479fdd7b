#include "dfd/optics.hpp"

#include <cmath>
#include <stdexcept>

namespace dfd {

PsfModel psf_model_from_string(const std::string& s) {
    if (s == "gaussian") return PsfModel::Gaussian;
    if (s == "pillbox") return PsfModel::Pillbox;
    throw std::invalid_argument("unknown psf model '" + s + "' (gaussian|pillbox)");
}

std::string to_string(PsfModel m) {
    return m == PsfModel::Gaussian ? "gaussian" : "pillbox";
}

double OpticsConfig::abs_delta_s() const { return std::abs(s1 - s2); }

double OpticsConfig::conjugate_depth(double s) const {
    const double inv = rho() - 1.0 / s;
    if (inv <= 0.0) return std::numeric_limits<double>::infinity();
    return 1.0 / inv;
}

void OpticsConfig::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0))
            throw std::invalid_argument(std::string("optics.") + name + " must be positive");
    };
    positive(aperture_std, "aperture_std");
    positive(focal_length, "focal_length");
    positive(s1, "s1");
    positive(s2, "s2");
    positive(pitch, "pitch");
    if (consensus < 0.0)
        throw std::invalid_argument("optics.consensus must be positive (or 0 for midpoint)");
    if (s1 == s2)
        throw std::invalid_argument("optics.s1 and optics.s2 must differ");
}

double defocus_level(double z, double s, const OpticsConfig& o) {
    if (!(z > 0.0) || !(s > 0.0))
        throw std::invalid_argument("defocus_level: Z and s must be positive");
    return o.aperture_std * ((1.0 / z - o.rho()) * s + 1.0);
}

Kernel make_psf(double sigma_m, PsfModel model, double pitch) {
    if (!(pitch > 0.0)) throw std::invalid_argument("make_psf: pitch must be positive");
    const double px = std::abs(sigma_m) / pitch;
    return model == PsfModel::Gaussian ? make_gaussian_kernel(px) : make_pillbox_kernel(px);
}

double closed_form_a(const OpticsConfig& o) {
    return -o.aperture_std * o.aperture_std;
}

double closed_form_b(const OpticsConfig& o) {
    return -o.aperture_std * o.aperture_std * (1.0 / o.focal_length - 1.0 / o.c());
}

} // namespace dfd
