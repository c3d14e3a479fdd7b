#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "dfd/image.hpp"
#include "dfd/optics.hpp"

namespace dfd {

/// One sinusoidal plane wave of the texture, frequency in cycles per meter
/// on the object plane.
struct SinusoidComponent {
    double fx = 0.0;
    double fy = 0.0;
    double amp = 0.0;
    double phase = 0.0;
};

/// Band-limited texture as a finite sum of sinusoids. Exact values are
/// available at any continuous point, and a Gaussian blur of the texture
/// has a closed form, which makes this the reference path for the renderer.
class ProceduralTexture {
public:
    double bias = 0.5;
    std::vector<SinusoidComponent> components;

    double value(double ux, double uy) const;
    /// Texture convolved with a normalized Gaussian of std `blur_std` meters.
    double value_blurred(double ux, double uy, double blur_std) const;
    /// Largest |frequency| over the components, cycles per meter.
    double max_frequency() const;

    ProceduralTexture translated(double dx, double dy) const;
    ProceduralTexture rotated(double radians) const;
    /// Axis-aligned compression of the texture plane; small-angle stand-in
    /// for out-of-plane rotation of the target.
    ProceduralTexture foreshortened(double scale_x, double scale_y) const;
};

/// Image texture spread over a physical extent; sampled bilinearly, zero
/// outside the extent.
struct StoredTexture {
    ScalarImage image;
    double extent_x = 0.1; // meters covered by the image width
    double extent_y = 0.1;

    double sample(double ux, double uy) const;
    double max_frequency() const; // Nyquist of the stored sampling
};

using Texture = std::variant<ProceduralTexture, StoredTexture>;

double texture_max_frequency(const Texture& t);

/// Rigid scene perturbation between the two captures (sequential-capture
/// emulation). Zero everywhere means snapshot.
struct MotionSpec {
    double lateral_x = 0.0; // meters on the object plane
    double lateral_y = 0.0;
    double axial = 0.0;     // meters, positive away from the camera
    double rot_x = 0.0;     // radians about the named axis
    double rot_y = 0.0;
    double rot_z = 0.0;

    bool is_zero() const;
};

struct SceneSpec {
    Texture texture;
    double z = 0.9;      // object distance, meters
    int width = 256;
    int height = 256;
    MotionSpec motion;
};

struct NoiseSpec {
    // Std of the additive sensor noise as a fraction of the nominal unit
    // intensity range; constant across depths regardless of scene contrast.
    double gaussian_std = 0.0;
    uint64_t seed = 0;
};

/// Position-indexed unit gaussian draw; a pure function of its arguments so
/// parallel and serial rendering agree bit-exactly.
double counter_gaussian(uint64_t seed, uint64_t stream, int x, int y);

/// Small deterministic generator for texture parameters.
struct SplitMix64 {
    uint64_t state;
    explicit SplitMix64(uint64_t seed) : state(seed) {}
    uint64_t next();
    double uniform();                 // [0, 1)
    double uniform(double lo, double hi);
};

// -- Texture factories -------------------------------------------------------

/// Isotropic band-limited noise: `n` components with |f| uniform in
/// [f_lo, f_hi] cycles/m, random orientation and phase; peak-to-peak
/// amplitude bounded by 2*amplitude around the bias.
ProceduralTexture band_noise_texture(int n, double f_lo, double f_hi, uint64_t seed,
                                     double amplitude = 0.4);

ProceduralTexture grating_texture(double freq, double angle_rad, double amplitude = 0.4,
                                  double phase = 0.0);

/// Band-limited checkerboard: product of square waves truncated to the
/// first `harmonics` odd terms.
ProceduralTexture checker_texture(double period, int harmonics = 3, double amplitude = 0.4);

/// Object-plane frequency that lands at `cycles_per_px` on the consensus
/// pixel grid for an object at distance z.
double object_frequency(double cycles_per_px, const OpticsConfig& o, double z);

/// Band-noise texture whose consensus-grid frequencies span
/// [f_lo_px, f_hi_px] cycles per pixel.
ProceduralTexture band_noise_for(const OpticsConfig& o, double z, double f_lo_px,
                                 double f_hi_px, int n, uint64_t seed,
                                 double amplitude = 0.4);

/// Scene after the rigid motion: transformed texture and shifted depth.
SceneSpec apply_motion(const SceneSpec& scene);

} // namespace dfd
