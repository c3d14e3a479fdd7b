#include "dfd/scene.hpp"

#include <cmath>
#include <stdexcept>

namespace dfd {

namespace {
constexpr double kTwoPi = 2.0 * M_PI;

uint64_t mix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
} // namespace

// ---------------------------------------------------------------------------
// ProceduralTexture
// ---------------------------------------------------------------------------

double ProceduralTexture::value(double ux, double uy) const {
    double acc = bias;
    for (const auto& c : components)
        acc += c.amp * std::sin(kTwoPi * (c.fx * ux + c.fy * uy) + c.phase);
    return acc;
}

double ProceduralTexture::value_blurred(double ux, double uy, double blur_std) const {
    const double s2 = blur_std * blur_std;
    double acc = bias;
    for (const auto& c : components) {
        const double f2 = c.fx * c.fx + c.fy * c.fy;
        acc += c.amp * std::exp(-2.0 * M_PI * M_PI * s2 * f2) *
               std::sin(kTwoPi * (c.fx * ux + c.fy * uy) + c.phase);
    }
    return acc;
}

double ProceduralTexture::max_frequency() const {
    double m = 0.0;
    for (const auto& c : components)
        m = std::max(m, std::hypot(c.fx, c.fy));
    return m;
}

ProceduralTexture ProceduralTexture::translated(double dx, double dy) const {
    ProceduralTexture t = *this;
    for (auto& c : t.components) c.phase -= kTwoPi * (c.fx * dx + c.fy * dy);
    return t;
}

ProceduralTexture ProceduralTexture::rotated(double radians) const {
    // T'(u) = T(R(-a) u): frequency vectors rotate by +a.
    ProceduralTexture t = *this;
    const double ca = std::cos(radians), sa = std::sin(radians);
    for (auto& c : t.components) {
        const double fx = ca * c.fx - sa * c.fy;
        const double fy = sa * c.fx + ca * c.fy;
        c.fx = fx;
        c.fy = fy;
    }
    return t;
}

ProceduralTexture ProceduralTexture::foreshortened(double scale_x, double scale_y) const {
    if (scale_x == 0.0 || scale_y == 0.0)
        throw std::invalid_argument("foreshortened: zero scale");
    ProceduralTexture t = *this;
    for (auto& c : t.components) {
        c.fx *= scale_x;
        c.fy *= scale_y;
    }
    return t;
}

// ---------------------------------------------------------------------------
// StoredTexture
// ---------------------------------------------------------------------------

double StoredTexture::sample(double ux, double uy) const {
    const double px = (ux / extent_x + 0.5) * (image.width() - 1);
    const double py = (uy / extent_y + 0.5) * (image.height() - 1);
    if (px < 0.0 || py < 0.0 || px > image.width() - 1 || py > image.height() - 1)
        return 0.0;
    const int ix = std::min(int(px), image.width() - 2 >= 0 ? image.width() - 2 : 0);
    const int iy = std::min(int(py), image.height() - 2 >= 0 ? image.height() - 2 : 0);
    const double fx = px - ix, fy = py - iy;
    const double v00 = image.at(ix, iy);
    const double v10 = image.at(std::min(ix + 1, image.width() - 1), iy);
    const double v01 = image.at(ix, std::min(iy + 1, image.height() - 1));
    const double v11 = image.at(std::min(ix + 1, image.width() - 1),
                                std::min(iy + 1, image.height() - 1));
    return (1 - fy) * ((1 - fx) * v00 + fx * v10) + fy * ((1 - fx) * v01 + fx * v11);
}

double StoredTexture::max_frequency() const {
    const double spacing = std::min(extent_x / image.width(), extent_y / image.height());
    return 0.5 / spacing;
}

double texture_max_frequency(const Texture& t) {
    return std::visit([](const auto& tex) { return tex.max_frequency(); }, t);
}

bool MotionSpec::is_zero() const {
    return lateral_x == 0.0 && lateral_y == 0.0 && axial == 0.0 && rot_x == 0.0 &&
           rot_y == 0.0 && rot_z == 0.0;
}

// ---------------------------------------------------------------------------
// Randomness
// ---------------------------------------------------------------------------

uint64_t SplitMix64::next() {
    state += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double SplitMix64::uniform() {
    return double(next() >> 11) * 0x1.0p-53;
}

double SplitMix64::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

double counter_gaussian(uint64_t seed, uint64_t stream, int x, int y) {
    const uint64_t key = (uint64_t(uint32_t(y)) << 32) | uint64_t(uint32_t(x));
    const uint64_t h1 = mix64(mix64(seed ^ mix64(stream)) ^ key);
    const uint64_t h2 = mix64(h1 ^ 0xda3e39cb94b95bdbULL);
    const double u1 = (double(h1 >> 11) + 1.0) * 0x1.0p-53; // (0, 1]
    const double u2 = double(h2 >> 11) * 0x1.0p-53;          // [0, 1)
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

// ---------------------------------------------------------------------------
// Factories
// ---------------------------------------------------------------------------

ProceduralTexture band_noise_texture(int n, double f_lo, double f_hi, uint64_t seed,
                                     double amplitude) {
    if (n < 1) throw std::invalid_argument("band_noise_texture: need at least one component");
    if (!(f_lo > 0.0) || !(f_hi >= f_lo))
        throw std::invalid_argument("band_noise_texture: bad frequency band");
    SplitMix64 rng(seed);
    ProceduralTexture t;
    t.components.resize(n);
    double total = 0.0;
    for (auto& c : t.components) {
        const double f = rng.uniform(f_lo, f_hi);
        const double ang = rng.uniform(0.0, kTwoPi);
        c.fx = f * std::cos(ang);
        c.fy = f * std::sin(ang);
        c.phase = rng.uniform(0.0, kTwoPi);
        c.amp = rng.uniform(0.5, 1.0);
        total += c.amp;
    }
    for (auto& c : t.components) c.amp *= amplitude / total;
    return t;
}

ProceduralTexture grating_texture(double freq, double angle_rad, double amplitude,
                                  double phase) {
    if (!(freq > 0.0)) throw std::invalid_argument("grating_texture: frequency must be positive");
    ProceduralTexture t;
    t.components.push_back({freq * std::cos(angle_rad), freq * std::sin(angle_rad),
                            amplitude, phase});
    return t;
}

ProceduralTexture checker_texture(double period, int harmonics, double amplitude) {
    if (!(period > 0.0)) throw std::invalid_argument("checker_texture: period must be positive");
    const double f = 1.0 / period;
    // sq(t) ~ sum over odd k of (4 / pi k) sin(2 pi k f t); the checker is
    // sq(x) sq(y), expanded into sum/difference plane waves.
    ProceduralTexture t;
    double peak = 0.0;
    for (int j = 1; j <= 2 * harmonics - 1; j += 2)
        for (int k = 1; k <= 2 * harmonics - 1; k += 2) {
            const double cjk = (4.0 / (M_PI * j)) * (4.0 / (M_PI * k)) * 0.5;
            // sin(a) sin(b) = 0.5 cos(a-b) - 0.5 cos(a+b); cos(t) = sin(t + pi/2)
            t.components.push_back({j * f, -k * f, cjk, 0.5 * M_PI});
            t.components.push_back({j * f, k * f, -cjk, 0.5 * M_PI});
            peak += 2.0 * std::abs(cjk);
        }
    for (auto& c : t.components) c.amp *= amplitude / peak;
    return t;
}

double object_frequency(double cycles_per_px, const OpticsConfig& o, double z) {
    return cycles_per_px / (o.pitch * z / o.c());
}

ProceduralTexture band_noise_for(const OpticsConfig& o, double z, double f_lo_px,
                                 double f_hi_px, int n, uint64_t seed, double amplitude) {
    return band_noise_texture(n, object_frequency(f_lo_px, o, z),
                              object_frequency(f_hi_px, o, z), seed, amplitude);
}

SceneSpec apply_motion(const SceneSpec& scene) {
    if (scene.motion.is_zero()) return scene;
    SceneSpec out = scene;
    out.z = scene.z + scene.motion.axial;
    if (std::holds_alternative<ProceduralTexture>(scene.texture)) {
        ProceduralTexture t = std::get<ProceduralTexture>(scene.texture);
        if (scene.motion.lateral_x != 0.0 || scene.motion.lateral_y != 0.0)
            t = t.translated(scene.motion.lateral_x, scene.motion.lateral_y);
        if (scene.motion.rot_z != 0.0) t = t.rotated(scene.motion.rot_z);
        if (scene.motion.rot_x != 0.0 || scene.motion.rot_y != 0.0)
            t = t.foreshortened(std::cos(scene.motion.rot_y), std::cos(scene.motion.rot_x));
        out.texture = std::move(t);
    } else {
        throw std::invalid_argument("apply_motion: stored textures support no motion yet");
    }
    return out;
}

} // namespace dfd
