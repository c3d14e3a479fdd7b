#include "dfd/simulator.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

#include "dfd/filters.hpp"

namespace dfd {

namespace {

constexpr double kNyquistGuard = 0.45; // cycles per pixel allowed on any sensor

void check_aliasing(const Texture& texture, double z, double s, const OpticsConfig& o) {
    const double f_px = texture_max_frequency(texture) * (z / s) * o.pitch;
    if (f_px >= kNyquistGuard)
        throw std::invalid_argument(
            "render: texture aliases at the pinhole sampling (max frequency " +
            std::to_string(f_px) + " cycles/px, limit " + std::to_string(kNyquistGuard) + ")");
}

ScalarImage render_analytic(const ProceduralTexture& t, double z, double s,
                            const OpticsConfig& o, int w, int h) {
    const double sigma = defocus_level(z, s, o);
    const double mag = z / s;                  // sensor x maps to object -mag*x
    const double sigma_obj = std::abs(sigma) * mag;
    ScalarImage img(w, h, 0.0, o.pitch);
    const double cx = img.center_x(), cy = img.center_y();
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double ux = -mag * (x - cx) * o.pitch;
            const double uy = -mag * (y - cy) * o.pitch;
            img.at(x, y) = t.value_blurred(ux, uy, sigma_obj);
        }
    return img;
}

ScalarImage render_numerical(const Texture& texture, double z, double s,
                             const OpticsConfig& o, int w, int h) {
    const double sigma = defocus_level(z, s, o);
    const double mag = z / s;
    ScalarImage pinhole(w, h, 0.0, o.pitch);
    const double cx = pinhole.center_x(), cy = pinhole.center_y();
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double ux = -mag * (x - cx) * o.pitch;
            const double uy = -mag * (y - cy) * o.pitch;
            pinhole.at(x, y) = std::visit(
                [&](const auto& t) {
                    if constexpr (std::is_same_v<std::decay_t<decltype(t)>, ProceduralTexture>)
                        return t.value(ux, uy);
                    else
                        return t.sample(ux, uy);
                },
                texture);
        }
    Kernel psf = make_psf(sigma, o.psf_model, o.pitch);
    if (psf.radius == 0) return pinhole;
    return convolve(pinhole, psf, BoundaryMode::Replicate);
}

} // namespace

ScalarImage render_sensor(const Texture& texture, double z, double s,
                          const OpticsConfig& o, int width, int height,
                          RenderMethod method) {
    if (!(z > 0.0)) throw std::invalid_argument("render: Z must be positive");
    check_aliasing(texture, z, s, o);
    const bool analytic_ok = o.psf_model == PsfModel::Gaussian &&
                             std::holds_alternative<ProceduralTexture>(texture);
    if (method == RenderMethod::Auto)
        method = analytic_ok ? RenderMethod::Analytic : RenderMethod::Numerical;
    if (method == RenderMethod::Analytic) {
        if (!analytic_ok)
            throw std::invalid_argument(
                "render: analytic path needs a Gaussian PSF and a procedural texture");
        return render_analytic(std::get<ProceduralTexture>(texture), z, s, o, width, height);
    }
    return render_numerical(texture, z, s, o, width, height);
}

RenderedPair render_pair(const SceneSpec& scene, const OpticsConfig& optics,
                         const NoiseSpec& noise, RenderMethod method) {
    if (!(scene.z > 0.0)) throw std::invalid_argument("render: Z must be positive");
    if (scene.width < 3 || scene.height < 3)
        throw std::invalid_argument("render: image too small");

    const SceneSpec second = apply_motion(scene);

    if (method == RenderMethod::Auto) {
        const bool analytic_ok = optics.psf_model == PsfModel::Gaussian &&
                                 std::holds_alternative<ProceduralTexture>(scene.texture);
        method = analytic_ok ? RenderMethod::Analytic : RenderMethod::Numerical;
    }
    RenderedPair out;
    out.i1 = render_sensor(scene.texture, scene.z, optics.s1, optics, scene.width,
                           scene.height, method);
    out.i2 = render_sensor(second.texture, second.z, optics.s2, optics, scene.width,
                           scene.height, method);
    out.method_used = method;
    out.sigma1 = defocus_level(scene.z, optics.s1, optics);
    out.sigma2 = defocus_level(scene.z, optics.s2, optics);
    out.truth = ScalarImage(scene.width, scene.height, scene.z, optics.pitch);

    if (noise.gaussian_std > 0.0) {
        // Sensor-referred noise: a fraction of the nominal unit range, the
        // same at every depth no matter how flat the blurred scene gets.
        const double std_abs = noise.gaussian_std;
        // Stream keyed by the sensor distance: equal distances see equal noise.
        const uint64_t st1 = std::bit_cast<uint64_t>(optics.s1);
        const uint64_t st2 = std::bit_cast<uint64_t>(optics.s2);
        for (int y = 0; y < scene.height; ++y)
            for (int x = 0; x < scene.width; ++x) {
                out.i1.at(x, y) += std_abs * counter_gaussian(noise.seed, st1, x, y);
                out.i2.at(x, y) += std_abs * counter_gaussian(noise.seed, st2, x, y);
            }
    }
    const double lo = std::min(image_min(out.i1), image_min(out.i2));
    const double hi = std::max(image_max(out.i1), image_max(out.i2));
    out.range_lo = lo;
    out.range_hi = hi > lo ? hi : lo + 1.0;
    return out;
}

// ---------------------------------------------------------------------------
// Analytic aligned-image oracles
// ---------------------------------------------------------------------------
//
// Aligned to the consensus distance c, the image of a plane at distance z is
// the consensus pinhole image blurred by sigma_obj(s) = |sigma(s)| * z / s in
// object units. Its s-derivative follows from
//   d(sigma_obj^2)/ds = -2 z^2 sigma A / s^3.

ScalarImage analytic_aligned_image(const ProceduralTexture& t, double z,
                                   const OpticsConfig& o, double s, int w, int h,
                                   double coord_scale) {
    const double sigma = defocus_level(z, s, o);
    const double sigma_obj = std::abs(sigma) * z / s;
    ScalarImage img(w, h, 0.0, o.pitch);
    const double magc = z / o.c() * coord_scale;
    const double cx = img.center_x(), cy = img.center_y();
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double ux = -magc * (x - cx) * o.pitch;
            const double uy = -magc * (y - cy) * o.pitch;
            img.at(x, y) = t.value_blurred(ux, uy, sigma_obj);
        }
    return img;
}

ScalarImage analytic_aligned_ds(const ProceduralTexture& t, double z,
                                const OpticsConfig& o, int w, int h,
                                double coord_scale) {
    const double c = o.c();
    const double sigma = defocus_level(z, c, o);
    const double sigma_obj2 = sigma * sigma * z * z / (c * c);
    const double dsig2_ds = -2.0 * z * z * sigma * o.aperture_std / (c * c * c);
    ScalarImage img(w, h, 0.0, o.pitch);
    const double magc = z / c * coord_scale;
    const double cx = img.center_x(), cy = img.center_y();
    const double two_pi2 = 2.0 * M_PI * M_PI;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double ux = -magc * (x - cx) * o.pitch;
            const double uy = -magc * (y - cy) * o.pitch;
            double acc = 0.0;
            for (const auto& comp : t.components) {
                const double f2 = comp.fx * comp.fx + comp.fy * comp.fy;
                acc += comp.amp * std::exp(-two_pi2 * sigma_obj2 * f2) *
                       (-two_pi2 * f2 * dsig2_ds) *
                       std::sin(2.0 * M_PI * (comp.fx * ux + comp.fy * uy) + comp.phase);
            }
            img.at(x, y) = acc;
        }
    return img;
}

ScalarImage analytic_aligned_lap(const ProceduralTexture& t, double z,
                                 const OpticsConfig& o, int w, int h,
                                 double coord_scale) {
    const double c = o.c();
    const double sigma = defocus_level(z, c, o);
    const double sigma_obj2 = sigma * sigma * z * z / (c * c);
    ScalarImage img(w, h, 0.0, o.pitch);
    const double magc = z / c;                   // consensus magnification
    const double pos_scale = magc * coord_scale; // sample-position mapping only
    const double cx = img.center_x(), cy = img.center_y();
    const double two_pi2 = 2.0 * M_PI * M_PI;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double ux = -pos_scale * (x - cx) * o.pitch;
            const double uy = -pos_scale * (y - cy) * o.pitch;
            double acc = 0.0;
            for (const auto& comp : t.components) {
                const double f2 = comp.fx * comp.fx + comp.fy * comp.fy;
                // frequency on the consensus sensor plane is magc * f
                acc += comp.amp * std::exp(-two_pi2 * sigma_obj2 * f2) *
                       (-4.0 * M_PI * M_PI * magc * magc * f2) *
                       std::sin(2.0 * M_PI * (comp.fx * ux + comp.fy * uy) + comp.phase);
            }
            img.at(x, y) = acc;
        }
    return img;
}

// ---------------------------------------------------------------------------
// Scaled-PSF derivative identity
// ---------------------------------------------------------------------------

namespace {

// Scaled PSF: (s/c)^2 k((s/c) x; sigma(s)) with k the normalized Gaussian.
double scaled_psf(double r2, double s, double c, double sigma) {
    const double q = (s / c) * (s / c);
    return q / (2.0 * M_PI * sigma * sigma) * std::exp(-q * r2 / (2.0 * sigma * sigma));
}

} // namespace

PsfCheckReport scaled_psf_derivative_check(const OpticsConfig& o, double z, double eps_s,
                                           double fault_scale) {
    if (o.psf_model != PsfModel::Gaussian)
        throw std::invalid_argument("scaled_psf_derivative_check: Gaussian model only");
    if (!(eps_s > 0.0))
        throw std::invalid_argument("scaled_psf_derivative_check: eps must be positive");

    const double c = o.c();
    const double s = c; // the identity is checked at the consensus point
    const double sigma = defocus_level(z, s, o);
    const double sig_lo = defocus_level(z, s - eps_s, o);
    const double sig_hi = defocus_level(z, s + eps_s, o);
    if (sigma == 0.0 || sig_lo * sig_hi <= 0.0 ||
        std::abs(sigma) < 1e3 * eps_s * std::abs(o.aperture_std * (1.0 / z - o.rho())))
        throw std::invalid_argument(
            "scaled_psf_derivative_check: defocus level too small for stable finite "
            "differences; move Z away from the conjugate plane or enlarge sigma");

    const double a_ref = o.aperture_std * fault_scale;
    const double support = 4.0 * std::abs(sigma) * (c / s);
    const int n = 33;

    PsfCheckReport rep;
    double peak_ref = 0.0, peak_ks = 0.0;
    std::vector<double> fd(n * n), ref(n * n), ks_closed(n * n), gap(n * n);
    int idx = 0;
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix, ++idx) {
            const double x = (2.0 * ix / (n - 1) - 1.0) * support;
            const double y = (2.0 * iy / (n - 1) - 1.0) * support;
            const double r2 = x * x + y * y;

            fd[idx] = (scaled_psf(r2, s + eps_s, c, sig_hi) -
                       scaled_psf(r2, s - eps_s, c, sig_lo)) / (2.0 * eps_s);

            const double psi = -s * s * r2 / (2.0 * c * c * sigma * sigma);
            const double e = std::exp(psi);
            const double lap_closed = -(2.0 + 2.0 * psi) *
                                      std::pow(s, 4) / (std::pow(c, 4) * std::pow(sigma, 4)) *
                                      e / (2.0 * M_PI);
            ks_closed[idx] = (2.0 + 2.0 * psi) * s * o.aperture_std /
                             (c * c * sigma * sigma * sigma) * e / (2.0 * M_PI);
            ref[idx] = -(c * c * sigma * a_ref) / (s * s * s) * lap_closed;
            gap[idx] = std::abs(ks_closed[idx] - ref[idx]);
            peak_ref = std::max(peak_ref, std::abs(ref[idx]));
            peak_ks = std::max(peak_ks, std::abs(ks_closed[idx]));
        }

    // Both sides share a zero ring (psi = -1); relative error is measured
    // against the local value where significant and against the field peak
    // near the ring.
    for (int i = 0; i < n * n; ++i) {
        const double den = std::max(std::abs(ref[i]), 1e-3 * peak_ref);
        rep.max_rel_error_fd = std::max(rep.max_rel_error_fd, std::abs(fd[i] - ref[i]) / den);
        rep.max_closed_form_gap =
            std::max(rep.max_closed_form_gap, gap[i] / std::max(peak_ks, 1e-300));
    }
    rep.points = n * n;
    return rep;
}

} // namespace dfd
