#include "dfd/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace dfd {

namespace {

uint64_t mix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

uint64_t seed_for(uint64_t master, uint64_t salt, uint64_t i, uint64_t j = 0) {
    return mix64(master ^ mix64(salt ^ mix64(i ^ mix64(j))));
}

double nan_() { return std::numeric_limits<double>::quiet_NaN(); }

void mask_border(DepthResult& r, int margin) {
    if (margin <= 0) return;
    for (int y = 0; y < r.valid.height(); ++y)
        for (int x = 0; x < r.valid.width(); ++x)
            if (x < margin || y < margin || x >= r.valid.width() - margin ||
                y >= r.valid.height() - margin)
                r.valid.set(x, y, false);
}

double median(std::vector<double>& v) {
    if (v.empty()) return nan_();
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

DepthLimits limits_for(const PipelineParams& p, const DerivativeField& f) {
    DepthLimits lim;
    lim.z_min = p.z_min;
    lim.z_max = p.z_max;
    const double pitch = f.is.pitch();
    lim.lap_eps = p.lap_eps_scale * f.source_range / (pitch * pitch);
    return lim;
}

struct PreprocessedPair {
    ScalarImage g1, g2;
    ScalarImage truth;
};

PreprocessedPair preprocess(const RenderedPair& pair, const ExperimentSetup& setup) {
    PreprocessedPair out;
    if (setup.preprocess) {
        out.g1 = denoise(highpass(pair.i1, setup.pipeline.highpass_size),
                         setup.pipeline.denoise_std);
        out.g2 = denoise(highpass(pair.i2, setup.pipeline.highpass_size),
                         setup.pipeline.denoise_std);
    } else {
        out.g1 = pair.i1;
        out.g2 = pair.i2;
    }
    out.truth = pair.truth;
    return out;
}

} // namespace

double mae(const DepthResult& res, const ScalarImage& truth) {
    if (!res.depth.same_dims(truth))
        throw std::invalid_argument("mae: dimension mismatch");
    double acc = 0.0;
    size_t n = 0;
    for (int y = 0; y < truth.height(); ++y)
        for (int x = 0; x < truth.width(); ++x)
            if (res.valid.at(x, y)) {
                acc += std::abs(res.depth.at(x, y) - truth.at(x, y));
                ++n;
            }
    if (n == 0) throw std::runtime_error("mae: no valid pixels");
    return acc / double(n);
}

WorkingRange working_range(const std::vector<std::pair<double, double>>& curve) {
    if (curve.size() < 3)
        throw std::invalid_argument("working_range: need at least 3 depth samples");
    for (size_t i = 1; i < curve.size(); ++i)
        if (!(curve[i].first > curve[i - 1].first))
            throw std::invalid_argument("working_range: depths must be strictly increasing");

    // g(z) = mae - 0.05 z; the range is where g < 0.
    auto g = [&](size_t i) { return curve[i].second - 0.05 * curve[i].first; };
    WorkingRange best;
    double cur_lo = 0.0;
    bool open = false;
    auto close_at = [&](double z_hi) {
        if (open && z_hi - cur_lo > best.length()) best = {cur_lo, z_hi};
        open = false;
    };
    for (size_t i = 0; i < curve.size(); ++i) {
        const bool inside = g(i) < 0.0;
        if (inside && !open) {
            if (i == 0) {
                cur_lo = curve[0].first;
            } else {
                const double t = g(i - 1) / (g(i - 1) - g(i)); // g crosses zero
                cur_lo = curve[i - 1].first + t * (curve[i].first - curve[i - 1].first);
            }
            open = true;
        } else if (!inside && open) {
            const double t = g(i - 1) / (g(i - 1) - g(i));
            close_at(curve[i - 1].first + t * (curve[i].first - curve[i - 1].first));
        }
    }
    close_at(curve.back().first);
    return best;
}

// ---------------------------------------------------------------------------
// Harness pieces
// ---------------------------------------------------------------------------

std::vector<CalibSample> collect_calibration_samples(const ExperimentSetup& setup,
                                                     Estimator est) {
    std::vector<CalibSample> data;
    const NoiseSpec noiseless{};
    for (size_t di = 0; di < setup.calib_depths.size(); ++di) {
        const double z = setup.calib_depths[di];
        CalibSample sample;
        sample.z_true = z;
        for (int t = 0; t < setup.calib_trials; ++t) {
            SceneSpec scene;
            scene.texture = band_noise_for(setup.optics, z, setup.texture.f_lo_px,
                                           setup.texture.f_hi_px, setup.texture.components,
                                           seed_for(setup.seed, 0xca11b, di, t),
                                           setup.texture.amplitude);
            scene.z = z;
            scene.width = setup.width;
            scene.height = setup.height;
            RenderedPair pair = render_pair(scene, setup.optics, noiseless);
            PreprocessedPair pp = preprocess(pair, setup);

            DerivativeField f =
                est == Estimator::Aligned
                    ? approx_derivatives(pp.g1, pp.g2,
                                         alignment_homography(setup.optics, setup.width,
                                                              setup.height),
                                         setup.pipeline.stencil)
                    : legacy_derivatives(pp.g1, pp.g2, setup.pipeline.d,
                                         setup.pipeline.stencil);
            const int m = std::max(setup.pipeline.border_margin, 1);

            // Ratios blow up where the Laplacian crosses zero; the windowed
            // estimator weights by lap^2, so calibration samples only where
            // the Laplacian carries weight.
            double lap_rms = 0.0;
            size_t n_lap = 0;
            for (int y = m; y < f.is.height() - m; ++y)
                for (int x = m; x < f.is.width() - m; ++x)
                    if (f.valid.at(x, y)) {
                        lap_rms += f.lap.at(x, y) * f.lap.at(x, y);
                        ++n_lap;
                    }
            lap_rms = n_lap ? std::sqrt(lap_rms / double(n_lap)) : 0.0;
            const double gate = 0.5 * lap_rms;
            for (int y = m; y < f.is.height() - m; y += 2)
                for (int x = m; x < f.is.width() - m; x += 2) {
                    if (!f.valid.at(x, y)) continue;
                    if (!(std::abs(f.lap.at(x, y)) >= gate) || gate == 0.0) continue;
                    sample.ratios.push_back(f.is.at(x, y) / f.lap.at(x, y));
                }
        }
        data.push_back(std::move(sample));
    }
    return data;
}

CalibrationRecord calibrate_setup(ExperimentSetup& setup, Estimator est) {
    CalibrationRecord rec = calibrate_ab(collect_calibration_samples(setup, est));
    rec.dataset_note = "synthetic band-noise planes, " +
                       std::to_string(setup.calib_trials) + " textures per distance";
    if (est == Estimator::Aligned) {
        setup.pipeline.a = rec.a;
        setup.pipeline.b = rec.b;
    }
    return rec;
}

SceneErrors evaluate_scene(const ExperimentSetup& setup, const SceneSpec& scene,
                           const NoiseSpec& noise, const CalibrationRecord* legacy,
                           RenderMethod method) {
    RenderedPair pair = render_pair(scene, setup.optics, noise, method);
    PreprocessedPair pp = preprocess(pair, setup);
    const PipelineParams& p = setup.pipeline;

    SceneErrors err;
    DerivativeField f = approx_derivatives(
        pp.g1, pp.g2, alignment_homography(setup.optics, scene.width, scene.height),
        p.stencil);
    const DepthLimits lim = limits_for(p, f);

    DepthResult win = depth_windowed(f, p.a, p.b, p.window, lim, p.window_summed_confidence);
    mask_border(win, p.border_margin);
    if (p.sparsity > 0.0) win = sparsity_filter(win, p.sparsity).result;
    err.mae_windowed = mae(win, pp.truth);

    DepthResult pw = depth_pointwise(f, p.a, p.b, lim);
    mask_border(pw, p.border_margin);
    if (p.sparsity > 0.0) pw = sparsity_filter(pw, p.sparsity).result;
    err.mae_pointwise = mae(pw, pp.truth);

    if (legacy) {
        DepthResult old = depth_old(pp.g1, pp.g2, legacy->a, legacy->b, p.d, p.window,
                                    p.stencil, lim);
        mask_border(old, p.border_margin);
        if (p.sparsity > 0.0) old = sparsity_filter(old, p.sparsity).result;
        err.mae_old = mae(old, pp.truth);
    }
    return err;
}

std::vector<std::pair<double, double>> confidence_mae_bins(const ExperimentSetup& setup,
                                                           const std::vector<double>& depths,
                                                           int trials, int bins) {
    // Pixels are ranked by the per-scene normalized derivative
    // |is| / max|is|, so captures of different contrast pool comparably.
    std::vector<std::pair<double, double>> pool; // (normalized |is|, |error|)
    for (size_t di = 0; di < depths.size(); ++di)
        for (int t = 0; t < trials; ++t) {
            SceneSpec scene;
            scene.texture = band_noise_for(setup.optics, depths[di], setup.texture.f_lo_px,
                                           setup.texture.f_hi_px, setup.texture.components,
                                           seed_for(setup.seed, 0xb145, di, t),
                                           setup.texture.amplitude);
            scene.z = depths[di];
            scene.width = setup.width;
            scene.height = setup.height;
            NoiseSpec noise = setup.noise;
            noise.seed = seed_for(setup.seed, 0xb146, di, t);
            RenderedPair pair = render_pair(scene, setup.optics, noise);
            PreprocessedPair pp = preprocess(pair, setup);
            DerivativeField f = approx_derivatives(
                pp.g1, pp.g2, alignment_homography(setup.optics, scene.width, scene.height),
                setup.pipeline.stencil);
            const DepthLimits lim = limits_for(setup.pipeline, f);
            DepthResult pw = depth_pointwise(f, setup.pipeline.a, setup.pipeline.b, lim);
            mask_border(pw, setup.pipeline.border_margin);
            double max_is = 0.0;
            for (int y = 0; y < pw.depth.height(); ++y)
                for (int x = 0; x < pw.depth.width(); ++x)
                    if (pw.valid.at(x, y))
                        max_is = std::max(max_is, std::abs(f.is.at(x, y)));
            if (max_is == 0.0) continue;
            for (int y = 0; y < pw.depth.height(); ++y)
                for (int x = 0; x < pw.depth.width(); ++x)
                    if (pw.valid.at(x, y))
                        pool.emplace_back(std::abs(f.is.at(x, y)) / max_is,
                                          std::abs(pw.depth.at(x, y) - depths[di]));
        }
    if (pool.size() < size_t(bins))
        throw std::runtime_error("confidence_mae_bins: not enough valid pixels");
    std::sort(pool.begin(), pool.end());
    std::vector<std::pair<double, double>> out;
    const size_t per = pool.size() / bins;
    for (int b = 0; b < bins; ++b) {
        const size_t lo = b * per;
        const size_t hi = (b == bins - 1) ? pool.size() : lo + per;
        double mean_is = 0.0, mean_err = 0.0;
        for (size_t i = lo; i < hi; ++i) {
            mean_is += pool[i].first;
            mean_err += pool[i].second;
        }
        out.emplace_back(mean_is / double(hi - lo), mean_err / double(hi - lo));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

std::string to_string(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::Depth: return "depth";
        case SweepAxis::DeltaS: return "delta_s";
        case SweepAxis::Noise: return "noise";
        case SweepAxis::Sparsity: return "sparsity";
        case SweepAxis::LateralMm: return "lateral_mm";
        case SweepAxis::AxialMm: return "axial_mm";
        case SweepAxis::RotationDeg: return "rotation_deg";
        case SweepAxis::PsfModelAxis: return "psf_model";
        case SweepAxis::Snr: return "snr";
    }
    return "?";
}

SweepAxis sweep_axis_from_string(const std::string& s) {
    for (SweepAxis a : {SweepAxis::Depth, SweepAxis::DeltaS, SweepAxis::Noise,
                        SweepAxis::Sparsity, SweepAxis::LateralMm, SweepAxis::AxialMm,
                        SweepAxis::RotationDeg, SweepAxis::PsfModelAxis, SweepAxis::Snr})
        if (to_string(a) == s) return a;
    throw std::invalid_argument("unknown sweep axis '" + s + "'");
}

void write_sweep_csv(const std::string& path, const SweepResult& result) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error(path + ": cannot open for writing");
    f << "# one row per axis sample; mae in meters; wr_* the 5%-criterion working range;\n"
         "# snr columns populated by depth-axis SNR runs; empty-capable fields print nan\n";
    f << "axis,value,mae_pointwise,mae_windowed,mae_old,wr_lo,wr_hi,wr_len,snr_is,snr_lap,"
         "trials\n";
    char buf[256];
    for (const auto& s : result.samples) {
        std::snprintf(buf, sizeof buf,
                      "%s,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%d\n",
                      to_string(result.axis).c_str(), s.value, s.mae_pointwise,
                      s.mae_windowed, s.mae_old, s.has_wr ? s.wr.lo : nan_(),
                      s.has_wr ? s.wr.hi : nan_(), s.has_wr ? s.wr.length() : nan_(),
                      s.snr_is, s.snr_lap, s.trials);
        f << buf;
    }
    if (!f) throw std::runtime_error(path + ": short write");
}

namespace {

SceneSpec make_eval_scene(const ExperimentSetup& setup, double z, uint64_t tex_seed) {
    SceneSpec scene;
    scene.texture = band_noise_for(setup.optics, z, setup.texture.f_lo_px,
                                   setup.texture.f_hi_px, setup.texture.components,
                                   tex_seed, setup.texture.amplitude);
    scene.z = z;
    scene.width = setup.width;
    scene.height = setup.height;
    return scene;
}

SweepSample averaged_sample(const ExperimentSetup& setup, double value,
                            const std::vector<SceneErrors>& errs) {
    (void)setup;
    SweepSample s;
    s.value = value;
    s.trials = int(errs.size());
    double pw = 0, win = 0, old = 0;
    int n_old = 0;
    for (const auto& e : errs) {
        pw += e.mae_pointwise;
        win += e.mae_windowed;
        if (std::isfinite(e.mae_old)) {
            old += e.mae_old;
            ++n_old;
        }
    }
    s.mae_pointwise = pw / double(errs.size());
    s.mae_windowed = win / double(errs.size());
    s.mae_old = n_old ? old / n_old : nan_();
    return s;
}

SweepResult sweep_delta_s(const SweepSpec& spec) {
    SweepResult result{SweepAxis::DeltaS, {}};
    const double c0 = spec.setup.optics.c();
    for (size_t vi = 0; vi < spec.values.size(); ++vi) {
        const double ds = spec.values[vi];
        ExperimentSetup setup = spec.setup;
        setup.optics.s1 = c0 + 0.5 * ds;
        setup.optics.s2 = c0 - 0.5 * ds;
        setup.optics.consensus = 0.0; // midpoint, i.e. c0
        // Legacy magnification constant: the printed 1/s^2 unless the caller
        // supplied one. A first-order-consistent choice for raw frame
        // differences with metric coordinates is ds/s instead.
        if (setup.pipeline.d == 0.0) setup.pipeline.d = 1.0 / (c0 * c0);
        setup.seed = seed_for(spec.setup.seed, 0xd5, vi);

        CalibrationRecord rec_new = calibrate_setup(setup, Estimator::Aligned);
        CalibrationRecord rec_old = calibrate_ab(
            collect_calibration_samples(setup, Estimator::Legacy));
        (void)rec_new;

        std::vector<SceneErrors> errs;
        const NoiseSpec noiseless{};
        for (int t = 0; t < spec.trials; ++t) {
            const double z = setup.eval_depths[t % setup.eval_depths.size()];
            SceneSpec scene = make_eval_scene(setup, z, seed_for(setup.seed, 0xe7a1, vi, t));
            errs.push_back(evaluate_scene(setup, scene, noiseless, &rec_old));
        }
        result.samples.push_back(averaged_sample(setup, ds, errs));
    }
    return result;
}

SweepResult sweep_sparsity(const SweepSpec& spec) {
    SweepResult result{SweepAxis::Sparsity, {}};
    const ExperimentSetup& setup = spec.setup;

    // One render per (depth, trial); every sparsity level filters the same
    // depth maps, so the comparison is paired.
    struct Entry {
        double z;
        DepthResult res;
    };
    std::vector<Entry> cache;
    for (size_t di = 0; di < setup.eval_depths.size(); ++di)
        for (int t = 0; t < spec.trials; ++t) {
            const double z = setup.eval_depths[di];
            SceneSpec scene = make_eval_scene(setup, z, seed_for(setup.seed, 0x59a2, di, t));
            NoiseSpec noise = setup.noise;
            noise.seed = seed_for(setup.seed, 0x59a3, di, t);
            RenderedPair pair = render_pair(scene, setup.optics, noise);
            PreprocessedPair pp = preprocess(pair, setup);
            DerivativeField f = approx_derivatives(
                pp.g1, pp.g2, alignment_homography(setup.optics, scene.width, scene.height),
                setup.pipeline.stencil);
            DepthResult win =
                depth_windowed(f, setup.pipeline.a, setup.pipeline.b, setup.pipeline.window,
                               limits_for(setup.pipeline, f),
                               setup.pipeline.window_summed_confidence);
            mask_border(win, setup.pipeline.border_margin);
            cache.push_back({z, std::move(win)});
        }

    for (double sparsity : spec.values) {
        std::vector<std::pair<double, double>> curve; // (z, mae)
        double total = 0.0;
        int n = 0;
        for (size_t di = 0; di < setup.eval_depths.size(); ++di) {
            double acc = 0.0;
            int cnt = 0;
            for (const auto& e : cache) {
                if (e.z != setup.eval_depths[di]) continue;
                const double m = mae(sparsity_filter(e.res, sparsity).result,
                                     ScalarImage(e.res.depth.width(), e.res.depth.height(),
                                                 e.z, e.res.depth.pitch()));
                acc += m;
                ++cnt;
            }
            curve.emplace_back(setup.eval_depths[di], acc / cnt);
            total += acc;
            n += cnt;
        }
        SweepSample s;
        s.value = sparsity;
        s.trials = spec.trials;
        s.mae_windowed = total / n;
        s.wr = working_range(curve);
        s.has_wr = true;
        result.samples.push_back(s);
    }
    return result;
}

SweepResult sweep_motion(const SweepSpec& spec) {
    SweepResult result{spec.axis, {}};
    const ExperimentSetup& setup = spec.setup;
    for (size_t vi = 0; vi < spec.values.size(); ++vi) {
        const double v = spec.values[vi];
        std::vector<SceneErrors> errs;
        for (int t = 0; t < spec.trials; ++t) {
            const double z = setup.eval_depths[t % setup.eval_depths.size()];
            SceneSpec scene = make_eval_scene(setup, z, seed_for(setup.seed, 0x307, vi, t));
            if (spec.axis == SweepAxis::LateralMm)
                scene.motion.lateral_x = v * 1e-3;
            else if (spec.axis == SweepAxis::AxialMm)
                scene.motion.axial = v * 1e-3;
            else
                scene.motion.rot_z = v * M_PI / 180.0;
            NoiseSpec noise = setup.noise;
            noise.seed = seed_for(setup.seed, 0x308, vi, t);
            errs.push_back(evaluate_scene(setup, scene, noise));
        }
        result.samples.push_back(averaged_sample(setup, v, errs));
    }
    return result;
}

SweepResult sweep_psf_model(const SweepSpec& spec) {
    SweepResult result{SweepAxis::PsfModelAxis, {}};
    for (size_t vi = 0; vi < spec.values.size(); ++vi) {
        ExperimentSetup setup = spec.setup;
        setup.optics.psf_model = spec.values[vi] < 0.5 ? PsfModel::Gaussian
                                                       : PsfModel::Pillbox;
        std::vector<SceneErrors> errs;
        for (int t = 0; t < spec.trials; ++t) {
            const double z = setup.eval_depths[t % setup.eval_depths.size()];
            // Same texture seeds for both models: paired scenes.
            SceneSpec scene = make_eval_scene(setup, z, seed_for(setup.seed, 0xf4d, 0, t));
            NoiseSpec noise = setup.noise;
            noise.seed = seed_for(setup.seed, 0xf4e, 0, t);
            errs.push_back(evaluate_scene(setup, scene, noise, nullptr,
                                          RenderMethod::Numerical));
        }
        result.samples.push_back(averaged_sample(setup, spec.values[vi], errs));
    }
    return result;
}

SweepResult sweep_simple(const SweepSpec& spec) {
    SweepResult result{spec.axis, {}};
    const ExperimentSetup& setup = spec.setup;
    for (size_t vi = 0; vi < spec.values.size(); ++vi) {
        const double v = spec.values[vi];
        std::vector<SceneErrors> errs;
        for (int t = 0; t < spec.trials; ++t) {
            const double z = spec.axis == SweepAxis::Depth
                                 ? v
                                 : setup.eval_depths[t % setup.eval_depths.size()];
            SceneSpec scene = make_eval_scene(setup, z, seed_for(setup.seed, 0x511, vi, t));
            NoiseSpec noise = setup.noise;
            if (spec.axis == SweepAxis::Noise) noise.gaussian_std = v;
            noise.seed = seed_for(setup.seed, 0x512, vi, t);
            errs.push_back(evaluate_scene(setup, scene, noise));
        }
        result.samples.push_back(averaged_sample(setup, v, errs));
    }
    return result;
}

} // namespace

SweepResult sweep(const SweepSpec& spec) {
    for (size_t i = 1; i < spec.values.size(); ++i)
        if (!(spec.values[i] > spec.values[i - 1]))
            throw std::invalid_argument("sweep: axis values must be strictly increasing");
    if (spec.values.empty()) return SweepResult{spec.axis, {}};

    switch (spec.axis) {
        case SweepAxis::DeltaS: return sweep_delta_s(spec);
        case SweepAxis::Sparsity: return sweep_sparsity(spec);
        case SweepAxis::LateralMm:
        case SweepAxis::AxialMm:
        case SweepAxis::RotationDeg: return sweep_motion(spec);
        case SweepAxis::PsfModelAxis: return sweep_psf_model(spec);
        case SweepAxis::Depth:
        case SweepAxis::Noise: return sweep_simple(spec);
        case SweepAxis::Snr:
            throw std::invalid_argument("sweep: the snr axis runs through snr_curves");
    }
    throw std::logic_error("sweep: unhandled axis");
}

SweepResult snr_curves(const ExperimentSetup& setup, const std::vector<double>& z_grid,
                       const SnrOptions& options) {
    for (size_t i = 1; i < z_grid.size(); ++i)
        if (!(z_grid[i] > z_grid[i - 1]))
            throw std::invalid_argument("snr_curves: depth grid must be strictly increasing");
    SweepResult result{SweepAxis::Snr, {}};
    const OpticsConfig& o = setup.optics;
    // Pixel coordinates of the measured maps expressed in consensus units.
    const double kappa = options.prealigned ? 1.0 : o.c() / o.s2;
    const Homography h = alignment_homography(o, setup.width, setup.height);

    for (size_t zi = 0; zi < z_grid.size(); ++zi) {
        const double z = z_grid[zi];
        SceneSpec scene = make_eval_scene(setup, z, seed_for(setup.seed, 0x5e2, zi));
        NoiseSpec noise = setup.noise;
        noise.seed = seed_for(setup.seed, 0x5e3, zi);
        const ProceduralTexture& tex = std::get<ProceduralTexture>(scene.texture);

        ScalarImage m1(setup.width, setup.height), m2(setup.width, setup.height);
        MaskImage valid(setup.width, setup.height, true);
        if (options.prealigned) {
            // Simulation can form the magnification-aligned pair directly,
            // so only the finite difference and the noise remain.
            m1 = analytic_aligned_image(tex, z, o, o.s1, setup.width, setup.height);
            m2 = analytic_aligned_image(tex, z, o, o.s2, setup.width, setup.height);
            if (noise.gaussian_std > 0.0) {
                const double std_abs = noise.gaussian_std; // sensor-referred
                const uint64_t st1 = 0x51ULL, st2 = 0x52ULL;
                for (int y = 0; y < setup.height; ++y)
                    for (int x = 0; x < setup.width; ++x) {
                        m1.at(x, y) += std_abs * counter_gaussian(noise.seed, st1, x, y);
                        m2.at(x, y) += std_abs * counter_gaussian(noise.seed, st2, x, y);
                    }
            }
            m1.set_pitch(o.pitch);
            m2.set_pitch(o.pitch);
        } else {
            RenderedPair pair = render_pair(scene, o, noise);
            WarpResult w1 = warp(pair.i1, h);
            m1 = std::move(w1.image);
            m2 = std::move(pair.i2);
            valid = std::move(w1.valid);
        }

        ScalarImage avg(setup.width, setup.height, 0.0, o.pitch);
        for (size_t i = 0; i < avg.size(); ++i) avg[i] = 0.5 * (m1[i] + m2[i]);
        ScalarImage lap_grid = laplacian(avg, setup.pipeline.stencil);

        ScalarImage ref_is = analytic_aligned_ds(tex, z, o, setup.width, setup.height, kappa);
        ScalarImage ref_lap =
            analytic_aligned_lap(tex, z, o, setup.width, setup.height, kappa);

        const double inv_ds = 1.0 / (o.s1 - o.s2);
        const double inv_k2 = 1.0 / (kappa * kappa);
        std::vector<double> snr_is, snr_lap;
        const int m = options.margin;
        for (int y = m; y < setup.height - m; ++y)
            for (int x = m; x < setup.width - m; ++x) {
                if (!valid.at(x, y)) continue;
                const double is_meas = (m1.at(x, y) - m2.at(x, y)) * inv_ds;
                const double lap_meas = lap_grid.at(x, y) * inv_k2;
                const double e_is = std::abs(ref_is.at(x, y) - is_meas);
                const double e_lap = std::abs(ref_lap.at(x, y) - lap_meas);
                if (e_is > 0.0)
                    snr_is.push_back(std::min(std::abs(ref_is.at(x, y)) / e_is, options.cap));
                const double num = options.lap_numerator_is ? ref_is.at(x, y)
                                                            : ref_lap.at(x, y);
                if (e_lap > 0.0)
                    snr_lap.push_back(std::min(std::abs(num) / e_lap, options.cap));
            }
        SweepSample s;
        s.value = z;
        s.trials = 1;
        s.snr_is = snr_is.empty() ? options.cap : median(snr_is);
        s.snr_lap = snr_lap.empty() ? options.cap : median(snr_lap);
        result.samples.push_back(s);
    }
    return result;
}

} // namespace dfd
