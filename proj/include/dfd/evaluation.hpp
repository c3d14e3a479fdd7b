#pragma once

#include <limits>
#include <string>
#include <vector>

#include "dfd/calibration.hpp"
#include "dfd/pipeline.hpp"
#include "dfd/simulator.hpp"

namespace dfd {

/// Mean absolute depth error over the valid pixels, meters.
/// Throws if no pixel is valid.
double mae(const DepthResult& res, const ScalarImage& truth);

struct WorkingRange {
    double lo = 0.0;
    double hi = 0.0;
    double length() const { return hi > lo ? hi - lo : 0.0; }
    bool empty() const { return !(hi > lo); }
};

/// Largest contiguous depth interval of the (Z, MAE) curve where
/// MAE < 5% of Z, with linear interpolation at the crossings. Needs at
/// least 3 samples with strictly increasing Z.
WorkingRange working_range(const std::vector<std::pair<double, double>>& curve);

// ---------------------------------------------------------------------------
// Experiment harness
// ---------------------------------------------------------------------------

/// Band-noise texture recipe; frequencies given on the consensus pixel grid.
struct TextureBand {
    double f_lo_px = 0.02;
    double f_hi_px = 0.05;
    int components = 16;
    double amplitude = 0.4;
};

/// Everything a synthetic experiment needs. Each run derives all texture
/// and noise seeds from `seed`, so repeated runs match bit-exactly.
struct ExperimentSetup {
    OpticsConfig optics;
    PipelineParams pipeline;
    TextureBand texture;
    NoiseSpec noise;
    std::vector<double> calib_depths = {0.55, 0.65, 0.75, 0.9, 1.1, 1.3};
    std::vector<double> eval_depths = {0.62, 0.72, 0.85, 1.0, 1.15};
    int width = 192;
    int height = 192;
    int calib_trials = 2;
    uint64_t seed = 1;
    // false studies the bare estimators on raw renders (formula-level
    // comparisons); true runs the full preprocessing chain.
    bool preprocess = true;
};

enum class Estimator { Aligned, Legacy };

/// Pointwise derivative ratios from noiseless renders at the calibration
/// distances, ready for calibrate_ab. For the legacy estimator the ratio
/// includes the d-term from setup.pipeline.d.
std::vector<CalibSample> collect_calibration_samples(const ExperimentSetup& setup,
                                                     Estimator est);

/// Calibrates and, for the aligned estimator, installs (a, b) into
/// setup.pipeline.
CalibrationRecord calibrate_setup(ExperimentSetup& setup, Estimator est = Estimator::Aligned);

/// Scene MAE of one synthetic capture for the three estimators.
struct SceneErrors {
    double mae_pointwise = std::numeric_limits<double>::quiet_NaN();
    double mae_windowed = std::numeric_limits<double>::quiet_NaN();
    double mae_old = std::numeric_limits<double>::quiet_NaN();
};

/// Renders one scene and evaluates the calibrated estimators. `legacy`
/// supplies the legacy (a, b) when mae_old is wanted. A zero `sparsity`
/// evaluates the full map.
SceneErrors evaluate_scene(const ExperimentSetup& setup, const SceneSpec& scene,
                           const NoiseSpec& noise, const CalibrationRecord* legacy = nullptr,
                           RenderMethod method = RenderMethod::Auto);

/// Pointwise confidence-decile curve: MAE per decile of the per-scene
/// normalized derivative |is| / max|is|, deciles ordered by increasing
/// magnitude. Pools valid pixels over `trials` scenes per depth.
std::vector<std::pair<double, double>> confidence_mae_bins(const ExperimentSetup& setup,
                                                           const std::vector<double>& depths,
                                                           int trials, int bins = 10);

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

enum class SweepAxis {
    Depth,
    DeltaS,
    Noise,
    Sparsity,
    LateralMm,
    AxialMm,
    RotationDeg,
    PsfModelAxis,
    Snr // produced by snr_curves; not runnable through sweep()
};

std::string to_string(SweepAxis axis);
SweepAxis sweep_axis_from_string(const std::string& s);

struct SweepSample {
    double value = 0.0;
    double mae_pointwise = std::numeric_limits<double>::quiet_NaN();
    double mae_windowed = std::numeric_limits<double>::quiet_NaN();
    double mae_old = std::numeric_limits<double>::quiet_NaN();
    WorkingRange wr;
    bool has_wr = false;
    double snr_is = std::numeric_limits<double>::quiet_NaN();
    double snr_lap = std::numeric_limits<double>::quiet_NaN();
    int trials = 0;
};

struct SweepResult {
    SweepAxis axis = SweepAxis::Depth;
    std::vector<SweepSample> samples;
};

/// One row per axis sample. Columns:
/// axis,value,mae_pointwise,mae_windowed,mae_old,wr_lo,wr_hi,wr_len,snr_is,snr_lap,trials
void write_sweep_csv(const std::string& path, const SweepResult& result);

struct SweepSpec {
    SweepAxis axis = SweepAxis::Depth;
    std::vector<double> values; // strictly increasing
    int trials = 5;
    ExperimentSetup setup;
    bool run_legacy = false; // also evaluate the legacy estimator (DeltaS does anyway)
};

/// Runs render -> pipeline -> mae across the axis. DeltaS recalibrates both
/// estimators per value; Sparsity reuses one render set across values and
/// reports working ranges; the motion axes emulate sequential capture.
SweepResult sweep(const SweepSpec& spec);

struct SnrOptions {
    double cap = 1e6;            // sentinel for exact agreement
    bool lap_numerator_is = true; // verbatim form; false puts the Laplacian on top
    int margin = 16;             // border pixels excluded
    // true: the pair is rendered directly on the consensus grid, isolating
    // finite-difference and noise error; false: the full measurement path
    // with bilinear alignment of sensor 1 onto sensor 2.
    bool prealigned = true;
};

/// Median per-depth SNR of the finite-difference derivative estimates
/// against the closed-form derivatives of the generator texture.
SweepResult snr_curves(const ExperimentSetup& setup, const std::vector<double>& z_grid,
                       const SnrOptions& options = {});

} // namespace dfd
