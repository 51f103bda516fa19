#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "whisker/defaults.hpp"
#include "whisker/dsp.hpp"
#include "whisker/localization.hpp"
#include "whisker/sensor_model.hpp"

namespace whisker::experiment {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Kind {
    static_sweep,
    fatigue,
    freq_sweep,
    longitudinal_sweep,
    transverse_sweep,
    localize,
    fit_defaults,
};

std::string to_string(Kind kind);
Kind kind_from_string(const std::string& name);

struct DspConfig {
    double analysis_rate_hz = 100.0;
    double window_s = 10.0;
    double hop_s = 10.0;
    std::string window = "hann";
    double peak_halfwidth_hz = 1.0;
};

struct StaticSweepParams {
    double max_force_n = 0.18;
    int steps = 10;
};

struct FatigueParams {
    std::uint64_t cycles = 10000;
    double stroke_freq_hz = 1.5;
    double sample_rate_hz = 100.0;
    double load_amplitude_n = 0.18;
    std::array<double, 4> drift_ppm_per_cycle{2.0, 0.0, 1.1, 0.0};
    bool emit_record = false;
};

struct FreqSweepParams {
    double lo_hz = 1.0;
    double hi_hz = 45.0;  // validated DSP envelope; raise analysis_rate_hz to go higher
    double step_hz = 0.5;
    double offset_span_hz = 0.25;  // uniform off-bin offsets, clamped to [lo, hi]
    double duration_s = 10.8;
    std::string drive = "diagonal";  // all four channels carry the tone
};

struct LongitudinalSweepParams {
    std::vector<double> l_mm{10.0, 15.0, 20.0, 25.0, 30.0, 40.0, 50.0};
    double f_hz = 10.0;
    double duration_s = 10.8;
};

struct TransverseSweepParams {
    std::vector<double> t_mm{-30.0, -25.0, -20.0, -15.0, -10.0, -5.0, 0.0,
                             5.0,   10.0,  15.0,  20.0,  25.0,  30.0};
    double l_mm = 20.0;
    double f_hz = 10.0;
    double duration_s = 10.8;
};

struct LocalizeParams {
    std::string record;  // record CSV to ingest; empty when amplitudes_v given
    std::array<double, 4> amplitudes_v{};
    bool has_amplitudes = false;
    double frequency_hz = 0.0;        // used with amplitudes_v
    std::string hypotheses = "both";  // longitudinal | transverse | both
};

struct FitDefaultsParams {
    double a4_v = defaults::targets::transverse_a4_v;
    double a1_v = defaults::targets::transverse_a1_v;
    double anchor_l_mm = defaults::targets::anchor_l_m * 1e3;
    double range_mm = defaults::targets::operational_range_m * 1e3;
};

struct ScenarioConfig {
    int schema_version = 1;
    Kind kind = Kind::static_sweep;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int trials = 10;

    DipoleSource source;
    TrialGeometry geometry;
    ChannelCalibration cal = ChannelCalibration::defaults();
    ReadoutChain readout = defaults::underwater_chain();
    DragModel drag;
    DspConfig dsp;
    localization::ForwardModelParams forward = localization::ForwardModelParams::defaults();

    StaticSweepParams static_sweep;
    FatigueParams fatigue;
    FreqSweepParams freq_sweep;
    LongitudinalSweepParams longitudinal_sweep;
    TransverseSweepParams transverse_sweep;
    LocalizeParams loc;
    FitDefaultsParams fit;

    static ScenarioConfig defaults_for(Kind kind);
};

// Strict parse: unknown keys and type mismatches raise ConfigError with the
// JSON path. Missing keys take the defaults above.
ScenarioConfig parse_config(const nlohmann::json& j);
ScenarioConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const ScenarioConfig& cfg);

// FNV-1a 64 over the canonical (defaults-filled, key-sorted) config JSON.
std::string config_digest(const ScenarioConfig& cfg);

struct MetricResult {
    std::string name;
    double value = 0.0;
    double target = 0.0;
    double tolerance = 0.0;
    bool pass = true;
    bool informational = false;
};

struct ExperimentReport {
    int schema_version = 1;
    std::string config_digest;
    std::vector<MetricResult> metrics;
    std::vector<std::string> artifacts;
    std::string timestamp;  // excluded from digests and reproducibility checks

    bool all_required_pass() const;
    const MetricResult* find(const std::string& name) const;
    nlohmann::json to_json() const;
};

ExperimentReport report_from_json(const nlohmann::json& j);

// Re-evaluates |value - target| <= tolerance on every non-informational
// metric; returns the failing metric names.
std::vector<std::string> compare_to_targets(ExperimentReport& report);

// Executes the configured protocol end-to-end, writes the per-point CSV
// artifacts and report.json under out_dir, and returns the report.
// Byte-identical outputs for identical (config, seed), timestamp aside.
ExperimentReport run(const ScenarioConfig& cfg, const std::filesystem::path& out_dir,
                     bool quiet = false);

// Per-channel spectral amplitude/frequency extraction shared by the sweep
// protocols: resample to the analysis rate, fixed windows, mean removal,
// Hann spectra, interpolated peak; averaged over segments.
struct TrialAnalysis {
    std::array<double, 4> amplitude_v{};
    std::array<double, 4> frequency_hz{};
    bool saturated = false;
};

TrialAnalysis analyze_record(const TimeSeriesRecord& rec, const DspConfig& dsp,
                             std::optional<double> f_target_hz);

Eigen::Vector3d drive_axis_from_name(const std::string& name);

}  // namespace whisker::experiment
