#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "whisker/flowfield.hpp"

namespace whisker {

// Plain cylindrical whisker on a square PDMS base. The flow is sampled at one
// point along the whisker (lumped drag model); default is the tip.
struct WhiskerGeometry {
    double length_m = 0.100;
    double diameter_m = 0.005;
    double sensing_point_offset_m = 0.100;

    void validate() const;
};

// Housing dimensions, kept as configuration constants only.
struct SensorHousing {
    static constexpr double base_side_m = 0.010;
    static constexpr double base_height_m = 0.025;
};

// End-to-end force->resistance calibration. The 4x2 matrix maps in-plane tip
// force (F1, F2) to per-channel resistance change; beam mechanics, PDMS
// coupling and gauge factor are collapsed into these slopes.
struct ChannelCalibration {
    double baseline_ohm = 1050.0;
    Eigen::Matrix<double, 4, 2> sensitivity_ohm_per_n;
    double noise_std_ohm = 0.044;

    // Column 1 holds the measured e1-axis slopes; column 2 mirrors the
    // pattern with the mean principal magnitude (e2 loads were never
    // characterized for the reference device — documented assumption).
    static ChannelCalibration defaults();

    void validate() const;
};

struct ReadoutChain {
    double excitation_v = 5.0;       // not a measured quantity; ratio-based checks only
    double amplifier_gain = 166.0;   // 23.5 for the static bench, 166 underwater
    double sample_rate_hz = 6250.0;
    double adc_saturation_v = 10.0;  // clamp at +-adc_saturation_v

    void validate(double max_signal_hz = 0.0) const;

    // Small-signal volts per ohm: gain * Vex / (4 R0).
    double small_signal_gain(double baseline_ohm) const {
        return amplifier_gain * excitation_v / (4.0 * baseline_ohm);
    }
};

// Lumped linear flow->force transfer, F = C * v_perp.
struct DragModel {
    double linear_gain_n_per_mps = 33.11087599742815;  // fitted default, see defaults.hpp

    void validate() const;
};

// Orthonormal sensor frame: e1/e2 are the channel axes (channels 1/3 sense
// e1, channels 2/4 sense e2), axis is the whisker direction.
struct SensorFrame {
    Eigen::Vector3d e1{1.0, 0.0, 0.0};
    Eigen::Vector3d e2{0.0, 1.0, 0.0};
    Eigen::Vector3d axis{0.0, 0.0, 1.0};

    // Frame rotated by yaw about the whisker axis (z up, e1 from +x).
    static SensorFrame from_yaw(double yaw_rad);
};

struct RecordMeta {
    std::string scenario;
    std::uint64_t seed = 0;
    double l_mm = 0.0;
    double t_mm = 0.0;
    double f_hz = 0.0;
    double gain = 0.0;
    int trial = 0;
    std::string units = "V";
};

struct TimeSeriesRecord {
    double sample_rate_hz = 0.0;
    std::array<std::vector<double>, 4> channels;
    RecordMeta meta;
    std::array<std::uint64_t, 4> saturated_samples{};  // clipped-sample counts

    std::size_t size() const { return channels[0].size(); }
    bool any_saturation() const {
        return saturated_samples[0] || saturated_samples[1] || saturated_samples[2] ||
               saturated_samples[3];
    }
    void validate() const;  // equal lengths, positive rate, no NaN
};

// dR = K F, noise-free.
Eigen::Vector4d force_to_delta_r(const Eigen::Vector2d& force_n, const ChannelCalibration& cal);

struct BridgeOutput {
    double volts = 0.0;
    bool saturated = false;
};

// Quarter-bridge with one active arm of R0 + dR:
//   V = gain * Vex * dR / (4 R0 + 2 dR), clamped to +-adc_saturation.
// R0 + dR <= 0 is a domain error (non-physical resistance).
BridgeOutput bridge_output(double delta_r_ohm, const ReadoutChain& chain,
                           const ChannelCalibration& cal);

// Projects the sampled flow velocity onto the plane normal to the whisker
// axis and expresses it in the (e1, e2) channel frame: F = C * v_perp.
Eigen::Vector2d flow_to_tip_force(const FlowSample& sample, const WhiskerGeometry& geom,
                                  const DragModel& drag, const SensorFrame& frame);

struct StaticSweepRow {
    Eigen::Vector2d force_n;
    Eigen::Vector4d resistance_ohm;
};

// Per step: R_i = R0 + dR_i + N(0, sigma_R). Deterministic given seed.
std::vector<StaticSweepRow> simulate_static_sweep(const std::vector<Eigen::Vector2d>& forces,
                                                  const ChannelCalibration& cal,
                                                  std::uint64_t seed);

// The standard bench protocol: 0..max_force in `steps` equal increments
// applied along e1 (10 steps of 0.02 N reproduce the reference sweep).
std::vector<Eigen::Vector2d> static_force_grid(double max_force_n = 0.18, int steps = 10);

struct FatigueConfig {
    std::uint64_t cycles = 10000;
    double stroke_freq_hz = 1.5;
    double sample_rate_hz = 100.0;
    double load_amplitude_n = 0.18;                  // stays in the calibrated regime
    std::array<double, 4> drift_ppm_per_cycle{};     // baseline drift per channel
};

struct FatigueResult {
    TimeSeriesRecord record;               // resistance-domain channels [ohm]
    std::vector<std::uint64_t> cycle_marks;  // cycle start sample indices, plus end mark
};

// Alternating load F(t) = A cos(2 pi f t) on e1 (channels 1/3 respond in
// antiphase) with a linear per-cycle baseline drift injected per channel.
FatigueResult simulate_fatigue(const FatigueConfig& cfg, const ChannelCalibration& cal,
                               std::uint64_t seed);

struct TrialGeometry {
    double l_m = 0.020;      // longitudinal distance, rig x
    double t_m = 0.0;        // transverse offset, rig y
    double mount_yaw_rad = 0.0;
    WhiskerGeometry whisker;

    // Flow is sampled at the sensing point, which sits in the source plane;
    // the whisker axis (rig z) is perpendicular to any in-plane drive axis.
    Eigen::Vector3d sensing_point() const { return {l_m, t_m, 0.0}; }
};

// Full underwater chain at one (L, T): dipole velocity -> drag force ->
// delta R (+ per-sample resistance noise) -> quarter bridge -> clamp.
// Bit-identical output for identical (inputs, seed) at any thread count.
TimeSeriesRecord simulate_dipole_trial(const DipoleSource& src, const TrialGeometry& geom,
                                       const DragModel& drag, const ChannelCalibration& cal,
                                       const ReadoutChain& chain, double duration_s,
                                       std::uint64_t seed);

}  // namespace whisker
