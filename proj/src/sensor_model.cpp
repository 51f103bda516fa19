#include "whisker/sensor_model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "whisker/rng.hpp"

namespace whisker {

void WhiskerGeometry::validate() const {
    if (!(length_m > 0.0) || !(diameter_m > 0.0))
        throw std::invalid_argument("WhiskerGeometry: length and diameter must be > 0");
    if (!(sensing_point_offset_m > 0.0) || sensing_point_offset_m > length_m)
        throw std::invalid_argument("WhiskerGeometry: sensing point must lie on the whisker");
}

ChannelCalibration ChannelCalibration::defaults() {
    ChannelCalibration cal;
    // Column 2 magnitude 505.37 is the rounded mean of the principal slopes.
    cal.sensitivity_ohm_per_n << 483.63, -10.34,
                                 -10.34, 505.37,
                                 -527.10, -3.68,
                                 -3.68, -505.37;
    return cal;
}

void ChannelCalibration::validate() const {
    if (!(baseline_ohm > 0.0))
        throw std::invalid_argument("ChannelCalibration: baseline must be > 0");
    if (!(noise_std_ohm >= 0.0))
        throw std::invalid_argument("ChannelCalibration: noise std must be >= 0");
    const auto& k = sensitivity_ohm_per_n;
    if (k(0, 0) * k(2, 0) >= 0.0)
        throw std::invalid_argument("ChannelCalibration: channels 1/3 must have opposite-sign e1 slopes");
    if (k(1, 1) * k(3, 1) >= 0.0)
        throw std::invalid_argument("ChannelCalibration: channels 2/4 must have opposite-sign e2 slopes");
    const double min_principal = std::min(std::min(std::abs(k(0, 0)), std::abs(k(2, 0))),
                                          std::min(std::abs(k(1, 1)), std::abs(k(3, 1))));
    const double max_off = std::max(std::max(std::abs(k(1, 0)), std::abs(k(3, 0))),
                                    std::max(std::abs(k(0, 1)), std::abs(k(2, 1))));
    if (!(max_off < 0.05 * min_principal))
        throw std::invalid_argument("ChannelCalibration: off-axis slopes must stay below 5% of principal");
}

void ReadoutChain::validate(double max_signal_hz) const {
    if (!(excitation_v > 0.0) || !(amplifier_gain > 0.0) || !(sample_rate_hz > 0.0) ||
        !(adc_saturation_v > 0.0))
        throw std::invalid_argument("ReadoutChain: all parameters must be > 0");
    if (max_signal_hz > 0.0 && sample_rate_hz < 20.0 * max_signal_hz)
        throw std::invalid_argument("ReadoutChain: sample rate must be >= 20x the highest simulated frequency");
}

void DragModel::validate() const {
    if (!(linear_gain_n_per_mps > 0.0))
        throw std::invalid_argument("DragModel: drag gain must be > 0");
}

SensorFrame SensorFrame::from_yaw(double yaw_rad) {
    SensorFrame f;
    const double c = std::cos(yaw_rad), s = std::sin(yaw_rad);
    f.e1 = {c, s, 0.0};
    f.e2 = {-s, c, 0.0};
    f.axis = {0.0, 0.0, 1.0};
    return f;
}

void TimeSeriesRecord::validate() const {
    if (!(sample_rate_hz > 0.0))
        throw std::invalid_argument("TimeSeriesRecord: sample rate must be > 0");
    const std::size_t n = channels[0].size();
    for (const auto& ch : channels) {
        if (ch.size() != n)
            throw std::invalid_argument("TimeSeriesRecord: channels must have equal length");
        for (double v : ch)
            if (!std::isfinite(v))
                throw std::invalid_argument("TimeSeriesRecord: non-finite sample");
    }
}

Eigen::Vector4d force_to_delta_r(const Eigen::Vector2d& force_n, const ChannelCalibration& cal) {
    if (!force_n.allFinite())
        throw std::invalid_argument("force_to_delta_r: non-finite force");
    return cal.sensitivity_ohm_per_n * force_n;
}

BridgeOutput bridge_output(double delta_r_ohm, const ReadoutChain& chain,
                           const ChannelCalibration& cal) {
    const double r0 = cal.baseline_ohm;
    if (r0 + delta_r_ohm <= 0.0)
        throw std::domain_error("bridge_output: non-physical resistance R0 + dR <= 0");
    const double v = chain.amplifier_gain * chain.excitation_v * delta_r_ohm /
                     (4.0 * r0 + 2.0 * delta_r_ohm);
    const double sat = chain.adc_saturation_v;
    if (v > sat) return {sat, true};
    if (v < -sat) return {-sat, true};
    return {v, false};
}

Eigen::Vector2d flow_to_tip_force(const FlowSample& sample, const WhiskerGeometry& geom,
                                  const DragModel& drag, const SensorFrame& frame) {
    geom.validate();
    if (!sample.velocity.allFinite())
        throw std::invalid_argument("flow_to_tip_force: non-finite velocity");
    const Eigen::Vector3d v_perp =
        sample.velocity - sample.velocity.dot(frame.axis) * frame.axis;
    return {drag.linear_gain_n_per_mps * v_perp.dot(frame.e1),
            drag.linear_gain_n_per_mps * v_perp.dot(frame.e2)};
}

std::vector<Eigen::Vector2d> static_force_grid(double max_force_n, int steps) {
    std::vector<Eigen::Vector2d> forces;
    forces.reserve(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i)
        forces.emplace_back(max_force_n * i / (steps - 1), 0.0);
    return forces;
}

std::vector<StaticSweepRow> simulate_static_sweep(const std::vector<Eigen::Vector2d>& forces,
                                                  const ChannelCalibration& cal,
                                                  std::uint64_t seed) {
    if (forces.empty())
        throw std::invalid_argument("simulate_static_sweep: empty force list");
    std::vector<StaticSweepRow> rows(forces.size());
    for (std::size_t i = 0; i < forces.size(); ++i) {
        const Eigen::Vector4d dr = force_to_delta_r(forces[i], cal);
        Eigen::Vector4d r;
        for (int ch = 0; ch < 4; ++ch)
            r[ch] = cal.baseline_ohm + dr[ch] +
                    cal.noise_std_ohm * rng::gaussian(seed, static_cast<std::uint64_t>(ch), i);
        rows[i] = {forces[i], r};
    }
    return rows;
}

FatigueResult simulate_fatigue(const FatigueConfig& cfg, const ChannelCalibration& cal,
                               std::uint64_t seed) {
    if (cfg.cycles < 1)
        throw std::invalid_argument("simulate_fatigue: need at least one cycle");
    if (!(cfg.stroke_freq_hz > 0.0) || !(cfg.sample_rate_hz > 0.0))
        throw std::invalid_argument("simulate_fatigue: rates must be > 0");
    cal.validate();

    const double fs = cfg.sample_rate_hz;
    const double f = cfg.stroke_freq_hz;
    const auto n_samples = static_cast<std::int64_t>(
        std::llround(static_cast<double>(cfg.cycles) / f * fs));

    FatigueResult out;
    out.record.sample_rate_hz = fs;
    out.record.meta.scenario = "fatigue";
    out.record.meta.seed = seed;
    out.record.meta.f_hz = f;
    out.record.meta.units = "ohm";
    for (auto& ch : out.record.channels) ch.resize(static_cast<std::size_t>(n_samples));

    out.cycle_marks.reserve(cfg.cycles + 1);
    for (std::uint64_t c = 0; c <= cfg.cycles; ++c) {
        const auto mark = static_cast<std::uint64_t>(
            std::llround(static_cast<double>(c) / f * fs));
        out.cycle_marks.push_back(std::min<std::uint64_t>(mark, static_cast<std::uint64_t>(n_samples)));
    }
    const auto& marks = out.cycle_marks;

    const Eigen::Matrix<double, 4, 2>& k = cal.sensitivity_ohm_per_n;
    const double r0 = cal.baseline_ohm;
    const double sig = cal.noise_std_ohm;
    const double samples_per_cycle = fs / f;

#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n_samples; ++i) {
        // Phase-locked to the cycle marks (the marks come from the drive):
        // the channel-1 maximum and channel-3 minimum land exactly on each
        // mark sample, so noise-free per-cycle extrema are identical.
        auto c = static_cast<std::size_t>(static_cast<double>(i) / samples_per_cycle);
        while (c + 1 < marks.size() && static_cast<std::uint64_t>(i) >= marks[c + 1]) ++c;
        while (c > 0 && static_cast<std::uint64_t>(i) < marks[c]) --c;
        const double t_cycle = static_cast<double>(static_cast<std::uint64_t>(i) - marks[c]) / fs;
        const double load = cfg.load_amplitude_n * std::cos(2.0 * std::numbers::pi * f * t_cycle);
        const double cycle = static_cast<double>(i) / samples_per_cycle;
        for (int ch = 0; ch < 4; ++ch) {
            const double drift = r0 * cfg.drift_ppm_per_cycle[static_cast<std::size_t>(ch)] *
                                 1e-6 * cycle;
            const double noise =
                sig > 0.0 ? sig * rng::gaussian(seed, static_cast<std::uint64_t>(ch),
                                                static_cast<std::uint64_t>(i))
                          : 0.0;
            out.record.channels[static_cast<std::size_t>(ch)][static_cast<std::size_t>(i)] =
                r0 + drift + k(ch, 0) * load + noise;
        }
    }
    return out;
}

TimeSeriesRecord simulate_dipole_trial(const DipoleSource& src, const TrialGeometry& geom,
                                       const DragModel& drag, const ChannelCalibration& cal,
                                       const ReadoutChain& chain, double duration_s,
                                       std::uint64_t seed) {
    src.validate();
    cal.validate();
    drag.validate();
    chain.validate(src.frequency_hz);
    geom.whisker.validate();
    if (duration_s < 2.0 / src.frequency_hz)
        throw std::invalid_argument("simulate_dipole_trial: duration must cover >= 2 periods");

    const Eigen::Vector3d point = geom.sensing_point();
    // Rejects geometries inside the sphere before any synthesis.
    const Eigen::Vector3d env = envelope_vector(src, point);

    const SensorFrame frame = SensorFrame::from_yaw(geom.mount_yaw_rad);
    const Eigen::Vector3d env_perp = env - env.dot(frame.axis) * frame.axis;
    const Eigen::Vector2d force_env{drag.linear_gain_n_per_mps * env_perp.dot(frame.e1),
                                    drag.linear_gain_n_per_mps * env_perp.dot(frame.e2)};
    const Eigen::Vector4d dr_env = cal.sensitivity_ohm_per_n * force_env;

    const double fs = chain.sample_rate_hz;
    const auto n_samples = static_cast<std::int64_t>(std::llround(duration_s * fs));

    TimeSeriesRecord rec;
    rec.sample_rate_hz = fs;
    rec.meta.scenario = "dipole_trial";
    rec.meta.seed = seed;
    rec.meta.l_mm = geom.l_m * 1e3;
    rec.meta.t_mm = geom.t_m * 1e3;
    rec.meta.f_hz = src.frequency_hz;
    rec.meta.gain = chain.amplifier_gain;
    for (auto& ch : rec.channels) ch.resize(static_cast<std::size_t>(n_samples));

    const double w = 2.0 * std::numbers::pi * src.frequency_hz;
    const double sig = cal.noise_std_ohm;
    std::uint64_t clipped[4] = {0, 0, 0, 0};

#pragma omp parallel for schedule(static) reduction(+ : clipped[:4])
    for (std::int64_t i = 0; i < n_samples; ++i) {
        const double c = std::cos(w * static_cast<double>(i) / fs + src.phase_rad);
        for (int ch = 0; ch < 4; ++ch) {
            const double noise =
                sig > 0.0 ? sig * rng::gaussian(seed, static_cast<std::uint64_t>(ch),
                                                static_cast<std::uint64_t>(i))
                          : 0.0;
            const BridgeOutput out = bridge_output(dr_env[ch] * c + noise, chain, cal);
            rec.channels[static_cast<std::size_t>(ch)][static_cast<std::size_t>(i)] = out.volts;
            if (out.saturated) clipped[ch] += 1;
        }
    }
    for (int ch = 0; ch < 4; ++ch)
        rec.saturated_samples[static_cast<std::size_t>(ch)] = clipped[ch];
    return rec;
}

}  // namespace whisker
