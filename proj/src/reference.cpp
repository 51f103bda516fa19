#include "whisker/reference.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "whisker/gauss_newton.hpp"
#include "whisker/rng.hpp"

namespace whisker::ref {

dsp::Spectrum dft_amplitude_spectrum(std::span<const double> samples, double sample_rate_hz,
                                     dsp::Window window) {
    const std::size_t n = samples.size();
    dsp::Spectrum spec;
    spec.sample_rate_hz = sample_rate_hz;
    spec.window_length = n;
    spec.bin_width_hz = sample_rate_hz / static_cast<double>(n);

    std::vector<double> xw(n);
    if (window == dsp::Window::hann) {
        for (std::size_t i = 0; i < n; ++i)
            xw[i] = samples[i] * 0.5 *
                    (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                    static_cast<double>(n)));
        spec.window_name = "hann";
        spec.coherent_gain = 0.5;
    } else {
        std::copy(samples.begin(), samples.end(), xw.begin());
        spec.window_name = "rectangular";
        spec.coherent_gain = 1.0;
    }

    spec.magnitudes.resize(n / 2 + 1);
    const double scale = 1.0 / (static_cast<double>(n) * spec.coherent_gain);
    for (std::size_t k = 0; k < spec.magnitudes.size(); ++k) {
        double re = 0.0, im = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) *
                               static_cast<double>(i) / static_cast<double>(n);
            re += xw[i] * std::cos(ang);
            im += xw[i] * std::sin(ang);
        }
        const bool interior = k != 0 && !(n % 2 == 0 && k == n / 2);
        spec.magnitudes[k] = (interior ? 2.0 : 1.0) * std::hypot(re, im) * scale;
    }
    return spec;
}

TimeSeriesRecord resample_direct(const TimeSeriesRecord& rec, double target_rate_hz) {
    rec.validate();
    const dsp::detail::PolyphasePlan plan =
        dsp::detail::make_polyphase_plan(rec.sample_rate_hz, target_rate_hz);

    // Reassemble the full normalized filter from the branches.
    std::vector<double> h(plan.taps, 0.0);
    for (int p = 0; p < plan.up; ++p) {
        const auto& b = plan.branches[static_cast<std::size_t>(p)];
        for (std::size_t i = 0; i < b.size(); ++i)
            h[static_cast<std::size_t>(p) + static_cast<std::size_t>(plan.up) * i] = b[i];
    }

    const auto n_in = static_cast<std::int64_t>(rec.size());
    const auto n_out = static_cast<std::int64_t>((n_in - 1) * plan.up / plan.down) + 1;

    TimeSeriesRecord out;
    out.sample_rate_hz = target_rate_hz;
    out.meta = rec.meta;
    out.saturated_samples = rec.saturated_samples;
    for (auto& ch : out.channels) ch.resize(static_cast<std::size_t>(n_out));

    const auto x_up = [&](const std::vector<double>& x, std::int64_t m) {
        if (m % plan.up != 0) return 0.0;
        const std::int64_t i = std::clamp<std::int64_t>(m / plan.up, 0, n_in - 1);
        return x[static_cast<std::size_t>(i)];
    };

    for (int ch = 0; ch < 4; ++ch) {
        const auto& x = rec.channels[static_cast<std::size_t>(ch)];
        auto& y = out.channels[static_cast<std::size_t>(ch)];
        for (std::int64_t k = 0; k < n_out; ++k) {
            const std::int64_t u = k * plan.down + static_cast<std::int64_t>(plan.delay);
            double acc = 0.0;
            // Tap order matches the polyphase inner loop (ascending branch
            // index) so the parity check is bit-exact.
            const std::int64_t p = u % plan.up;
            for (std::int64_t j = p; j < static_cast<std::int64_t>(plan.taps); j += plan.up)
                acc += h[static_cast<std::size_t>(j)] * x_up(x, u - j);
            y[static_cast<std::size_t>(k)] = acc;
        }
    }
    return out;
}

TimeSeriesRecord simulate_dipole_trial(const DipoleSource& src, const TrialGeometry& geom,
                                       const DragModel& drag, const ChannelCalibration& cal,
                                       const ReadoutChain& chain, double duration_s,
                                       std::uint64_t seed) {
    src.validate();
    const SensorFrame frame = SensorFrame::from_yaw(geom.mount_yaw_rad);
    const Eigen::Vector3d point = geom.sensing_point();

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

    for (std::int64_t i = 0; i < n_samples; ++i) {
        const double t = static_cast<double>(i) / fs;
        const FlowSample flow = dipole_velocity(src, point, t);
        const Eigen::Vector2d force = flow_to_tip_force(flow, geom.whisker, drag, frame);
        const Eigen::Vector4d dr = force_to_delta_r(force, cal);
        for (int ch = 0; ch < 4; ++ch) {
            const double noise =
                cal.noise_std_ohm > 0.0
                    ? cal.noise_std_ohm * rng::gaussian(seed, static_cast<std::uint64_t>(ch),
                                                        static_cast<std::uint64_t>(i))
                    : 0.0;
            const BridgeOutput out = bridge_output(dr[ch] + noise, chain, cal);
            rec.channels[static_cast<std::size_t>(ch)][static_cast<std::size_t>(i)] = out.volts;
            if (out.saturated) rec.saturated_samples[static_cast<std::size_t>(ch)] += 1;
        }
    }
    return rec;
}

localization::GeometryEstimate localize(const std::array<double, 4>& amplitudes,
                                        double f_detected_hz,
                                        const localization::ForwardModelParams& params,
                                        localization::DriveAxis drive) {
    // Same 1 mm grid and identifiability wedge as localization::localize,
    // scanned serially through the public forward model.
    const auto cost_at = [&](double l, double t) {
        const std::array<double, 4> model = localization::forward_amplitudes(params, l, t, drive);
        double ss = 0.0;
        for (int i = 0; i < 4; ++i) {
            const double den = std::max({amplitudes[static_cast<std::size_t>(i)],
                                         params.noise_floor_v[static_cast<std::size_t>(i)], 1e-12});
            const double r =
                (model[static_cast<std::size_t>(i)] - amplitudes[static_cast<std::size_t>(i)]) / den;
            ss += r * r;
        }
        return ss;
    };

    double best_l = 0.020, best_t = 0.0;
    double best_cost = std::numeric_limits<double>::infinity();
    for (double l = 0.005; l <= 0.060 + 1e-12; l += 0.001) {
        for (double t = 0.0; t <= std::min(0.040, 0.55 * l) + 1e-12; t += 0.001) {
            if (std::hypot(l, t) <= params.sphere_radius_m) continue;
            const double c = cost_at(l, t);
            if (c < best_cost) {
                best_cost = c;
                best_l = l;
                best_t = t;
            }
        }
    }

    const auto residual = [&](const Eigen::VectorXd& p) {
        const double l = p[0], t = std::abs(p[1]);
        Eigen::VectorXd r(4);
        if (std::hypot(l, t) <= params.sphere_radius_m) {
            r.setConstant(1e6);
            return r;
        }
        const std::array<double, 4> model = localization::forward_amplitudes(params, l, t, drive);
        for (int i = 0; i < 4; ++i) {
            const double den = std::max({amplitudes[static_cast<std::size_t>(i)],
                                         params.noise_floor_v[static_cast<std::size_t>(i)], 1e-12});
            r[i] = (model[static_cast<std::size_t>(i)] -
                    amplitudes[static_cast<std::size_t>(i)]) / den;
        }
        return r;
    };
    GaussNewtonOptions opt;
    opt.lower = Eigen::Vector2d(params.sphere_radius_m + 1e-4, 0.0);
    opt.upper = Eigen::Vector2d(0.100, 0.060);
    const GaussNewtonResult gn = gauss_newton(residual, Eigen::Vector2d(best_l, best_t), opt);

    localization::GeometryEstimate est;
    est.frequency_hz = f_detected_hz;
    est.l_m = gn.params[0];
    est.t_abs_m = std::abs(gn.params[1]);
    est.residual = std::sqrt(2.0 * gn.cost / 4.0);
    est.axis = localization::classify_axis(amplitudes).axis;
    est.drive_hypothesis = drive;
    const auto range = localization::operational_range(params);
    est.in_range = !range.finite || est.l_m <= range.l_m;
    return est;
}

}  // namespace whisker::ref
