#include <doctest.h>

#include <cmath>
#include <numbers>

#include "whisker/calibration.hpp"
#include "whisker/defaults.hpp"
#include "whisker/dsp.hpp"
#include "whisker/sensor_model.hpp"

using namespace whisker;

TEST_CASE("force_to_delta_r matches the configured slopes") {
    const ChannelCalibration cal = ChannelCalibration::defaults();

    const Eigen::Vector4d zero = force_to_delta_r({0.0, 0.0}, cal);
    CHECK(zero.norm() == 0.0);

    const Eigen::Vector4d at_max = force_to_delta_r({0.18, 0.0}, cal);
    CHECK(at_max[0] == doctest::Approx(87.0534).epsilon(1e-12));   // within 0.1 of 87.1
    CHECK(at_max[2] == doctest::Approx(-94.878).epsilon(1e-12));   // within 0.1 of -94.9
    CHECK(std::abs(at_max[0] - 87.1) < 0.1);
    CHECK(std::abs(at_max[2] - (-94.9)) < 0.1);
    CHECK(at_max[1] == doctest::Approx(-10.34 * 0.18).epsilon(1e-12));  // -1.8612
}

TEST_CASE("calibration invariants on the defaults") {
    const ChannelCalibration cal = ChannelCalibration::defaults();
    CHECK_NOTHROW(cal.validate());
    CHECK(std::abs(cal.sensitivity_ohm_per_n(0, 0) / cal.sensitivity_ohm_per_n(2, 0)) ==
          doctest::Approx(483.63 / 527.10).epsilon(1e-12));

    ChannelCalibration bad = cal;
    bad.sensitivity_ohm_per_n(2, 0) = 527.10;  // same sign as channel 1
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    bad = cal;
    bad.sensitivity_ohm_per_n(0, 1) = -100.0;  // off-axis too large
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("quarter-bridge output") {
    const ChannelCalibration cal = ChannelCalibration::defaults();
    ReadoutChain chain = defaults::static_chain();  // gain 23.5

    CHECK(bridge_output(0.0, chain, cal).volts == 0.0);

    // 23.5 * 5 * 87.1 / (4*1050 + 2*87.1)
    const BridgeOutput v = bridge_output(87.1, chain, cal);
    CHECK(v.volts == doctest::Approx(2.3396849709661196).epsilon(1e-12));
    CHECK_FALSE(v.saturated);

    CHECK_THROWS_AS(bridge_output(-1050.0, chain, cal), std::domain_error);

    chain.adc_saturation_v = 1.0;
    const BridgeOutput clipped = bridge_output(87.1, chain, cal);
    CHECK(clipped.volts == 1.0);
    CHECK(clipped.saturated);
}

TEST_CASE("bridge denominator asymmetry is bounded by 2x/R0") {
    const ChannelCalibration cal = ChannelCalibration::defaults();
    const ReadoutChain chain = defaults::static_chain();
    for (double x : {1.0, 10.0, 50.0, 87.1, 200.0}) {
        const double vp = bridge_output(x, chain, cal).volts;
        const double vm = bridge_output(-x, chain, cal).volts;
        CHECK(vp != doctest::Approx(-vm).epsilon(1e-15));  // exact antisymmetry fails
        CHECK(std::abs(vm + vp) / std::abs(vp) < 2.0 * x / cal.baseline_ohm);
    }
}

TEST_CASE("flow_to_tip_force projects out the whisker axis") {
    const WhiskerGeometry geom;
    const DragModel drag{1.0};
    const SensorFrame frame = SensorFrame::from_yaw(0.0);

    FlowSample axial;
    axial.velocity = {0.0, 0.0, 3.0};  // parallel to the whisker
    CHECK(flow_to_tip_force(axial, geom, drag, frame).norm() == 0.0);

    FlowSample inplane;
    inplane.velocity = {1.5625e-3, 0.0, 0.0};
    const Eigen::Vector2d f = flow_to_tip_force(inplane, geom, drag, frame);
    CHECK(f[0] == doctest::Approx(1.5625e-3).epsilon(1e-12));
    CHECK(f[1] == 0.0);

    // Rotating the flow 90 degrees about the whisker axis swaps components.
    FlowSample rotated;
    rotated.velocity = {0.0, 1.5625e-3, 0.0};
    const Eigen::Vector2d fr = flow_to_tip_force(rotated, geom, drag, frame);
    CHECK(fr[0] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(fr[1] == doctest::Approx(f[0]).epsilon(1e-12));
}

TEST_CASE("static sweep grid and noise behaviour") {
    const ChannelCalibration noiseless = [] {
        ChannelCalibration cal = ChannelCalibration::defaults();
        cal.noise_std_ohm = 0.0;
        return cal;
    }();

    const auto grid = static_force_grid();
    REQUIRE(grid.size() == 10);  // 0 to 0.18 N in 0.02 N increments
    CHECK(grid.front()[0] == 0.0);
    CHECK(grid.back()[0] == doctest::Approx(0.18).epsilon(1e-15));

    const auto rows = simulate_static_sweep(grid, noiseless, 1);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Eigen::Vector4d expect =
            noiseless.baseline_ohm * Eigen::Vector4d::Ones() +
            force_to_delta_r(rows[i].force_n, noiseless);
        CHECK((rows[i].resistance_ohm - expect).norm() == 0.0);
    }

    // Monte-Carlo slope recovery under default noise, 10-trial average.
    const ChannelCalibration cal = ChannelCalibration::defaults();
    std::vector<double> force(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) force[i] = grid[i][0];
    double slope_sum = 0.0;
    for (std::uint64_t trial = 0; trial < 10; ++trial) {
        const auto noisy = simulate_static_sweep(grid, cal, 100 + trial);
        std::vector<double> r1(noisy.size());
        for (std::size_t i = 0; i < noisy.size(); ++i) r1[i] = noisy[i].resistance_ohm[0];
        slope_sum += calibration::fit_linear(force, r1).slope;
    }
    CHECK(std::abs(slope_sum / 10.0 - 483.63) < 0.005 * 483.63);

    CHECK_THROWS_AS(simulate_static_sweep({}, cal, 1), std::invalid_argument);
}

TEST_CASE("static sweep determinism: identical seed, identical bits") {
    const ChannelCalibration cal = ChannelCalibration::defaults();
    const auto grid = static_force_grid();
    const auto a = simulate_static_sweep(grid, cal, 42);
    const auto b = simulate_static_sweep(grid, cal, 42);
    const auto c = simulate_static_sweep(grid, cal, 43);
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK((a[i].resistance_ohm - b[i].resistance_ohm).norm() == 0.0);
    bool differs = false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if ((a[i].resistance_ohm - c[i].resistance_ohm).norm() != 0.0) differs = true;
    CHECK(differs);
}

TEST_CASE("fatigue: noise- and drift-free cycles repeat exactly") {
    ChannelCalibration cal = ChannelCalibration::defaults();
    cal.noise_std_ohm = 0.0;
    FatigueConfig cfg;
    cfg.cycles = 50;

    const FatigueResult res = simulate_fatigue(cfg, cal, 3);
    REQUIRE(res.cycle_marks.size() == cfg.cycles + 1);
    const auto ext = calibration::cycle_extrema(res.record, res.cycle_marks);
    REQUIRE(ext.ch1_max.size() == cfg.cycles);
    for (double v : ext.ch1_max)
        CHECK(v == doctest::Approx(ext.ch1_max[0]).epsilon(1e-9));

    // cos drive: channel-1 max and channel-3 min sit at the cycle marks with
    // opposite-sign deviations.
    for (std::size_t c = 0; c < ext.ch1_max.size(); ++c) {
        CHECK(std::abs(static_cast<double>(ext.ch1_max_index[c]) -
                       static_cast<double>(res.cycle_marks[c])) <= 1.0);
        CHECK(std::abs(static_cast<double>(ext.ch3_min_index[c]) -
                       static_cast<double>(res.cycle_marks[c])) <= 1.0);
        CHECK((ext.ch1_max[c] - cal.baseline_ohm) > 0.0);
        CHECK((ext.ch3_min[c] - cal.baseline_ohm) < 0.0);
    }
}

TEST_CASE("fatigue: injected linear drift appears in the extrema sequence") {
    ChannelCalibration cal = ChannelCalibration::defaults();
    cal.noise_std_ohm = 0.0;
    FatigueConfig cfg;
    cfg.cycles = 500;
    cfg.drift_ppm_per_cycle = {2.0, 0.0, 1.1, 0.0};

    const FatigueResult res = simulate_fatigue(cfg, cal, 3);
    const auto ext = calibration::cycle_extrema(res.record, res.cycle_marks);

    std::vector<double> cycle_index(ext.ch1_max.size());
    for (std::size_t i = 0; i < cycle_index.size(); ++i)
        cycle_index[i] = static_cast<double>(i);
    const auto fit = calibration::fit_linear(cycle_index, ext.ch1_max);
    // Slope per cycle = 2 ppm of the 1050 ohm baseline.
    CHECK(fit.slope == doctest::Approx(2.0e-6 * cal.baseline_ohm).epsilon(2e-3));
}

TEST_CASE("dipole trial: zero drive leaves pure bridge noise") {
    DipoleSource src;
    src.velocity_amplitude = 0.0;
    const TrialGeometry geom{0.020, 0.0, 0.0, {}};
    const DragModel drag;
    const ChannelCalibration cal = ChannelCalibration::defaults();
    const ReadoutChain chain = defaults::underwater_chain();

    const TimeSeriesRecord rec = simulate_dipole_trial(src, geom, drag, cal, chain, 1.0, 11);
    const double expected_std = chain.small_signal_gain(cal.baseline_ohm) * cal.noise_std_ohm;
    for (const auto& ch : rec.channels) {
        const auto agg = dsp::aggregate_trials(ch);
        CHECK(std::abs(agg.mean) < 0.2 * expected_std);
        CHECK(agg.std == doctest::Approx(expected_std).epsilon(0.05));
    }
}

TEST_CASE("dipole trial: spectral amplitude halves per geometric doubling cubed") {
    DipoleSource src;  // defaults: a=5mm, U=0.05, f=10
    TrialGeometry geom{0.020, 0.0, 0.0, {}};
    ChannelCalibration cal = ChannelCalibration::defaults();
    cal.noise_std_ohm = 0.0;
    const DragModel drag;
    const ReadoutChain chain = defaults::underwater_chain();
    src.drive_axis = {1.0, 0.0, 0.0};

    const auto amp_at = [&](double l_m) {
        TrialGeometry g = geom;
        g.l_m = l_m;
        const TimeSeriesRecord rec = simulate_dipole_trial(src, g, drag, cal, chain, 2.0, 5);
        // Quadrature amplitude of channel 3 at the drive frequency.
        double c = 0.0, s = 0.0;
        const auto& x = rec.channels[2];
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double ang = 2.0 * std::numbers::pi * src.frequency_hz *
                               static_cast<double>(i) / rec.sample_rate_hz;
            c += x[i] * std::cos(ang);
            s += x[i] * std::sin(ang);
        }
        return 2.0 * std::hypot(c, s) / static_cast<double>(x.size());
    };

    const double a20 = amp_at(0.020);
    const double a40 = amp_at(0.040);
    CHECK(a20 / a40 == doctest::Approx(8.0).epsilon(2e-3));
}

TEST_CASE("dipole trial: deterministic and sensitive to the seed") {
    DipoleSource src;
    const TrialGeometry geom{0.020, 0.0, 0.0, {}};
    const ChannelCalibration cal = ChannelCalibration::defaults();
    const TimeSeriesRecord a =
        simulate_dipole_trial(src, geom, {}, cal, defaults::underwater_chain(), 0.5, 9);
    const TimeSeriesRecord b =
        simulate_dipole_trial(src, geom, {}, cal, defaults::underwater_chain(), 0.5, 9);
    const TimeSeriesRecord c =
        simulate_dipole_trial(src, geom, {}, cal, defaults::underwater_chain(), 0.5, 10);
    CHECK(a.channels == b.channels);
    CHECK(a.channels != c.channels);
}

TEST_CASE("dipole trial rejects geometry inside the sphere and short durations") {
    DipoleSource src;
    const ChannelCalibration cal = ChannelCalibration::defaults();
    TrialGeometry geom{0.004, 0.0, 0.0, {}};
    CHECK_THROWS_AS(
        simulate_dipole_trial(src, geom, {}, cal, defaults::underwater_chain(), 1.0, 1),
        std::domain_error);
    geom.l_m = 0.020;
    CHECK_THROWS_AS(
        simulate_dipole_trial(src, geom, {}, cal, defaults::underwater_chain(), 0.05, 1),
        std::invalid_argument);
}

TEST_CASE("off-axis rejection: pure e2 load stays below 5% on channel 1") {
    const ChannelCalibration cal = ChannelCalibration::defaults();
    const Eigen::Vector4d dr = force_to_delta_r({0.0, 0.1}, cal);
    CHECK(std::abs(dr[0]) < 0.05 * std::abs(dr[1]));
}

TEST_CASE("chain linearity: spectral amplitude linear in U at small signal") {
    DipoleSource src;
    src.velocity_amplitude = 0.002;  // dR/R0 ~ 0.1%
    TrialGeometry geom{0.020, 0.0, 0.0, {}};
    ChannelCalibration cal = ChannelCalibration::defaults();
    cal.noise_std_ohm = 0.0;
    const ReadoutChain chain = defaults::underwater_chain();

    const auto amp_for = [&](double u) {
        DipoleSource s = src;
        s.velocity_amplitude = u;
        const TimeSeriesRecord rec = simulate_dipole_trial(s, geom, {}, cal, chain, 2.0, 1);
        double cs = 0.0, sn = 0.0;
        const auto& x = rec.channels[2];
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double ang = 2.0 * std::numbers::pi * s.frequency_hz * static_cast<double>(i) /
                               rec.sample_rate_hz;
            cs += x[i] * std::cos(ang);
            sn += x[i] * std::sin(ang);
        }
        return 2.0 * std::hypot(cs, sn) / static_cast<double>(x.size());
    };
    const double a1 = amp_for(0.002);
    const double a2 = amp_for(0.004);
    CHECK(a2 / a1 == doctest::Approx(2.0).epsilon(1e-3));
}
