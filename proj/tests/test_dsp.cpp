#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "whisker/dsp.hpp"
#include "whisker/rng.hpp"

using namespace whisker;

namespace {

constexpr double kPi = std::numbers::pi;

TimeSeriesRecord tone_record(double fs, double duration_s, double f, double amp,
                             double phase = 0.0, double dc = 0.0) {
    TimeSeriesRecord rec;
    rec.sample_rate_hz = fs;
    const auto n = static_cast<std::size_t>(std::llround(fs * duration_s));
    for (int ch = 0; ch < 4; ++ch) {
        auto& x = rec.channels[static_cast<std::size_t>(ch)];
        x.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            x[i] = dc + amp * std::sin(2.0 * kPi * f * static_cast<double>(i) / fs + phase);
    }
    return rec;
}

// Quadrature amplitude at frequency f.
double quadrature_amplitude(const std::vector<double>& x, double fs, double f) {
    double c = 0.0, s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double ang = 2.0 * kPi * f * static_cast<double>(i) / fs;
        c += x[i] * std::cos(ang);
        s += x[i] * std::sin(ang);
    }
    return 2.0 * std::hypot(c, s) / static_cast<double>(x.size());
}

}  // namespace

TEST_CASE("resampler: ratio reduction") {
    const auto r = dsp::detail::reduce_ratio(6250.0, 100.0);
    CHECK(r.up == 2);
    CHECK(r.down == 125);
    CHECK_THROWS_AS(dsp::detail::reduce_ratio(6250.0, std::numbers::pi), std::invalid_argument);
    CHECK_THROWS_AS(dsp::detail::reduce_ratio(99991.0, 3.0), std::invalid_argument);  // huge ratio
}

TEST_CASE("resampler: passband tone survives within 1%") {
    const TimeSeriesRecord rec = tone_record(6250.0, 4.0, 10.0, 1.0);
    const TimeSeriesRecord out = dsp::resample_to(rec, 100.0);
    CHECK(out.sample_rate_hz == 100.0);
    const auto& y = out.channels[0];
    REQUIRE(y.size() >= 398);
    double max_err = 0.0;
    for (std::size_t i = 50; i + 50 < y.size(); ++i) {
        const double expect = std::sin(2.0 * kPi * 10.0 * static_cast<double>(i) / 100.0);
        max_err = std::max(max_err, std::abs(y[i] - expect));
    }
    CHECK(max_err < 0.01);
    const double amp = quadrature_amplitude(
        std::vector<double>(y.begin() + 50, y.begin() + 350), 100.0, 10.0);
    CHECK(amp == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("resampler: DC passes exactly") {
    TimeSeriesRecord rec = tone_record(6250.0, 1.0, 10.0, 0.0, 0.0, 3.25);
    const TimeSeriesRecord out = dsp::resample_to(rec, 100.0);
    for (double v : out.channels[0]) CHECK(v == doctest::Approx(3.25).epsilon(1e-6));
}

TEST_CASE("resampler: 60 Hz tone lands in the stopband (>= 60 dB down)") {
    const TimeSeriesRecord rec = tone_record(6250.0, 4.0, 60.0, 1.0);
    const TimeSeriesRecord out = dsp::resample_to(rec, 100.0);
    // 60 Hz aliases to 40 Hz at a 100 Hz rate; measure residual there.
    const std::vector<double> mid(out.channels[0].begin() + 50, out.channels[0].end() - 50);
    const double residual = quadrature_amplitude(mid, 100.0, 40.0);
    CHECK(residual < 1e-3);
}

TEST_CASE("resampler: passband ripple below 0.1 dB up to 0.4x target rate") {
    for (double f : {2.0, 10.0, 20.0, 30.0, 38.0, 40.0}) {
        const TimeSeriesRecord rec = tone_record(6250.0, 6.0, f, 1.0);
        const TimeSeriesRecord out = dsp::resample_to(rec, 100.0);
        // Quadrature over an exact number of periods, away from the edges.
        const auto periods = std::floor((static_cast<double>(out.size()) - 120.0) * f / 100.0);
        const auto len = static_cast<std::size_t>(std::floor(periods * 100.0 / f));
        const std::vector<double> mid(out.channels[0].begin() + 60,
                                      out.channels[0].begin() + 60 + static_cast<std::ptrdiff_t>(len));
        const double amp = quadrature_amplitude(mid, 100.0, f);
        CHECK(std::abs(20.0 * std::log10(amp)) < 0.1);
    }
}

TEST_CASE("resampler: delay compensation keeps timestamps aligned") {
    const TimeSeriesRecord rec = tone_record(6250.0, 4.0, 7.0, 1.0, 0.4);
    const TimeSeriesRecord out = dsp::resample_to(rec, 100.0);
    const auto& y = out.channels[0];
    for (std::size_t i = 60; i < y.size() - 60; i += 17) {
        const double expect = std::sin(2.0 * kPi * 7.0 * static_cast<double>(i) / 100.0 + 0.4);
        CHECK(y[i] == doctest::Approx(expect).epsilon(0.02).scale(1.0));
    }
}

TEST_CASE("segment: window placement and boundary errors") {
    TimeSeriesRecord rec = tone_record(100.0, 60.0, 5.0, 1.0);
    CHECK(dsp::segment(rec, 10.0, 10.0).size() == 6);

    rec = tone_record(100.0, 25.0, 5.0, 1.0);
    const auto segs = dsp::segment(rec, 10.0, 5.0);
    REQUIRE(segs.size() == 4);
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(segs[i].start_time_s == doctest::Approx(5.0 * static_cast<double>(i)));

    rec = tone_record(100.0, 9.99, 5.0, 1.0);
    CHECK_THROWS_AS(dsp::segment(rec, 10.0, 10.0), std::invalid_argument);
}

TEST_CASE("detrend_mean removes exactly the mean") {
    TimeSeriesRecord rec = tone_record(100.0, 10.0, 3.0, 1.0, 0.0, 3.0);
    auto segs = dsp::segment(rec, 10.0, 10.0);
    dsp::detrend_mean(segs[0]);
    for (const auto& ch : segs[0].channels) {
        double sum = 0.0, peak = 0.0;
        for (double v : ch) {
            sum += v;
            peak = std::max(peak, std::abs(v));
        }
        CHECK(std::abs(sum / static_cast<double>(ch.size())) < 1e-12 * peak);
    }

    // Constant segment -> all zeros.
    dsp::Segment flat;
    flat.sample_rate_hz = 100.0;
    for (auto& ch : flat.channels) ch.assign(64, 7.5);
    dsp::detrend_mean(flat);
    for (const auto& ch : flat.channels)
        for (double v : ch) CHECK(v == 0.0);

    // Ramp keeps its slope, loses its mean.
    dsp::Segment ramp;
    ramp.sample_rate_hz = 100.0;
    for (auto& ch : ramp.channels) {
        ch.resize(101);
        for (std::size_t i = 0; i <= 100; ++i) ch[i] = static_cast<double>(i);
    }
    dsp::detrend_mean(ramp);
    CHECK(ramp.channels[0][0] == doctest::Approx(-50.0).epsilon(1e-12));
    CHECK(ramp.channels[0][100] == doctest::Approx(50.0).epsilon(1e-12));
}

TEST_CASE("amplitude spectrum: on-bin sine recovered within 0.5%") {
    const std::size_t n = 1000;
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i)
        x[i] = 1.0 * std::sin(2.0 * kPi * 100.0 * static_cast<double>(i) / static_cast<double>(n));
    const dsp::Spectrum spec = dsp::amplitude_spectrum(x, 100.0);
    CHECK(spec.bin_width_hz == doctest::Approx(0.1));
    const dsp::PeakEstimate peak = dsp::peak_near(spec, 10.0, 1.0);
    CHECK(peak.amplitude == doctest::Approx(1.0).epsilon(0.005));
    CHECK(peak.frequency_hz == doctest::Approx(10.0).epsilon(1e-3));
}

TEST_CASE("amplitude spectrum: zero input gives zero spectrum") {
    std::vector<double> x(256, 0.0);
    const dsp::Spectrum spec = dsp::amplitude_spectrum(x, 100.0);
    for (double m : spec.magnitudes) CHECK(m == 0.0);
}

TEST_CASE("amplitude spectrum: Parseval identity") {
    const std::size_t n = 1000;
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i)
        x[i] = rng::gaussian(5, 1, i) + 0.4 * std::sin(2.0 * kPi * 13.0 * static_cast<double>(i) / 1000.0);

    std::vector<double> xw(n);
    for (std::size_t i = 0; i < n; ++i)
        xw[i] = x[i] * 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n)));
    double time_energy = 0.0;
    for (double v : xw) time_energy += v * v;

    const dsp::Spectrum spec = dsp::amplitude_spectrum(x, 100.0);
    // magnitudes[k] = (2 or 1) |X_k| / (N CG): invert the scaling, then sum
    // |X_k|^2 single-sided.
    const double ncg = static_cast<double>(n) * spec.coherent_gain;
    double spec_energy = 0.0;
    for (std::size_t k = 0; k < spec.magnitudes.size(); ++k) {
        const bool interior = k != 0 && !(n % 2 == 0 && k == n / 2);
        const double mag = spec.magnitudes[k] * ncg / (interior ? 2.0 : 1.0);
        spec_energy += (interior ? 2.0 : 1.0) * mag * mag;
    }
    spec_energy /= static_cast<double>(n);
    CHECK(spec_energy == doctest::Approx(time_energy).epsilon(1e-9));
}

TEST_CASE("peak interpolation: off-bin tones within spec error bands") {
    const std::size_t n = 1000;  // df = 0.1 Hz at 100 Hz
    double worst_freq_err = 0.0, worst_amp_err = 0.0;
    for (int j = 0; j < 20; ++j) {
        const double f = 10.0 + 0.1 * (static_cast<double>(j) / 20.0);  // sweep across one bin
        std::vector<double> x(n);
        for (std::size_t i = 0; i < n; ++i)
            x[i] = 0.8 * std::sin(2.0 * kPi * f * static_cast<double>(i) / 100.0 + 0.3);
        const dsp::Spectrum spec = dsp::amplitude_spectrum(x, 100.0);
        const dsp::PeakEstimate peak = dsp::peak_near(spec, 10.0, 1.0);
        worst_freq_err = std::max(worst_freq_err, std::abs(peak.frequency_hz - f));
        worst_amp_err = std::max(worst_amp_err, std::abs(peak.amplitude - 0.8) / 0.8);
    }
    CHECK(worst_freq_err < 0.03);  // tracking error scale
    CHECK(worst_amp_err < 0.02);   // worst-case mid-bin amplitude after interpolation
}

TEST_CASE("peak_near: 10.05 Hz off-bin tone located within 0.03 Hz") {
    const std::size_t n = 1000;
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i)
        x[i] = std::sin(2.0 * kPi * 10.05 * static_cast<double>(i) / 100.0);
    const dsp::Spectrum spec = dsp::amplitude_spectrum(x, 100.0);
    const dsp::PeakEstimate peak = dsp::peak_near(spec, 10.0, 1.0);
    CHECK(peak.interpolated);
    CHECK(std::abs(peak.frequency_hz - 10.05) < 0.03);
}

TEST_CASE("peak_near: ties break to the lower frequency and are flagged") {
    dsp::Spectrum spec;
    spec.sample_rate_hz = 100.0;
    spec.window_length = 100;
    spec.bin_width_hz = 1.0;
    spec.magnitudes.assign(51, 0.1);
    spec.magnitudes[10] = 1.0;
    spec.magnitudes[20] = 1.0;
    const dsp::PeakEstimate peak = dsp::peak_near(spec, 15.0, 10.0);
    CHECK(peak.bin_index == 10);
    CHECK(peak.ambiguous);

    CHECK_THROWS_AS(dsp::peak_near(spec, 49.0, 5.0), std::domain_error);  // past Nyquist
}

TEST_CASE("detect_dominant flags sub-significant peaks in pure noise") {
    const std::size_t n = 1000;
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = 1e-3 * rng::gaussian(77, 2, i);
    const dsp::Spectrum spec = dsp::amplitude_spectrum(x, 100.0);
    const dsp::PeakEstimate peak = dsp::detect_dominant(spec);
    CHECK_FALSE(peak.significant);

    for (std::size_t i = 0; i < n; ++i)
        x[i] += 0.5 * std::sin(2.0 * kPi * 17.0 * static_cast<double>(i) / 100.0);
    const dsp::PeakEstimate tone = dsp::detect_dominant(dsp::amplitude_spectrum(x, 100.0));
    CHECK(tone.significant);
    CHECK(tone.frequency_hz == doctest::Approx(17.0).epsilon(1e-3));
}

TEST_CASE("harmonic levels: clean vs clipped sine, band limits") {
    const std::size_t n = 2000;
    std::vector<double> clean(n), clipped(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double v = std::sin(2.0 * kPi * 10.0 * static_cast<double>(i) / 100.0);
        clean[i] = v;
        clipped[i] = std::clamp(v, -0.6, 0.6);
    }
    const auto clean_rep = dsp::harmonic_levels(dsp::amplitude_spectrum(clean, 100.0), 10.0, 4);
    const auto clip_rep = dsp::harmonic_levels(dsp::amplitude_spectrum(clipped, 100.0), 10.0, 4);
    REQUIRE(clean_rep.levels.size() == 3);
    REQUIRE(clip_rep.levels.size() == 3);
    // Symmetric clipping excites the odd harmonic only.
    CHECK(clip_rep.levels[1].harmonic == 3);
    CHECK(clip_rep.levels[1].amplitude > 20.0 * clean_rep.levels[1].amplitude);
    CHECK(clip_rep.levels[1].amplitude > 0.05);

    // f0 = 30 Hz at 50 Hz Nyquist: 2 f0 = 60 Hz is out of band.
    const auto limited = dsp::harmonic_levels(dsp::amplitude_spectrum(clean, 100.0), 30.0, 2);
    CHECK(limited.levels.empty());
    CHECK(limited.skipped_above_nyquist == 1);
}

TEST_CASE("aggregate_trials") {
    const std::vector<double> ones{1.0, 1.0, 1.0};
    CHECK(dsp::aggregate_trials(ones).mean == 1.0);
    CHECK(dsp::aggregate_trials(ones).std == 0.0);

    const std::vector<double> seq{1.0, 2.0, 3.0};
    const auto agg = dsp::aggregate_trials(seq);
    CHECK(agg.mean == doctest::Approx(2.0));
    CHECK(agg.std == doctest::Approx(1.0));

    const std::vector<double> one{4.2};
    CHECK(dsp::aggregate_trials(one).single);
    CHECK(dsp::aggregate_trials(one).std == 0.0);

    CHECK_THROWS_AS(dsp::aggregate_trials(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("pipeline determinism: identical record in, identical spectrum out") {
    const TimeSeriesRecord rec = tone_record(6250.0, 2.0, 12.3, 0.7);
    const TimeSeriesRecord r1 = dsp::resample_to(rec, 100.0);
    const TimeSeriesRecord r2 = dsp::resample_to(rec, 100.0);
    CHECK(r1.channels == r2.channels);
    const auto s1 = dsp::amplitude_spectrum(r1.channels[0], 100.0);
    const auto s2 = dsp::amplitude_spectrum(r2.channels[0], 100.0);
    CHECK(s1.magnitudes == s2.magnitudes);
}

TEST_CASE("end-to-end tone tracking across 1-45 Hz") {
    // Off-bin tones through resample + 10 s Hann window + interpolation:
    // |err| <= 0.09 Hz for every tone and RMSE <= 0.05 Hz.
    double max_err = 0.0, ss = 0.0;
    int count = 0;
    for (int j = 0; j <= 88; j += 4) {  // 0.5 Hz grid, subsampled for test speed
        const double tone = 1.0 + 0.5 * j;
        const double offset = (rng::uniform(13, 3, static_cast<std::uint64_t>(j)) - 0.5) * 0.5;
        const double f = std::clamp(tone + offset, 1.0, 45.0);
        TimeSeriesRecord rec = tone_record(6250.0, 10.8, f, 0.5, 0.7);
        const TimeSeriesRecord out = dsp::resample_to(rec, 100.0);
        auto segs = dsp::segment(out, 10.0, 10.0);
        dsp::detrend_mean(segs[0]);
        const auto spec = dsp::amplitude_spectrum(segs[0].channels[0], 100.0);
        const auto peak = dsp::detect_dominant(spec, 0.5, 48.0);
        const double err = std::abs(peak.frequency_hz - f);
        max_err = std::max(max_err, err);
        ss += err * err;
        ++count;
    }
    CHECK(max_err <= 0.09);
    CHECK(std::sqrt(ss / count) <= 0.05);
}
