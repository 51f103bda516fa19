#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "whisker/sensor_model.hpp"

namespace whisker::dsp {

// Single-sided amplitude spectrum, scaled by the window coherent gain so an
// on-bin sine of amplitude A reports a peak of A.
struct Spectrum {
    double bin_width_hz = 0.0;
    std::vector<double> magnitudes;  // length N/2 + 1
    std::string window_name;
    double coherent_gain = 1.0;
    double sample_rate_hz = 0.0;
    std::size_t window_length = 0;

    double nyquist_hz() const { return 0.5 * sample_rate_hz; }
};

struct PeakEstimate {
    double frequency_hz = 0.0;
    double amplitude = 0.0;
    std::size_t bin_index = 0;
    bool interpolated = false;
    bool ambiguous = false;    // equal-magnitude tie in the search band
    bool significant = true;   // amplitude >= 4x median spectral magnitude
};

struct Segment {
    double start_time_s = 0.0;
    double sample_rate_hz = 0.0;
    std::array<std::vector<double>, 4> channels;
};

enum class Window { hann, rectangular };

// Rational polyphase resampling (up P, down Q from the reduced ratio) through
// a Kaiser-windowed linear-phase low-pass cut at 0.45x the target rate with
// >= 60 dB stopband. Filter delay is compensated so output sample k sits at
// t = k / target_rate; edges are sample-held. Rates whose reduced ratio needs
// more than 4096 up/down are rejected as a configuration error.
TimeSeriesRecord resample_to(const TimeSeriesRecord& rec, double target_rate_hz);

// Fixed windows, trailing partial discarded; throws when the record is
// shorter than one window.
std::vector<Segment> segment(const TimeSeriesRecord& rec, double window_s, double hop_s);

// Removes the per-channel mean in place (compensated summation).
void detrend_mean(Segment& seg);

Spectrum amplitude_spectrum(std::span<const double> samples, double sample_rate_hz,
                            Window window = Window::hann);

// Max bin within [f_target - halfwidth, f_target + halfwidth], refined by
// three-point parabolic interpolation on log magnitude. Equal peaks break to
// the lower frequency and set `ambiguous`.
PeakEstimate peak_near(const Spectrum& spec, double f_target_hz, double search_halfwidth_hz);

// Band-limited peak search, default 1-50 Hz, with a significance check
// against 4x the median spectral magnitude.
PeakEstimate detect_dominant(const Spectrum& spec, double band_lo_hz = 1.0,
                             double band_hi_hz = 50.0);

struct HarmonicLevel {
    int harmonic = 0;         // 2 for 2*f0, ...
    double frequency_hz = 0.0;
    double amplitude = 0.0;
};

struct HarmonicReport {
    std::vector<HarmonicLevel> levels;  // monitored only, never folded into metrics
    int skipped_above_nyquist = 0;
};

HarmonicReport harmonic_levels(const Spectrum& spec, double f0_hz, int n_harmonics,
                               double search_halfwidth_hz = 0.5);

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;     // sample std (n-1); 0 when n == 1
    bool single = false;  // n == 1, std not estimable
};

MeanStd aggregate_trials(std::span<const double> values);

namespace detail {
// Kaiser-windowed sinc prototype used by the resampler; exposed for the
// filter-response tests and the serial reference implementation.
std::vector<double> design_lowpass(double cutoff_norm, double transition_norm,
                                   double stopband_db);
struct Rational {
    int up = 1;
    int down = 1;
};
Rational reduce_ratio(double from_rate, double to_rate);

// Branch-decomposed filter shared by resample_to and the direct-convolution
// reference: branches[p][i] = h[p + up*i], each normalized to unit DC gain.
struct PolyphasePlan {
    int up = 1;
    int down = 1;
    std::size_t taps = 0;
    std::size_t delay = 0;  // (taps - 1) / 2
    std::vector<std::vector<double>> branches;
};
PolyphasePlan make_polyphase_plan(double from_rate, double to_rate);
}  // namespace detail

}  // namespace whisker::dsp
