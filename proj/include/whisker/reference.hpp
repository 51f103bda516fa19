#pragma once

#include <span>

#include "whisker/dsp.hpp"
#include "whisker/localization.hpp"
#include "whisker/sensor_model.hpp"

// Serial reference implementations: straight-line compositions of the public
// single-sample operations, kept for parity tests against the parallel
// kernels and as the baseline side of the benchmark suite.
namespace whisker::ref {

// O(N^2) direct DFT with the same windowing and scaling as
// dsp::amplitude_spectrum; the independent oracle for the FFT-backed path.
dsp::Spectrum dft_amplitude_spectrum(std::span<const double> samples, double sample_rate_hz,
                                     dsp::Window window = dsp::Window::hann);

// Direct convolution against the zero-stuffed upsampled signal with the same
// branch-normalized filter as dsp::resample_to (bit-identical indexing
// semantics, no polyphase shortcut).
TimeSeriesRecord resample_direct(const TimeSeriesRecord& rec, double target_rate_hz);

// Per-sample composition dipole_velocity -> flow_to_tip_force ->
// force_to_delta_r -> bridge_output, no hoisting, no threading.
TimeSeriesRecord simulate_dipole_trial(const DipoleSource& src, const TrialGeometry& geom,
                                       const DragModel& drag, const ChannelCalibration& cal,
                                       const ReadoutChain& chain, double duration_s,
                                       std::uint64_t seed);

// Serial grid scan + Gauss-Newton refinement over the same search domain as
// localization::localize.
localization::GeometryEstimate localize(const std::array<double, 4>& amplitudes,
                                        double f_detected_hz,
                                        const localization::ForwardModelParams& params,
                                        localization::DriveAxis drive);

}  // namespace whisker::ref
