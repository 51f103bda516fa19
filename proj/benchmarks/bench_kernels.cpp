// Parallel kernels vs their serial references.
#include <benchmark/benchmark.h>

#include "whisker/defaults.hpp"
#include "whisker/dsp.hpp"
#include "whisker/reference.hpp"

namespace {

using namespace whisker;

TimeSeriesRecord make_tone_record(double duration_s) {
    DipoleSource src;
    const TrialGeometry geom{0.020, 0.0, 0.0, {}};
    return simulate_dipole_trial(src, geom, {}, ChannelCalibration::defaults(),
                                 defaults::underwater_chain(), duration_s, 1);
}

void BM_TrialSynthesisParallel(benchmark::State& state) {
    DipoleSource src;
    const TrialGeometry geom{0.020, 0.0, 0.0, {}};
    const ChannelCalibration cal = ChannelCalibration::defaults();
    for (auto _ : state) {
        auto rec = simulate_dipole_trial(src, geom, {}, cal, defaults::underwater_chain(), 4.0, 1);
        benchmark::DoNotOptimize(rec.channels[0].data());
    }
}
BENCHMARK(BM_TrialSynthesisParallel)->Unit(benchmark::kMillisecond);

void BM_TrialSynthesisReference(benchmark::State& state) {
    DipoleSource src;
    const TrialGeometry geom{0.020, 0.0, 0.0, {}};
    const ChannelCalibration cal = ChannelCalibration::defaults();
    for (auto _ : state) {
        auto rec =
            ref::simulate_dipole_trial(src, geom, {}, cal, defaults::underwater_chain(), 4.0, 1);
        benchmark::DoNotOptimize(rec.channels[0].data());
    }
}
BENCHMARK(BM_TrialSynthesisReference)->Unit(benchmark::kMillisecond);

void BM_ResamplePolyphase(benchmark::State& state) {
    const TimeSeriesRecord rec = make_tone_record(4.0);
    for (auto _ : state) {
        auto out = dsp::resample_to(rec, 100.0);
        benchmark::DoNotOptimize(out.channels[0].data());
    }
}
BENCHMARK(BM_ResamplePolyphase)->Unit(benchmark::kMillisecond);

void BM_ResampleDirectReference(benchmark::State& state) {
    const TimeSeriesRecord rec = make_tone_record(4.0);
    for (auto _ : state) {
        auto out = ref::resample_direct(rec, 100.0);
        benchmark::DoNotOptimize(out.channels[0].data());
    }
}
BENCHMARK(BM_ResampleDirectReference)->Unit(benchmark::kMillisecond);

void BM_SpectrumFft(benchmark::State& state) {
    const TimeSeriesRecord rec = dsp::resample_to(make_tone_record(10.8), 100.0);
    auto segs = dsp::segment(rec, 10.0, 10.0);
    dsp::detrend_mean(segs[0]);
    for (auto _ : state) {
        auto spec = dsp::amplitude_spectrum(segs[0].channels[0], 100.0);
        benchmark::DoNotOptimize(spec.magnitudes.data());
    }
}
BENCHMARK(BM_SpectrumFft)->Unit(benchmark::kMicrosecond);

void BM_SpectrumNaiveDftReference(benchmark::State& state) {
    const TimeSeriesRecord rec = dsp::resample_to(make_tone_record(10.8), 100.0);
    auto segs = dsp::segment(rec, 10.0, 10.0);
    dsp::detrend_mean(segs[0]);
    for (auto _ : state) {
        auto spec = ref::dft_amplitude_spectrum(segs[0].channels[0], 100.0);
        benchmark::DoNotOptimize(spec.magnitudes.data());
    }
}
BENCHMARK(BM_SpectrumNaiveDftReference)->Unit(benchmark::kMicrosecond);

void BM_LocalizeGridParallel(benchmark::State& state) {
    const auto params = localization::ForwardModelParams::defaults();
    const auto amps =
        localization::forward_amplitudes(params, 0.025, 0.008, localization::DriveAxis::longitudinal);
    for (auto _ : state) {
        auto est = localization::localize(amps, 10.0, params,
                                          {localization::DriveAxis::longitudinal});
        benchmark::DoNotOptimize(&est);
    }
}
BENCHMARK(BM_LocalizeGridParallel)->Unit(benchmark::kMillisecond);

void BM_LocalizeGridReference(benchmark::State& state) {
    const auto params = localization::ForwardModelParams::defaults();
    const auto amps =
        localization::forward_amplitudes(params, 0.025, 0.008, localization::DriveAxis::longitudinal);
    for (auto _ : state) {
        auto est = ref::localize(amps, 10.0, params, localization::DriveAxis::longitudinal);
        benchmark::DoNotOptimize(&est);
    }
}
BENCHMARK(BM_LocalizeGridReference)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
