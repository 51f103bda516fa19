#include "whisker/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <fftw3.h>

namespace whisker::dsp {

namespace {

constexpr double kPi = std::numbers::pi;

double sinc(double x) {
    if (std::abs(x) < 1e-12) return 1.0;
    return std::sin(kPi * x) / (kPi * x);
}

// Zero-order modified Bessel function of the first kind (series form).
double bessel_i0(double x) {
    const double x2 = 0.5 * x;
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 64; ++k) {
        const double y = x2 / k;
        term *= y * y;
        sum += term;
        if (term < sum * 1e-18) break;
    }
    return sum;
}

double kaiser(double beta, double ratio) {  // ratio in [-1, 1]
    const double t = 1.0 - ratio * ratio;
    if (t < 0.0) return 0.0;
    return bessel_i0(beta * std::sqrt(t)) / bessel_i0(beta);
}

// Compensated (Neumaier) sum.
double stable_sum(std::span<const double> xs) {
    double sum = 0.0, comp = 0.0;
    for (double x : xs) {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x))
            comp += (sum - t) + x;
        else
            comp += (x - t) + sum;
        sum = t;
    }
    return sum + comp;
}

std::vector<double> hann_window(std::size_t n) {
    // Periodic (DFT-even) form: exact on-bin amplitudes, coherent gain 1/2.
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i)
        w[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n)));
    return w;
}

std::mutex& fftw_plan_mutex() {
    static std::mutex m;
    return m;
}

// Forward r2c transform; plan creation is serialized (FFTW planner is not
// thread-safe), execution runs unlocked on private buffers.
std::vector<std::array<double, 2>> real_fft(std::span<const double> x) {
    const std::size_t n = x.size();
    double* in = fftw_alloc_real(n);
    fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
    std::copy(x.begin(), x.end(), in);
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::vector<std::array<double, 2>> bins(n / 2 + 1);
    for (std::size_t k = 0; k < bins.size(); ++k) bins[k] = {out[k][0], out[k][1]};
    {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(out);
    return bins;
}

PeakEstimate search_band(const Spectrum& spec, std::size_t lo_bin, std::size_t hi_bin) {
    if (lo_bin > hi_bin || hi_bin >= spec.magnitudes.size())
        throw std::domain_error("spectral peak search: empty band");

    std::size_t best = lo_bin;
    for (std::size_t k = lo_bin + 1; k <= hi_bin; ++k)
        if (spec.magnitudes[k] > spec.magnitudes[best]) best = k;

    PeakEstimate est;
    est.bin_index = best;
    est.frequency_hz = static_cast<double>(best) * spec.bin_width_hz;
    est.amplitude = spec.magnitudes[best];
    for (std::size_t k = lo_bin; k <= hi_bin; ++k)
        if (k != best && spec.magnitudes[k] == spec.magnitudes[best]) est.ambiguous = true;

    // Three-point parabolic refinement on log magnitude, then the exact
    // window-response scalloping correction at the estimated offset.
    const auto& m = spec.magnitudes;
    if (best > 0 && best + 1 < m.size() && m[best] > 0.0 && m[best - 1] > 0.0 &&
        m[best + 1] > 0.0) {
        const double lm = std::log(m[best - 1]);
        const double l0 = std::log(m[best]);
        const double lp = std::log(m[best + 1]);
        const double den = lm - 2.0 * l0 + lp;
        if (den < 0.0) {
            double delta = 0.5 * (lm - lp) / den;
            delta = std::clamp(delta, -0.5, 0.5);
            est.frequency_hz = (static_cast<double>(best) + delta) * spec.bin_width_hz;
            double response = 1.0;  // window main-lobe response at offset delta
            if (spec.window_name == "hann")
                response = sinc(delta) / (1.0 - delta * delta);
            else if (spec.window_name == "rectangular")
                response = sinc(delta);
            est.amplitude = m[best] / std::max(std::abs(response), 1e-6);
            est.interpolated = true;
        }
    }

    // Significance against the spectrum's median level (DC excluded).
    if (m.size() > 2) {
        std::vector<double> sorted(m.begin() + 1, m.end());
        std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2),
                         sorted.end());
        const double median = sorted[sorted.size() / 2];
        est.significant = est.amplitude >= 4.0 * median;
    }
    return est;
}

}  // namespace

namespace detail {

Rational reduce_ratio(double from_rate, double to_rate) {
    if (!(from_rate > 0.0) || !(to_rate > 0.0))
        throw std::invalid_argument("resample: rates must be > 0");
    double scale = 1.0;
    for (int i = 0; i <= 6; ++i, scale *= 10.0) {
        const double a = from_rate * scale;
        const double b = to_rate * scale;
        if (std::abs(a - std::round(a)) < 1e-6 && std::abs(b - std::round(b)) < 1e-6) {
            const auto ia = static_cast<long long>(std::llround(a));
            const auto ib = static_cast<long long>(std::llround(b));
            const long long g = std::gcd(ia, ib);
            const long long up = ib / g, down = ia / g;
            if (up > 4096 || down > 4096)
                throw std::invalid_argument(
                    "resample: rate ratio too large to express as a small rational");
            return {static_cast<int>(up), static_cast<int>(down)};
        }
    }
    throw std::invalid_argument("resample: rate ratio is not a small rational");
}

std::vector<double> design_lowpass(double cutoff_norm, double transition_norm,
                                   double stopband_db) {
    const double wt = 2.0 * kPi * transition_norm;
    std::size_t taps =
        stopband_db > 21.0
            ? static_cast<std::size_t>(std::ceil((stopband_db - 7.95) / (2.285 * wt)))
            : static_cast<std::size_t>(std::ceil(5.79 / wt));
    if (taps % 2 == 0) ++taps;  // odd length, integer group delay
    double beta = 0.0;
    if (stopband_db > 50.0)
        beta = 0.1102 * (stopband_db - 8.7);
    else if (stopband_db >= 21.0)
        beta = 0.5842 * std::pow(stopband_db - 21.0, 0.4) + 0.07886 * (stopband_db - 21.0);

    const auto mid = static_cast<double>(taps / 2);
    std::vector<double> h(taps);
    for (std::size_t i = 0; i < taps; ++i) {
        const double x = static_cast<double>(i) - mid;
        h[i] = 2.0 * cutoff_norm * sinc(2.0 * cutoff_norm * x) * kaiser(beta, x / mid);
    }
    return h;
}

PolyphasePlan make_polyphase_plan(double from_rate, double to_rate) {
    const Rational ratio = reduce_ratio(from_rate, to_rate);
    PolyphasePlan plan;
    plan.up = ratio.up;
    plan.down = ratio.down;

    const double fs_up = from_rate * ratio.up;
    const double cutoff = 0.45 * to_rate / fs_up;      // cycles/sample, upsampled rate
    const double transition = 0.10 * to_rate / fs_up;  // 0.40..0.50 x target
    const std::vector<double> h = design_lowpass(cutoff, transition, 60.0);
    plan.taps = h.size();
    plan.delay = h.size() / 2;

    // Each branch normalized to unit DC gain (the ideal branch sum is 1/up,
    // so this folds in the interpolation gain).
    plan.branches.resize(static_cast<std::size_t>(ratio.up));
    for (int p = 0; p < ratio.up; ++p) {
        auto& b = plan.branches[static_cast<std::size_t>(p)];
        for (std::size_t j = static_cast<std::size_t>(p); j < plan.taps;
             j += static_cast<std::size_t>(ratio.up))
            b.push_back(h[j]);
        const double s = stable_sum(b);
        for (double& v : b) v /= s;
    }
    return plan;
}

}  // namespace detail

TimeSeriesRecord resample_to(const TimeSeriesRecord& rec, double target_rate_hz) {
    rec.validate();
    if (!(target_rate_hz < rec.sample_rate_hz))
        throw std::invalid_argument("resample: target rate must be below the record rate");
    const detail::PolyphasePlan plan = detail::make_polyphase_plan(rec.sample_rate_hz, target_rate_hz);
    const int up = plan.up, down = plan.down;
    const std::size_t delay = plan.delay;
    const auto& branch = plan.branches;

    const auto n_in = static_cast<std::int64_t>(rec.size());
    const auto n_out = static_cast<std::int64_t>((n_in - 1) * up / down) + 1;

    TimeSeriesRecord out;
    out.sample_rate_hz = target_rate_hz;
    out.meta = rec.meta;
    out.saturated_samples = rec.saturated_samples;
    for (auto& ch : out.channels) ch.resize(static_cast<std::size_t>(n_out));

    for (int ch = 0; ch < 4; ++ch) {
        const std::vector<double>& x = rec.channels[static_cast<std::size_t>(ch)];
        std::vector<double>& y = out.channels[static_cast<std::size_t>(ch)];
#pragma omp parallel for schedule(static)
        for (std::int64_t k = 0; k < n_out; ++k) {
            const std::int64_t u = k * down + static_cast<std::int64_t>(delay);
            const std::int64_t p = u % up;
            const std::int64_t m0 = u / up;
            const auto& b = branch[static_cast<std::size_t>(p)];
            double acc = 0.0;
            for (std::size_t i = 0; i < b.size(); ++i) {
                std::int64_t m = m0 - static_cast<std::int64_t>(i);
                m = std::clamp<std::int64_t>(m, 0, n_in - 1);  // edge hold
                acc += b[i] * x[static_cast<std::size_t>(m)];
            }
            y[static_cast<std::size_t>(k)] = acc;
        }
    }
    return out;
}

std::vector<Segment> segment(const TimeSeriesRecord& rec, double window_s, double hop_s) {
    if (!(window_s > 0.0) || !(hop_s > 0.0))
        throw std::invalid_argument("segment: window and hop must be > 0");
    const auto n_win = static_cast<std::size_t>(std::llround(window_s * rec.sample_rate_hz));
    const auto n_hop = static_cast<std::size_t>(std::llround(hop_s * rec.sample_rate_hz));
    if (n_win < 1 || n_hop < 1)
        throw std::invalid_argument("segment: window and hop must cover at least one sample");
    if (rec.size() < n_win)
        throw std::invalid_argument("segment: record shorter than one window");

    std::vector<Segment> segs;
    for (std::size_t start = 0; start + n_win <= rec.size(); start += n_hop) {
        Segment s;
        s.start_time_s = static_cast<double>(start) / rec.sample_rate_hz;
        s.sample_rate_hz = rec.sample_rate_hz;
        for (int ch = 0; ch < 4; ++ch) {
            const auto& src = rec.channels[static_cast<std::size_t>(ch)];
            s.channels[static_cast<std::size_t>(ch)].assign(
                src.begin() + static_cast<std::ptrdiff_t>(start),
                src.begin() + static_cast<std::ptrdiff_t>(start + n_win));
        }
        segs.push_back(std::move(s));
    }
    return segs;
}

void detrend_mean(Segment& seg) {
    for (auto& ch : seg.channels) {
        if (ch.empty()) throw std::invalid_argument("detrend_mean: empty segment");
        const double mean = stable_sum(ch) / static_cast<double>(ch.size());
        for (double& v : ch) v -= mean;
    }
}

Spectrum amplitude_spectrum(std::span<const double> samples, double sample_rate_hz,
                            Window window) {
    if (samples.size() < 16)
        throw std::invalid_argument("amplitude_spectrum: need at least 16 samples");
    const std::size_t n = samples.size();

    Spectrum spec;
    spec.sample_rate_hz = sample_rate_hz;
    spec.window_length = n;
    spec.bin_width_hz = sample_rate_hz / static_cast<double>(n);

    std::vector<double> xw(n);
    if (window == Window::hann) {
        const std::vector<double> w = hann_window(n);
        for (std::size_t i = 0; i < n; ++i) xw[i] = samples[i] * w[i];
        spec.window_name = "hann";
        spec.coherent_gain = 0.5;
    } else {
        std::copy(samples.begin(), samples.end(), xw.begin());
        spec.window_name = "rectangular";
        spec.coherent_gain = 1.0;
    }

    const auto bins = real_fft(xw);
    spec.magnitudes.resize(bins.size());
    const double scale = 1.0 / (static_cast<double>(n) * spec.coherent_gain);
    for (std::size_t k = 0; k < bins.size(); ++k) {
        const double mag = std::hypot(bins[k][0], bins[k][1]);
        const bool interior = k != 0 && !(n % 2 == 0 && k == n / 2);
        spec.magnitudes[k] = (interior ? 2.0 : 1.0) * mag * scale;
    }
    return spec;
}

PeakEstimate peak_near(const Spectrum& spec, double f_target_hz, double search_halfwidth_hz) {
    if (!(search_halfwidth_hz >= 0.0))
        throw std::domain_error("peak_near: halfwidth must be >= 0");
    if (f_target_hz + search_halfwidth_hz > spec.nyquist_hz() * (1.0 + 1e-12))
        throw std::domain_error("peak_near: search band extends past Nyquist");
    const double df = spec.bin_width_hz;
    const double lo = std::max(0.0, f_target_hz - search_halfwidth_hz);
    const double hi = std::min(spec.nyquist_hz(), f_target_hz + search_halfwidth_hz);
    const auto lo_bin = static_cast<std::size_t>(std::ceil(lo / df - 1e-9));
    const auto hi_bin = static_cast<std::size_t>(std::floor(hi / df + 1e-9));
    return search_band(spec, lo_bin, std::min(hi_bin, spec.magnitudes.size() - 1));
}

PeakEstimate detect_dominant(const Spectrum& spec, double band_lo_hz, double band_hi_hz) {
    const double center = 0.5 * (band_lo_hz + std::min(band_hi_hz, spec.nyquist_hz()));
    const double half = std::min(band_hi_hz, spec.nyquist_hz()) - center;
    return peak_near(spec, center, half);
}

HarmonicReport harmonic_levels(const Spectrum& spec, double f0_hz, int n_harmonics,
                               double search_halfwidth_hz) {
    HarmonicReport rep;
    for (int k = 2; k <= n_harmonics; ++k) {
        const double f = f0_hz * k;
        if (f + search_halfwidth_hz > spec.nyquist_hz()) {
            ++rep.skipped_above_nyquist;
            continue;
        }
        const PeakEstimate p = peak_near(spec, f, search_halfwidth_hz);
        rep.levels.push_back({k, p.frequency_hz, p.amplitude});
    }
    return rep;
}

MeanStd aggregate_trials(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("aggregate_trials: empty input");
    MeanStd out;
    out.mean = stable_sum(values) / static_cast<double>(values.size());
    if (values.size() == 1) {
        out.single = true;
        return out;
    }
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    return out;
}

}  // namespace whisker::dsp
