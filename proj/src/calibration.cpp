#include "whisker/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace whisker::calibration {

LinearFit fit_linear(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw std::invalid_argument("fit_linear: mismatched lengths");
    if (x.size() < 2)
        throw std::invalid_argument("fit_linear: need at least two points");
    const auto n = static_cast<double>(x.size());

    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;

    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0.0)
        throw std::invalid_argument("fit_linear: degenerate abscissa (all x identical)");

    LinearFit fit;
    fit.n_points = x.size();
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;

    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (fit.intercept + fit.slope * x[i]);
        ss_res += r * r;
        ss_tot += (y[i] - my) * (y[i] - my);
    }
    fit.r_squared = ss_tot > 0.0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : 1.0;
    fit.residual_std = x.size() > 2 ? std::sqrt(ss_res / (n - 2.0)) : 0.0;
    return fit;
}

double limit_of_detection(double sigma_y_ohm, double sensitivity_ohm_per_n) {
    if (!(sigma_y_ohm >= 0.0))
        throw std::domain_error("limit_of_detection: sigma must be >= 0");
    if (sensitivity_ohm_per_n == 0.0)
        throw std::domain_error("limit_of_detection: zero sensitivity");
    return 3.0 * sigma_y_ohm / std::abs(sensitivity_ohm_per_n);
}

CycleExtrema cycle_extrema(const TimeSeriesRecord& rec, std::span<const std::uint64_t> marks) {
    if (marks.size() < 3)
        throw std::invalid_argument("cycle_extrema: need at least two complete cycles");
    for (std::size_t i = 1; i < marks.size(); ++i)
        if (marks[i] <= marks[i - 1])
            throw std::invalid_argument("cycle_extrema: markers must be strictly increasing");
    if (marks.back() > rec.size())
        throw std::invalid_argument("cycle_extrema: marker outside record");

    const std::size_t n_cycles = marks.size() - 1;
    CycleExtrema out;
    out.ch1_max.resize(n_cycles);
    out.ch3_min.resize(n_cycles);
    out.ch1_max_index.resize(n_cycles);
    out.ch3_min_index.resize(n_cycles);
    const auto& ch1 = rec.channels[0];
    const auto& ch3 = rec.channels[2];

#pragma omp parallel for schedule(static)
    for (std::int64_t c = 0; c < static_cast<std::int64_t>(n_cycles); ++c) {
        const auto lo = static_cast<std::size_t>(marks[static_cast<std::size_t>(c)]);
        const auto hi = static_cast<std::size_t>(marks[static_cast<std::size_t>(c) + 1]);
        std::size_t imax = lo, imin = lo;
        for (std::size_t i = lo + 1; i < hi; ++i) {
            if (ch1[i] > ch1[imax]) imax = i;
            if (ch3[i] < ch3[imin]) imin = i;
        }
        out.ch1_max[static_cast<std::size_t>(c)] = ch1[imax];
        out.ch3_min[static_cast<std::size_t>(c)] = ch3[imin];
        out.ch1_max_index[static_cast<std::size_t>(c)] = imax;
        out.ch3_min_index[static_cast<std::size_t>(c)] = imin;
    }
    return out;
}

DriftReport drift_metrics(std::span<const double> extrema, double baseline, std::size_t block) {
    if (block < 1) throw std::invalid_argument("drift_metrics: block must be >= 1");
    if (extrema.size() < 2 * block)
        throw std::invalid_argument("drift_metrics: need at least two full blocks of cycles");
    if (!(baseline != 0.0) || !std::isfinite(baseline))
        throw std::invalid_argument("drift_metrics: invalid baseline");

    double first = 0.0, last = 0.0;
    for (std::size_t i = 0; i < block; ++i) {
        first += extrema[i];
        last += extrema[extrema.size() - block + i];
    }
    first /= static_cast<double>(block);
    last /= static_cast<double>(block);

    DriftReport rep;
    rep.baseline = baseline;
    rep.n_cycles = extrema.size();
    rep.block = block;
    rep.cumulative_offset_pct = std::abs(last - first) / std::abs(baseline) * 100.0;
    rep.drift_rate_ppm_per_cycle =
        rep.cumulative_offset_pct * 1e4 / static_cast<double>(extrema.size());
    return rep;
}

FreqTrackReport freq_tracking_metrics(std::span<const double> commanded,
                                      std::span<const double> detected) {
    if (commanded.size() != detected.size() || commanded.size() < 3)
        throw std::invalid_argument("freq_tracking_metrics: need >= 3 paired samples");
    const LinearFit fit = fit_linear(commanded, detected);

    FreqTrackReport rep;
    rep.slope = fit.slope;
    rep.intercept = fit.intercept;
    rep.r_squared = fit.r_squared;

    std::vector<double> abs_err(commanded.size());
    double sum = 0.0, ss = 0.0;
    for (std::size_t i = 0; i < commanded.size(); ++i) {
        const double e = detected[i] - commanded[i];
        abs_err[i] = std::abs(e);
        sum += abs_err[i];
        ss += e * e;
    }
    rep.max_abs_err_hz = *std::max_element(abs_err.begin(), abs_err.end());
    rep.mean_abs_err_hz = sum / static_cast<double>(abs_err.size());
    rep.rmse_hz = std::sqrt(ss / static_cast<double>(abs_err.size()));
    std::sort(abs_err.begin(), abs_err.end());
    const std::size_t mid = abs_err.size() / 2;
    rep.median_abs_err_hz =
        abs_err.size() % 2 ? abs_err[mid] : 0.5 * (abs_err[mid - 1] + abs_err[mid]);
    return rep;
}

}  // namespace whisker::calibration
