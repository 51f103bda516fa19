#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "whisker/sensor_model.hpp"

namespace whisker::calibration {

struct LinearFit {
    double intercept = 0.0;     // R0_hat [ohm]
    double slope = 0.0;         // k_hat [ohm/N]
    double r_squared = 0.0;
    double residual_std = 0.0;  // [ohm]
    std::size_t n_points = 0;
};

// Ordinary least squares of y on x. A perfect fit (including the exact
// 2-point case) reports r_squared = 1 even when SS_tot vanishes.
LinearFit fit_linear(std::span<const double> x, std::span<const double> y);

// LOD = 3 sigma_y / |S|; S = 0 is a domain error.
double limit_of_detection(double sigma_y_ohm, double sensitivity_ohm_per_n);

struct CycleExtrema {
    std::vector<double> ch1_max;
    std::vector<double> ch3_min;
    std::vector<std::uint64_t> ch1_max_index;  // sample index of each extremum
    std::vector<std::uint64_t> ch3_min_index;
};

// One extremum pair per complete cycle [mark_k, mark_{k+1}).
CycleExtrema cycle_extrema(const TimeSeriesRecord& rec, std::span<const std::uint64_t> marks);

struct DriftReport {
    double cumulative_offset_pct = 0.0;
    double drift_rate_ppm_per_cycle = 0.0;
    double baseline = 0.0;
    std::size_t n_cycles = 0;
    std::size_t block = 0;  // cycles per reference block
};

// Cumulative offset = |mean(last block) - mean(first block)| / baseline x 100;
// rate = offset_pct x 1e4 / n_cycles. Needs at least two full blocks.
DriftReport drift_metrics(std::span<const double> extrema, double baseline,
                          std::size_t block = 100);

struct FreqTrackReport {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double max_abs_err_hz = 0.0;
    double median_abs_err_hz = 0.0;
    double mean_abs_err_hz = 0.0;
    double rmse_hz = 0.0;
};

// OLS of detected on commanded plus error statistics on the differences.
FreqTrackReport freq_tracking_metrics(std::span<const double> commanded,
                                      std::span<const double> detected);

}  // namespace whisker::calibration
