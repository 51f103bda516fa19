#pragma once

#include <array>
#include <span>
#include <stdexcept>
#include <vector>

#include "whisker/gauss_newton.hpp"

namespace whisker::localization {

enum class DriveAxis { longitudinal, transverse };
enum class Axis { longitudinal, transverse };

// Amplitude-only forward model: channel axes aligned with the rig frame
// (channels 1/3 along the longitudinal axis, 2/4 transverse), per-channel
// voltage gain on the projected flow envelope plus an additive spectral
// noise floor. The radial decay exponent defaults to the dipole value 3 and
// can be re-fit per calibration dataset.
struct ForwardModelParams {
    std::array<double, 4> gain_v_per_mps{};
    double decay_exponent = 3.0;
    std::array<double, 4> noise_floor_v{};
    double sphere_radius_m = 0.005;       // reference source
    double velocity_amplitude_mps = 0.05;

    // Fitted defaults reproducing the reference device's transverse-drive
    // amplitudes and longitudinal operational range (see defaults.hpp).
    static ForwardModelParams defaults();

    void validate() const;
};

// A_i = g_i |proj of the envelope velocity onto channel axis i| + floor_i at
// sensor position (L, T) for the given drive axis.
std::array<double, 4> forward_amplitudes(const ForwardModelParams& params, double l_m,
                                         double t_m, DriveAxis drive);

struct DecayFit {
    double a0 = 0.0;        // amplitude scale in A = a0 / L^n + floor
    double exponent = 0.0;  // n_hat
    double floor = 0.0;
    bool converged = false;
    bool identifiable = true;
};

// Thrown when the refinement fails to converge; carries the best fit so far.
struct DecayFitError : std::runtime_error {
    DecayFit best;
    explicit DecayFitError(const DecayFit& fit)
        : std::runtime_error("fit_decay: refinement did not converge"), best(fit) {}
};

// Nonlinear least squares of A = a0 / L^n + floor, seeded by a grid over n
// (the model is linear in a0 and floor at fixed n) and polished by damped
// Gauss-Newton. Constant amplitudes are flagged unidentifiable.
DecayFit fit_decay(std::span<const double> l_m, std::span<const double> amplitude_v);

struct AxisCall {
    Axis axis = Axis::longitudinal;
    double ratio = 0.0;  // larger RMS pair / smaller RMS pair
    bool ambiguous = false;
};

// Longitudinal when RMS(A1, A3) > RMS(A2, A4); ratio < 1.2 is ambiguous.
AxisCall classify_axis(const std::array<double, 4>& amplitudes);

struct GeometryEstimate {
    double frequency_hz = 0.0;
    double l_m = 0.0;
    double t_abs_m = 0.0;
    Axis axis = Axis::longitudinal;
    double residual = 0.0;  // relative RMS misfit
    bool in_range = true;
    DriveAxis drive_hypothesis = DriveAxis::longitudinal;
};

// Grid search over L in [5, 60] mm x |T| in [0, 40] mm (restricted to the
// identifiability wedge |T| <= 0.55 L; outside it a second geometry produces
// identical amplitudes) followed by Gauss-Newton refinement, per drive-axis
// hypothesis; the lower-residual hypothesis is reported. All channels at
// their floors yields an out-of-range result rather than an exception.
GeometryEstimate localize(const std::array<double, 4>& amplitudes, double f_detected_hz,
                          const ForwardModelParams& params,
                          std::vector<DriveAxis> hypotheses = {DriveAxis::longitudinal,
                                                               DriveAxis::transverse});

struct OperationalRange {
    double l_m = 0.0;
    bool finite = true;  // false when no channel ever drops below threshold
};

// Largest L (T = 0, longitudinal drive) at which any channel still exceeds
// threshold_multiple x its noise floor, located by bisection on the monotone
// noise-free forward model. threshold_multiple <= 1 puts the threshold at or
// below the floor and is a domain error; an all-zero floor set is flagged as
// infinite range.
OperationalRange operational_range(const ForwardModelParams& params,
                                   double threshold_multiple = 3.0);

}  // namespace whisker::localization
