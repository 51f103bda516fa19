#pragma once

#include <Eigen/Dense>

namespace whisker {

// Oscillating rigid sphere driven sinusoidally along a fixed axis. Modeled as
// the incompressible potential-flow doublet (quasi-static): the canonical
// near-field stimulus for artificial lateral-line work, with r^-3 decay.
struct DipoleSource {
    Eigen::Vector3d center{0.0, 0.0, 0.0};       // [m]
    Eigen::Vector3d drive_axis{1.0, 0.0, 0.0};   // unit vector
    double sphere_radius = 0.005;                // [m]
    double velocity_amplitude = 0.05;            // [m/s], peak sphere speed
    double frequency_hz = 10.0;
    double phase_rad = 0.0;

    // Throws std::invalid_argument when a field is out of domain.
    void validate() const;
};

struct FlowSample {
    Eigen::Vector3d velocity;  // [m/s]
    Eigen::Vector3d point;     // [m]
    double time_s = 0.0;
};

// Instantaneous fluid velocity at `point`:
//   v(r,t) = (a^3 / (2|r|^3)) (3(u.rhat)rhat - u) U cos(2 pi f t + phase)
// Undefined inside the sphere; |point - center| <= a throws std::domain_error
// naming the offending point (a silent clamp would corrupt localization fits).
FlowSample dipole_velocity(const DipoleSource& src, const Eigen::Vector3d& point, double t_s);

// Direction-and-amplitude vector of the oscillation at `point`: the velocity
// equals envelope_vector(..) * cos(2 pi f t + phase).
Eigen::Vector3d envelope_vector(const DipoleSource& src, const Eigen::Vector3d& point);

// max over t of |dipole_velocity| = (a^3/(2|r|^3)) |3(u.rhat)rhat - u| U.
double peak_speed_envelope(const DipoleSource& src, const Eigen::Vector3d& point);

}  // namespace whisker
