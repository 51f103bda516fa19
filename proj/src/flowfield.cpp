#include "whisker/flowfield.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace whisker {

void DipoleSource::validate() const {
    if (!center.allFinite() || !drive_axis.allFinite())
        throw std::invalid_argument("DipoleSource: non-finite geometry");
    if (std::abs(drive_axis.norm() - 1.0) > 1e-12)
        throw std::invalid_argument("DipoleSource: drive_axis must be a unit vector");
    if (!(sphere_radius > 0.0))
        throw std::invalid_argument("DipoleSource: sphere_radius must be > 0");
    if (!(velocity_amplitude >= 0.0))
        throw std::invalid_argument("DipoleSource: velocity_amplitude must be >= 0");
    if (!(frequency_hz > 0.0))
        throw std::invalid_argument("DipoleSource: frequency must be > 0");
}

namespace {

Eigen::Vector3d doublet_direction(const DipoleSource& src, const Eigen::Vector3d& point,
                                  double& inv_r3) {
    const Eigen::Vector3d r = point - src.center;
    const double dist = r.norm();
    if (dist <= src.sphere_radius) {
        std::ostringstream os;
        os << "dipole field undefined inside the sphere: point (" << point.x() << ", "
           << point.y() << ", " << point.z() << ") is within radius " << src.sphere_radius
           << " of the source center";
        throw std::domain_error(os.str());
    }
    const Eigen::Vector3d rhat = r / dist;
    inv_r3 = 1.0 / (dist * dist * dist);
    const double cosang = src.drive_axis.dot(rhat);
    return 3.0 * cosang * rhat - src.drive_axis;
}

}  // namespace

Eigen::Vector3d envelope_vector(const DipoleSource& src, const Eigen::Vector3d& point) {
    double inv_r3 = 0.0;
    const Eigen::Vector3d dir = doublet_direction(src, point, inv_r3);
    const double a3 = src.sphere_radius * src.sphere_radius * src.sphere_radius;
    return (0.5 * a3 * inv_r3 * src.velocity_amplitude) * dir;
}

FlowSample dipole_velocity(const DipoleSource& src, const Eigen::Vector3d& point, double t_s) {
    const Eigen::Vector3d env = envelope_vector(src, point);
    const double c = std::cos(2.0 * std::numbers::pi * src.frequency_hz * t_s + src.phase_rad);
    return FlowSample{env * c, point, t_s};
}

double peak_speed_envelope(const DipoleSource& src, const Eigen::Vector3d& point) {
    return envelope_vector(src, point).norm();
}

}  // namespace whisker
