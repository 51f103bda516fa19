#include <doctest.h>

#include <cmath>
#include <numbers>

#include "whisker/flowfield.hpp"
#include "whisker/rng.hpp"

using namespace whisker;

namespace {

DipoleSource make_source(double a = 0.005, double u = 0.1, double f = 10.0) {
    DipoleSource src;
    src.sphere_radius = a;
    src.velocity_amplitude = u;
    src.frequency_hz = f;
    return src;
}

}  // namespace

TEST_CASE("dipole velocity on-axis and broadside closed forms") {
    const DipoleSource src = make_source();
    const double a = src.sphere_radius, u = src.velocity_amplitude;

    // On axis, 3(u.rhat)rhat - u = 2u: |v| = U a^3 / r^3 along the drive axis.
    const Eigen::Vector3d on_axis{2.0 * a, 0.0, 0.0};
    const FlowSample axis_sample = dipole_velocity(src, on_axis, 0.0);  // cos(0) = 1
    CHECK(axis_sample.velocity.x() == doctest::Approx(u / 8.0).epsilon(1e-12));
    CHECK(axis_sample.velocity.y() == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(axis_sample.velocity.z() == doctest::Approx(0.0).epsilon(1e-15));

    // Broadside, the bracket collapses to -u: half the on-axis strength.
    const Eigen::Vector3d broadside{0.0, 2.0 * a, 0.0};
    const FlowSample side_sample = dipole_velocity(src, broadside, 0.0);
    CHECK(side_sample.velocity.x() == doctest::Approx(-u / 16.0).epsilon(1e-12));
    CHECK(std::abs(side_sample.velocity.y()) < 1e-18);
}

TEST_CASE("dipole velocity worked example: a=5mm U=0.1 on-axis r=20mm") {
    const DipoleSource src = make_source();
    const FlowSample s = dipole_velocity(src, {0.020, 0.0, 0.0}, 0.0);
    // 0.1 * 0.005^3 / 0.020^3 = 1.5625e-3 m/s
    CHECK(s.velocity.norm() == doctest::Approx(1.5625e-3).epsilon(1e-12));
}

TEST_CASE("points inside the sphere are a domain error") {
    const DipoleSource src = make_source();
    CHECK_THROWS_AS(dipole_velocity(src, {0.004, 0.0, 0.0}, 0.0), std::domain_error);
    CHECK_THROWS_AS(peak_speed_envelope(src, {0.0, 0.0, 0.0}), std::domain_error);
    CHECK_THROWS_WITH(dipole_velocity(src, {0.004, 0.0, 0.0}, 0.0),
                      doctest::Contains("0.004"));
}

TEST_CASE("envelope bounds the instantaneous speed and matches closed forms") {
    const DipoleSource src = make_source(0.005, 0.07, 13.0);
    const Eigen::Vector3d on_axis{0.025, 0.0, 0.0};
    const Eigen::Vector3d broadside{0.0, 0.0, 0.031};
    const double r3_axis = std::pow(0.025, 3.0);
    const double a3 = std::pow(src.sphere_radius, 3.0);
    CHECK(peak_speed_envelope(src, on_axis) ==
          doctest::Approx(src.velocity_amplitude * a3 / r3_axis).epsilon(1e-12));
    CHECK(peak_speed_envelope(src, broadside) ==
          doctest::Approx(src.velocity_amplitude * a3 / (2.0 * std::pow(0.031, 3.0)))
              .epsilon(1e-12));

    // Brute force over a dense time grid at scattered points.
    for (int p = 0; p < 8; ++p) {
        const Eigen::Vector3d point{0.01 + 0.004 * p, 0.003 * p - 0.01, 0.002 * p};
        const double env = peak_speed_envelope(src, point);
        double max_seen = 0.0;
        for (int i = 0; i < 100; ++i) {
            const double t = rng::uniform(99, 7, static_cast<std::uint64_t>(100 * p + i)) * 0.5;
            max_seen = std::max(max_seen, dipole_velocity(src, point, t).velocity.norm());
        }
        CHECK(env >= max_seen - 1e-15);
        CHECK(max_seen > 0.0);
    }
}

TEST_CASE("decay law: envelope * r^3 constant along a fixed direction") {
    const DipoleSource src = make_source(0.004, 0.12, 8.0);
    const Eigen::Vector3d dir = Eigen::Vector3d(1.0, 0.7, 0.3).normalized();
    const double ref = peak_speed_envelope(src, 0.01 * dir) * std::pow(0.01, 3.0);
    for (double r : {0.02, 0.03, 0.05, 0.08}) {
        const double v = peak_speed_envelope(src, r * dir) * std::pow(r, 3.0);
        CHECK(v == doctest::Approx(ref).epsilon(1e-12));
    }
}

TEST_CASE("axis symmetry: field invariant under rotation about the drive axis") {
    const DipoleSource src = make_source();
    for (int i = 0; i < 6; ++i) {
        const double ang = 2.0 * std::numbers::pi * i / 6.0;
        const Eigen::Vector3d p0{0.02, 0.01, 0.0};
        const Eigen::AngleAxisd rot(ang, Eigen::Vector3d::UnitX());
        const Eigen::Vector3d p1 = rot * p0;
        CHECK(peak_speed_envelope(src, p1) ==
              doctest::Approx(peak_speed_envelope(src, p0)).epsilon(1e-12));
        // Rotating the evaluation point rotates the velocity with it.
        const Eigen::Vector3d v0 = dipole_velocity(src, p0, 0.013).velocity;
        const Eigen::Vector3d v1 = dipole_velocity(src, p1, 0.013).velocity;
        CHECK((rot * v0 - v1).norm() < 1e-12 * v0.norm());
    }
}

TEST_CASE("time periodicity with period 1/f") {
    const DipoleSource src = make_source(0.005, 0.05, 12.5);
    const Eigen::Vector3d point{0.021, -0.007, 0.013};
    for (double t : {0.0, 0.0123, 0.5, 1.724}) {
        const Eigen::Vector3d v0 = dipole_velocity(src, point, t).velocity;
        const Eigen::Vector3d v1 = dipole_velocity(src, point, t + 1.0 / src.frequency_hz).velocity;
        CHECK((v0 - v1).norm() <= 1e-12 * std::max(1e-30, v0.norm()) + 1e-18);
    }
}

TEST_CASE("linearity in the drive amplitude") {
    DipoleSource src = make_source();
    const Eigen::Vector3d point{0.017, 0.009, -0.004};
    const Eigen::Vector3d v1 = dipole_velocity(src, point, 0.02).velocity;
    src.velocity_amplitude *= 2.0;
    const Eigen::Vector3d v2 = dipole_velocity(src, point, 0.02).velocity;
    CHECK((v2 - 2.0 * v1).norm() < 1e-15);
}

TEST_CASE("source validation") {
    DipoleSource src = make_source();
    src.drive_axis = {1.0, 1.0, 0.0};  // not unit
    CHECK_THROWS_AS(src.validate(), std::invalid_argument);
    src = make_source();
    src.sphere_radius = 0.0;
    CHECK_THROWS_AS(src.validate(), std::invalid_argument);
    src = make_source();
    src.frequency_hz = 0.0;
    CHECK_THROWS_AS(src.validate(), std::invalid_argument);
}
