#include "whisker/defaults.hpp"

#include <cmath>
#include <stdexcept>

#include "whisker/gauss_newton.hpp"

namespace whisker::defaults {

FittedDefaults fit_default_params(const AnchorSet& anchors, const ChannelCalibration& cal,
                                  const ReadoutChain& chain, const DipoleSource& source) {
    if (!(anchors.a4_v > 0.0) || !(anchors.a1_v > 0.0) || !(anchors.anchor_l_m > 0.0) ||
        !(anchors.range_m > anchors.anchor_l_m))
        throw std::invalid_argument("fit_default_params: empty or inconsistent anchor set");
    cal.validate();

    const double beta = chain.small_signal_gain(cal.baseline_ohm);
    const auto& k = cal.sensitivity_ohm_per_n;
    const double k1 = std::abs(k(0, 0)), k2 = std::abs(k(1, 1));
    const double k3 = std::abs(k(2, 0)), k4 = std::abs(k(3, 1));
    const double a = source.sphere_radius;
    const double u = source.velocity_amplitude;
    const double l0 = anchors.anchor_l_m;

    // Closed-form seed. At the anchor (T = 0, transverse drive) the broadside
    // envelope is U a^3 / (2 L0^3) along the transverse axis only, so channel
    // 1 sees its floor alone; the range anchor puts the strongest
    // longitudinal channel (3) at 3x its floor:
    //   phi = (k3/k4) (L0/R)^3 (A4 - phi)  ->  phi
    //   beta k4 C v0 = A4 - phi            ->  C
    const double ratio = (k3 / k4) * std::pow(l0 / anchors.range_m, 3.0);
    double phi = ratio * anchors.a4_v / (1.0 + ratio);
    const double v0 = u * a * a * a / (2.0 * l0 * l0 * l0);
    double drag_gain = (anchors.a4_v - phi) / (beta * k4 * v0);

    const auto build = [&](double c_gain, double floor_q, double floor_ch1) {
        localization::ForwardModelParams p;
        p.gain_v_per_mps = {beta * k1 * c_gain, beta * k2 * c_gain, beta * k3 * c_gain,
                            beta * k4 * c_gain};
        p.noise_floor_v = {floor_ch1, floor_q, floor_q, floor_q};
        p.decay_exponent = 3.0;
        p.sphere_radius_m = a;
        p.velocity_amplitude_mps = u;
        return p;
    };

    // Residuals over the anchor set; the fit remains valid for perturbed or
    // overdetermined anchors where the closed form is only approximate.
    const auto anchor_residual = [&](const Eigen::VectorXd& x) {
        const localization::ForwardModelParams p = build(x[0], x[1], x[2]);
        const std::array<double, 4> amp = localization::forward_amplitudes(
            p, l0, 0.0, localization::DriveAxis::transverse);
        const localization::OperationalRange r = localization::operational_range(p);
        Eigen::VectorXd res(3);
        res[0] = (amp[3] - anchors.a4_v) / anchors.a4_v;
        res[1] = (amp[0] - anchors.a1_v) / anchors.a1_v;
        res[2] = ((r.finite ? r.l_m : 1.0) - anchors.range_m) / anchors.range_m;
        return res;
    };

    GaussNewtonOptions opt;
    opt.lower = Eigen::Vector3d(1e-9, 1e-9, 1e-9);
    opt.upper = Eigen::Vector3d::Constant(1e12);
    const GaussNewtonResult gn = gauss_newton(
        anchor_residual, Eigen::Vector3d(drag_gain, phi, anchors.a1_v), opt);
    if (!gn.converged) {
        const double rms = std::sqrt(2.0 * gn.cost / 3.0);
        throw std::runtime_error("fit_default_params: fit did not converge, residual RMS " +
                                 std::to_string(rms));
    }

    FittedDefaults out;
    out.drag.linear_gain_n_per_mps = gn.params[0];
    out.forward = build(gn.params[0], gn.params[1], gn.params[2]);
    out.residual = std::sqrt(2.0 * gn.cost / 3.0);
    return out;
}

const FittedDefaults& fitted_defaults() {
    static const FittedDefaults fd = fit_default_params(AnchorSet{}, ChannelCalibration::defaults(),
                                                        underwater_chain(), DipoleSource{});
    return fd;
}

ReadoutChain underwater_chain() {
    return ReadoutChain{};  // gain 166, 6.25 kHz, +-10 V
}

}  // namespace whisker::defaults

namespace whisker::localization {

ForwardModelParams ForwardModelParams::defaults() {
    return whisker::defaults::fitted_defaults().forward;
}

}  // namespace whisker::localization

namespace whisker::defaults {

ReadoutChain static_chain() {
    ReadoutChain chain;
    chain.amplifier_gain = 23.5;
    return chain;
}

}  // namespace whisker::defaults
