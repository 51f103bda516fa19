#include "whisker/localization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace whisker::localization {

namespace {

constexpr double kGridLMin = 0.005, kGridLMax = 0.060, kGridStep = 0.001;
constexpr double kGridTMax = 0.040;
constexpr double kWedge = 0.55;  // identifiability wedge |T| <= kWedge * L

struct EnvelopeComponents {
    double vx = 0.0;  // |envelope| projected on the longitudinal axis
    double vy = 0.0;  // transverse axis
};

EnvelopeComponents envelope_at(const ForwardModelParams& p, double l_m, double t_m,
                               DriveAxis drive) {
    const double rho = std::hypot(l_m, t_m);
    if (rho <= p.sphere_radius_m)
        throw std::domain_error("forward_amplitudes: sensor position inside the source sphere");
    const double rx = l_m / rho, ry = t_m / rho;
    const double ux = drive == DriveAxis::longitudinal ? 1.0 : 0.0;
    const double uy = drive == DriveAxis::longitudinal ? 0.0 : 1.0;
    const double c = ux * rx + uy * ry;
    // Generalized doublet: 0.5 U (a/rho)^n (3 c rhat - uhat); n = 3 is the
    // potential-flow dipole.
    const double scale =
        0.5 * p.velocity_amplitude_mps * std::pow(p.sphere_radius_m / rho, p.decay_exponent);
    return {std::abs(scale * (3.0 * c * rx - ux)), std::abs(scale * (3.0 * c * ry - uy))};
}

std::array<double, 4> model_amplitudes(const ForwardModelParams& p, double l_m, double t_m,
                                       DriveAxis drive) {
    const EnvelopeComponents v = envelope_at(p, l_m, t_m, drive);
    return {p.gain_v_per_mps[0] * v.vx + p.noise_floor_v[0],
            p.gain_v_per_mps[1] * v.vy + p.noise_floor_v[1],
            p.gain_v_per_mps[2] * v.vx + p.noise_floor_v[2],
            p.gain_v_per_mps[3] * v.vy + p.noise_floor_v[3]};
}

// Relative residuals so the unknown overall gain chain cancels.
double relative_cost(const ForwardModelParams& p, const std::array<double, 4>& obs, double l_m,
                     double t_m, DriveAxis drive) {
    const std::array<double, 4> model = model_amplitudes(p, l_m, t_m, drive);
    double ss = 0.0;
    for (int i = 0; i < 4; ++i) {
        const double den = std::max({obs[static_cast<std::size_t>(i)],
                                     p.noise_floor_v[static_cast<std::size_t>(i)], 1e-12});
        const double r = (model[static_cast<std::size_t>(i)] - obs[static_cast<std::size_t>(i)]) / den;
        ss += r * r;
    }
    return ss;
}

}  // namespace

void ForwardModelParams::validate() const {
    for (double g : gain_v_per_mps)
        if (!(g > 0.0)) throw std::invalid_argument("ForwardModelParams: gains must be > 0");
    for (double f : noise_floor_v)
        if (!(f >= 0.0)) throw std::invalid_argument("ForwardModelParams: floors must be >= 0");
    if (!(decay_exponent > 0.0))
        throw std::invalid_argument("ForwardModelParams: decay exponent must be > 0");
    if (!(sphere_radius_m > 0.0) || !(velocity_amplitude_mps >= 0.0))
        throw std::invalid_argument("ForwardModelParams: invalid reference source");
}

std::array<double, 4> forward_amplitudes(const ForwardModelParams& params, double l_m,
                                         double t_m, DriveAxis drive) {
    params.validate();
    return model_amplitudes(params, l_m, t_m, drive);
}

DecayFit fit_decay(std::span<const double> l_m, std::span<const double> amplitude_v) {
    if (l_m.size() != amplitude_v.size() || l_m.size() < 4)
        throw std::invalid_argument("fit_decay: need >= 4 paired samples");
    std::vector<double> uniq(l_m.begin(), l_m.end());
    std::sort(uniq.begin(), uniq.end());
    if (std::unique(uniq.begin(), uniq.end()) - uniq.begin() < 4)
        throw std::invalid_argument("fit_decay: need >= 4 distinct distances");
    for (std::size_t i = 0; i < l_m.size(); ++i)
        if (!(l_m[i] > 0.0) || !(amplitude_v[i] > 0.0))
            throw std::invalid_argument("fit_decay: distances and amplitudes must be > 0");

    const auto n_pts = static_cast<double>(l_m.size());
    double mean_a = 0.0, min_a = amplitude_v[0], max_a = amplitude_v[0];
    for (double a : amplitude_v) {
        mean_a += a;
        min_a = std::min(min_a, a);
        max_a = std::max(max_a, a);
    }
    mean_a /= n_pts;

    if ((max_a - min_a) <= 1e-9 * mean_a) {
        // No decay information; report the mean as floor.
        DecayFit flat;
        flat.a0 = 0.0;
        flat.exponent = 0.0;
        flat.floor = mean_a;
        flat.converged = true;
        flat.identifiable = false;
        return flat;
    }

    // Profile over n: the model is linear in (a0, floor) at fixed n.
    const auto profile_ls = [&](double n, double& a0, double& floor) {
        double sxx = 0.0, sx = 0.0, sxy = 0.0, sy = 0.0;
        for (std::size_t i = 0; i < l_m.size(); ++i) {
            const double x = std::pow(l_m[i], -n);
            sxx += x * x;
            sx += x;
            sxy += x * amplitude_v[i];
            sy += amplitude_v[i];
        }
        const double det = sxx * n_pts - sx * sx;
        a0 = (sxy * n_pts - sx * sy) / det;
        floor = (sxx * sy - sx * sxy) / det;
        if (floor < 0.0) {  // clamp to the physical floor and refit a0 alone
            floor = 0.0;
            a0 = sxy / sxx;
        }
        double ss = 0.0;
        for (std::size_t i = 0; i < l_m.size(); ++i) {
            const double r = amplitude_v[i] - (a0 * std::pow(l_m[i], -n) + floor);
            ss += r * r;
        }
        return ss;
    };

    double best_n = 3.0, best_a0 = 0.0, best_floor = 0.0;
    double best_ss = std::numeric_limits<double>::infinity();
    for (double n = 0.3; n <= 6.0 + 1e-9; n += 0.02) {
        double a0 = 0.0, floor = 0.0;
        const double ss = profile_ls(n, a0, floor);
        if (ss < best_ss) {
            best_ss = ss;
            best_n = n;
            best_a0 = a0;
            best_floor = floor;
        }
    }

    const auto residual = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(static_cast<Eigen::Index>(l_m.size()));
        for (std::size_t i = 0; i < l_m.size(); ++i)
            r[static_cast<Eigen::Index>(i)] =
                amplitude_v[i] - (p[0] * std::pow(l_m[i], -p[1]) + p[2]);
        return r;
    };
    GaussNewtonOptions opt;
    opt.lower = Eigen::Vector3d(0.0, 0.05, 0.0);
    opt.upper = Eigen::Vector3d(std::numeric_limits<double>::infinity(), 10.0,
                                std::numeric_limits<double>::infinity());
    const GaussNewtonResult gn =
        gauss_newton(residual, Eigen::Vector3d(best_a0, best_n, best_floor), opt);

    DecayFit fit;
    fit.a0 = gn.params[0];
    fit.exponent = gn.params[1];
    fit.floor = gn.params[2];
    fit.converged = gn.converged;
    if (!gn.converged) throw DecayFitError(fit);
    return fit;
}

AxisCall classify_axis(const std::array<double, 4>& amplitudes) {
    for (double a : amplitudes)
        if (!(a >= 0.0)) throw std::invalid_argument("classify_axis: amplitudes must be >= 0");
    const double rms_long = std::sqrt(0.5 * (amplitudes[0] * amplitudes[0] +
                                             amplitudes[2] * amplitudes[2]));
    const double rms_trans = std::sqrt(0.5 * (amplitudes[1] * amplitudes[1] +
                                              amplitudes[3] * amplitudes[3]));
    if (rms_long == 0.0 && rms_trans == 0.0)
        throw std::domain_error("classify_axis: all-zero amplitudes");

    AxisCall call;
    call.axis = rms_long > rms_trans ? Axis::longitudinal : Axis::transverse;
    const double hi = std::max(rms_long, rms_trans);
    const double lo = std::min(rms_long, rms_trans);
    call.ratio = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    call.ambiguous = call.ratio < 1.2;
    return call;
}

GeometryEstimate localize(const std::array<double, 4>& amplitudes, double f_detected_hz,
                          const ForwardModelParams& params, std::vector<DriveAxis> hypotheses) {
    params.validate();
    if (hypotheses.empty())
        throw std::invalid_argument("localize: empty hypothesis set");

    GeometryEstimate est;
    est.frequency_hz = f_detected_hz;

    bool any_signal = false;
    for (int i = 0; i < 4; ++i)
        if (amplitudes[static_cast<std::size_t>(i)] >
            params.noise_floor_v[static_cast<std::size_t>(i)] * 1.001)
            any_signal = true;
    const OperationalRange range = operational_range(params);
    if (!any_signal) {
        est.l_m = range.finite ? range.l_m : kGridLMax;
        est.t_abs_m = 0.0;
        est.in_range = false;
        est.residual = std::sqrt(relative_cost(params, amplitudes, est.l_m, 0.0,
                                               DriveAxis::longitudinal) / 4.0);
        return est;
    }

    struct HypothesisFit {
        DriveAxis drive = DriveAxis::longitudinal;
        double l = 0.0, t = 0.0, cost = std::numeric_limits<double>::infinity();
    };
    std::vector<HypothesisFit> fits;

    const int n_l = static_cast<int>(std::lround((kGridLMax - kGridLMin) / kGridStep)) + 1;
    const int n_t = static_cast<int>(std::lround(kGridTMax / kGridStep)) + 1;

    for (DriveAxis drive : hypotheses) {
        std::vector<double> cost(static_cast<std::size_t>(n_l) * static_cast<std::size_t>(n_t),
                                 std::numeric_limits<double>::infinity());
#pragma omp parallel for schedule(static)
        for (int il = 0; il < n_l; ++il) {
            const double l = kGridLMin + kGridStep * il;
            for (int it = 0; it < n_t; ++it) {
                const double t = kGridStep * it;
                if (t > kWedge * l || std::hypot(l, t) <= params.sphere_radius_m) continue;
                cost[static_cast<std::size_t>(il) * static_cast<std::size_t>(n_t) +
                     static_cast<std::size_t>(it)] = relative_cost(params, amplitudes, l, t, drive);
            }
        }
        std::size_t best = 0;
        for (std::size_t i = 1; i < cost.size(); ++i)
            if (cost[i] < cost[best]) best = i;

        HypothesisFit fit;
        fit.drive = drive;
        fit.l = kGridLMin + kGridStep * static_cast<double>(best / static_cast<std::size_t>(n_t));
        fit.t = kGridStep * static_cast<double>(best % static_cast<std::size_t>(n_t));

        const auto residual = [&](const Eigen::VectorXd& p) {
            const double l = p[0], t = std::abs(p[1]);
            Eigen::VectorXd r(4);
            if (std::hypot(l, t) <= params.sphere_radius_m) {
                r.setConstant(1e6);
                return r;
            }
            const std::array<double, 4> model = model_amplitudes(params, l, t, drive);
            for (int i = 0; i < 4; ++i) {
                const double den = std::max({amplitudes[static_cast<std::size_t>(i)],
                                             params.noise_floor_v[static_cast<std::size_t>(i)],
                                             1e-12});
                r[i] = (model[static_cast<std::size_t>(i)] -
                        amplitudes[static_cast<std::size_t>(i)]) / den;
            }
            return r;
        };
        GaussNewtonOptions opt;
        opt.lower = Eigen::Vector2d(params.sphere_radius_m + 1e-4, 0.0);
        opt.upper = Eigen::Vector2d(0.100, 0.060);
        const GaussNewtonResult gn =
            gauss_newton(residual, Eigen::Vector2d(fit.l, fit.t), opt);
        fit.l = gn.params[0];
        fit.t = std::abs(gn.params[1]);
        fit.cost = 2.0 * gn.cost;  // back to sum of squared residuals
        fits.push_back(fit);
    }

    // Lower residual wins; near-ties defer to the amplitude-dominance call so
    // the reported geometry matches the apparent flow axis.
    const AxisCall call = classify_axis(amplitudes);
    std::size_t winner = 0;
    for (std::size_t i = 1; i < fits.size(); ++i) {
        if (fits[i].cost < fits[winner].cost * (1.0 - 1e-9)) {
            winner = i;
        } else if (fits[i].cost <= fits[winner].cost * (1.0 + 1e-9)) {
            const bool i_matches =
                (fits[i].drive == DriveAxis::longitudinal) == (call.axis == Axis::longitudinal);
            const bool w_matches =
                (fits[winner].drive == DriveAxis::longitudinal) == (call.axis == Axis::longitudinal);
            if (i_matches && !w_matches) winner = i;
        }
    }

    est.l_m = fits[winner].l;
    est.t_abs_m = fits[winner].t;
    est.residual = std::sqrt(fits[winner].cost / 4.0);
    est.axis = call.axis;
    est.drive_hypothesis = fits[winner].drive;
    est.in_range = !range.finite || est.l_m <= range.l_m;
    return est;
}

OperationalRange operational_range(const ForwardModelParams& params, double threshold_multiple) {
    params.validate();
    if (!(threshold_multiple > 1.0))
        throw std::domain_error(
            "operational_range: threshold at or below the noise floor is never crossed");

    // Noise-free signal exceeds threshold_multiple * floor_i iff
    // g_i * v_i(L) > (threshold_multiple - 1) * floor_i.
    const auto any_above = [&](double l) {
        const EnvelopeComponents v = envelope_at(params, l, 0.0, DriveAxis::longitudinal);
        for (int i = 0; i < 4; ++i) {
            const double signal = params.gain_v_per_mps[static_cast<std::size_t>(i)] *
                                  (i % 2 == 0 ? v.vx : v.vy);
            if (signal > (threshold_multiple - 1.0) *
                             params.noise_floor_v[static_cast<std::size_t>(i)])
                return true;
        }
        return false;
    };

    double lo = params.sphere_radius_m * (1.0 + 1e-9);
    double hi = 10.0;
    if (any_above(hi)) return {std::numeric_limits<double>::infinity(), false};
    if (!any_above(lo)) return {lo, true};
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (any_above(mid) ? lo : hi) = mid;
    }
    return {0.5 * (lo + hi), true};
}

}  // namespace whisker::localization
