#pragma once

#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/Dense>

namespace whisker {

struct GaussNewtonOptions {
    int max_iterations = 100;
    double step_tol = 1e-12;
    double cost_tol = 1e-14;
    Eigen::VectorXd lower;  // optional box bounds, empty = unbounded
    Eigen::VectorXd upper;
};

struct GaussNewtonResult {
    Eigen::VectorXd params;
    double cost = std::numeric_limits<double>::infinity();  // 0.5 * |r|^2
    int iterations = 0;
    bool converged = false;
};

// Damped Gauss-Newton (Levenberg-style diagonal damping) with a central
// finite-difference Jacobian. `residual` maps params to the residual vector.
inline GaussNewtonResult gauss_newton(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residual,
    Eigen::VectorXd x, const GaussNewtonOptions& opt = {}) {
    const auto clamp_box = [&](Eigen::VectorXd& p) {
        if (opt.lower.size() == p.size())
            for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = std::max(p[i], opt.lower[i]);
        if (opt.upper.size() == p.size())
            for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = std::min(p[i], opt.upper[i]);
    };
    clamp_box(x);

    GaussNewtonResult res;
    Eigen::VectorXd r = residual(x);
    double cost = 0.5 * r.squaredNorm();
    double lambda = 1e-6;

    for (int it = 0; it < opt.max_iterations; ++it) {
        res.iterations = it + 1;

        Eigen::MatrixXd jac(r.size(), x.size());
        for (Eigen::Index j = 0; j < x.size(); ++j) {
            const double h = 1e-7 * std::max(1.0, std::abs(x[j]));
            Eigen::VectorXd xp = x, xm = x;
            xp[j] += h;
            xm[j] -= h;
            clamp_box(xp);
            clamp_box(xm);
            const double span = xp[j] - xm[j];
            jac.col(j) = span > 0.0 ? ((residual(xp) - residual(xm)) / span).eval()
                                    : Eigen::VectorXd::Zero(r.size()).eval();
        }

        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd g = jac.transpose() * r;
        if (g.lpNorm<Eigen::Infinity>() < 1e-14 * std::max(1.0, cost)) {
            res.converged = true;
            break;
        }

        bool accepted = false;
        for (int attempt = 0; attempt < 12; ++attempt) {
            Eigen::MatrixXd damped = jtj;
            damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
            const Eigen::VectorXd step = damped.ldlt().solve(-g);
            Eigen::VectorXd x_new = x + step;
            clamp_box(x_new);
            const Eigen::VectorXd r_new = residual(x_new);
            const double cost_new = 0.5 * r_new.squaredNorm();
            if (cost_new < cost) {
                const double rel_step = (x_new - x).norm() / std::max(1.0, x.norm());
                const double rel_impr = (cost - cost_new) / std::max(cost, 1e-300);
                x = std::move(x_new);
                r = r_new;
                cost = cost_new;
                lambda = std::max(lambda / 3.0, 1e-12);
                accepted = true;
                if (rel_step < opt.step_tol || rel_impr < opt.cost_tol) res.converged = true;
                break;
            }
            lambda *= 10.0;
        }
        if (!accepted || res.converged) {
            res.converged = res.converged || !accepted;  // stalled = local optimum
            break;
        }
    }
    res.params = std::move(x);
    res.cost = cost;
    return res;
}

}  // namespace whisker
