#pragma once

// Small dense BFGS with Armijo backtracking. The likelihoods fit here are
// 1- or 2-dimensional and smooth; nothing fancier is warranted.

#include <cmath>
#include <functional>
#include <vector>

namespace rankval {

struct OptimResult {
    std::vector<double> x;
    double f = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Minimizes f(x); grad(x, g) writes the gradient into g.
// Deterministic: fixed start, fixed line-search schedule.
inline OptimResult bfgs_minimize(
    const std::function<double(const std::vector<double>&)>& f,
    const std::function<void(const std::vector<double>&, std::vector<double>&)>& grad,
    std::vector<double> x0, double grad_tol = 1e-8, int max_iter = 500) {
    const std::size_t n = x0.size();
    std::vector<double> g(n), g_new(n), p(n), s(n), yv(n);
    std::vector<std::vector<double>> H(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) H[i][i] = 1.0;

    OptimResult res;
    res.x = std::move(x0);
    res.f = f(res.x);
    grad(res.x, g);

    auto norm2 = [](const std::vector<double>& v) {
        double s2 = 0.0;
        for (double e : v) s2 += e * e;
        return std::sqrt(s2);
    };

    for (int it = 0; it < max_iter; ++it) {
        res.grad_norm = norm2(g);
        res.iterations = it;
        if (res.grad_norm < grad_tol) {
            res.converged = true;
            return res;
        }
        // p = -H g
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += H[i][j] * g[j];
            p[i] = -acc;
        }
        double slope = 0.0;
        for (std::size_t i = 0; i < n; ++i) slope += p[i] * g[i];
        if (slope >= 0.0) {
            // Hessian approximation lost positive definiteness; restart on
            // steepest descent.
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) H[i][j] = (i == j) ? 1.0 : 0.0;
            for (std::size_t i = 0; i < n; ++i) p[i] = -g[i];
            slope = -res.grad_norm * res.grad_norm;
        }

        // Armijo backtracking. Until the inverse-Hessian scale is learned
        // the raw gradient step overshoots by orders of magnitude when the
        // objective is a sum over many units, so the first iteration
        // starts from a unit-length move instead.
        double pnorm = 0.0;
        for (double e : p) pnorm += e * e;
        pnorm = std::sqrt(pnorm);
        double step = (it == 0 && pnorm > 1.0) ? 1.0 / pnorm : 1.0;
        double f_new = res.f;
        std::vector<double> x_new(n);
        bool moved = false;
        for (int ls = 0; ls < 60; ++ls) {
            for (std::size_t i = 0; i < n; ++i) x_new[i] = res.x[i] + step * p[i];
            f_new = f(x_new);
            if (std::isfinite(f_new) && f_new <= res.f + 1e-4 * step * slope) {
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved) {
            res.grad_norm = norm2(g);
            return res;  // stuck; report best point, converged stays false
        }
        grad(x_new, g_new);

        double sy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = x_new[i] - res.x[i];
            yv[i] = g_new[i] - g[i];
            sy += s[i] * yv[i];
        }
        if (sy > 1e-14) {
            if (it == 0) {
                // scale H0 to the curvature revealed by the first step
                double yy = 0.0;
                for (double e : yv) yy += e * e;
                if (yy > 0.0) {
                    const double scale = sy / yy;
                    for (std::size_t i = 0; i < n; ++i)
                        for (std::size_t j = 0; j < n; ++j)
                            H[i][j] = (i == j) ? scale : 0.0;
                }
            }
            // BFGS inverse update: H <- (I - rho s y')H(I - rho y s') + rho s s'
            const double rho = 1.0 / sy;
            std::vector<double> Hy(n, 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) Hy[i] += H[i][j] * yv[j];
            double yHy = 0.0;
            for (std::size_t i = 0; i < n; ++i) yHy += yv[i] * Hy[i];
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    H[i][j] += rho * rho * (sy + yHy) * s[i] * s[j]
                             - rho * (Hy[i] * s[j] + s[i] * Hy[j]);
                }
        }
        res.x = std::move(x_new);
        x_new.assign(n, 0.0);
        res.f = f_new;
        g.swap(g_new);
    }
    res.grad_norm = norm2(g);
    res.converged = res.grad_norm < grad_tol;
    res.iterations = max_iter;
    return res;
}

// Newton iteration on the gradient for 2-parameter problems. Line-search
// methods stall once the objective's floating-point noise exceeds the
// Armijo decrease (sums over 1e4+ likelihood terms reach that regime near
// the optimum); the gradient itself is still accurate there, so a few
// damped Newton steps with a finite-difference Hessian polish the point to
// grad_tol. Steps are only accepted while the gradient norm shrinks.
// max_step bounds each Newton move: likelihood ridges (e.g. a dispersion
// parameter whose MLE sits at infinity) shrink the gradient along the
// ridge, and an unbounded step would chase them into overflow.
inline OptimResult newton_polish_2d(
    const std::function<void(const std::vector<double>&, std::vector<double>&)>& grad,
    OptimResult start, double grad_tol = 1e-8, int max_iter = 12, double max_step = 2.0) {
    OptimResult res = std::move(start);
    if (res.x.size() != 2) return res;
    std::vector<double> g(2), gp(2), gm(2), x_new(2), g_new(2);
    grad(res.x, g);
    double gnorm = std::hypot(g[0], g[1]);
    for (int it = 0; it < max_iter && gnorm >= grad_tol; ++it) {
        const double h0 = 1e-6 * (1.0 + std::fabs(res.x[0]));
        const double h1 = 1e-6 * (1.0 + std::fabs(res.x[1]));
        std::vector<double> xp = res.x, xm = res.x;
        xp[0] += h0; xm[0] -= h0;
        grad(xp, gp); grad(xm, gm);
        const double h00 = (gp[0] - gm[0]) / (2 * h0), h10 = (gp[1] - gm[1]) / (2 * h0);
        xp = res.x; xm = res.x;
        xp[1] += h1; xm[1] -= h1;
        grad(xp, gp); grad(xm, gm);
        const double h11 = (gp[1] - gm[1]) / (2 * h1), h01 = (gp[0] - gm[0]) / (2 * h1);
        const double det = h00 * h11 - h01 * h10;
        if (!(std::fabs(det) > 1e-300)) break;
        double dx0 = -(h11 * g[0] - h01 * g[1]) / det;
        double dx1 = -(-h10 * g[0] + h00 * g[1]) / det;
        const double step_len = std::hypot(dx0, dx1);
        if (step_len > max_step) {
            dx0 *= max_step / step_len;
            dx1 *= max_step / step_len;
        }
        bool accepted = false;
        for (double damp = 1.0; damp >= 1.0 / 64.0; damp *= 0.5) {
            x_new[0] = res.x[0] + damp * dx0;
            x_new[1] = res.x[1] + damp * dx1;
            grad(x_new, g_new);
            const double gn = std::hypot(g_new[0], g_new[1]);
            if (std::isfinite(gn) && gn < gnorm) {
                res.x = x_new;
                g = g_new;
                gnorm = gn;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }
    res.grad_norm = gnorm;
    if (gnorm < grad_tol) res.converged = true;
    return res;
}

}  // namespace rankval
