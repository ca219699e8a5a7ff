#pragma once

// 1-d root finding: plain bisection (kept for step functions, where it
// converges to the lower boundary of {f >= 0}) and Brent's method for
// smooth residuals.

#include <cmath>
#include <functional>
#include <stdexcept>

namespace rankval {

struct RootResult {
    double x = 0.0;
    double f = 0.0;      // residual at x
    int iterations = 0;
    bool bracketed = true;
};

// Smallest x in [lo, hi] with f(x) >= 0, given f(lo) < 0 <= f(hi).
// f need not be continuous: the invariant f(lo) < 0 <= f(hi) is kept, so
// for monotone step functions this converges to the jump location.
template <class F>
RootResult bisect_lower_boundary(F&& f, double lo, double hi, double xtol, int max_iter = 200) {
    RootResult r;
    double flo = f(lo), fhi = f(hi);
    if (flo >= 0.0) { r.x = lo; r.f = flo; return r; }
    if (fhi < 0.0) { r.x = hi; r.f = fhi; r.bracketed = false; return r; }
    int it = 0;
    while (hi - lo > xtol && it < max_iter) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm >= 0.0) { hi = mid; fhi = fm; } else { lo = mid; flo = fm; }
        ++it;
    }
    r.x = hi;  // the side satisfying f >= 0
    r.f = fhi;
    r.iterations = it;
    return r;
}

// Brent's method on [a, b] with f(a), f(b) of opposite sign.
// Classic zeroin structure (Forsythe-Malcolm-Moler).
template <class F>
RootResult brent(F&& f, double a, double b, double xtol, int max_iter = 200) {
    double fa = f(a), fb = f(b);
    RootResult res;
    if (fa == 0.0) { res.x = a; return res; }
    if (fb == 0.0) { res.x = b; return res; }
    if ((fa > 0.0) == (fb > 0.0)) {
        res.x = std::fabs(fa) < std::fabs(fb) ? a : b;
        res.f = std::fabs(fa) < std::fabs(fb) ? fa : fb;
        res.bracketed = false;
        return res;
    }
    double c = a, fc = fa, d = b - a, e = d;
    int it = 0;
    for (; it < max_iter; ++it) {
        if ((fb > 0.0) == (fc > 0.0)) { c = a; fc = fa; d = e = b - a; }
        if (std::fabs(fc) < std::fabs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        const double tol = 2.0 * std::numeric_limits<double>::epsilon() * std::fabs(b) + 0.5 * xtol;
        const double m = 0.5 * (c - b);
        if (std::fabs(m) <= tol || fb == 0.0) break;
        if (std::fabs(e) >= tol && std::fabs(fa) > std::fabs(fb)) {
            // inverse quadratic / secant
            const double s = fb / fa;
            double p, q;
            if (a == c) {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                const double qq = fa / fc, r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q; else p = -p;
            if (2.0 * p < std::min(3.0 * m * q - std::fabs(tol * q), std::fabs(e * q))) {
                e = d; d = p / q;
            } else {
                d = m; e = m;
            }
        } else {
            d = m; e = m;
        }
        a = b; fa = fb;
        b += (std::fabs(d) > tol) ? d : (m > 0.0 ? tol : -tol);
        fb = f(b);
    }
    res.x = b;
    res.f = fb;
    res.iterations = it;
    return res;
}

// Expand [lo, hi] geometrically until f changes sign; throws if no bracket
// is found within max_expand doublings.
template <class F>
std::pair<double, double> expand_bracket(F&& f, double lo, double hi, int max_expand = 120) {
    double flo = f(lo), fhi = f(hi);
    for (int k = 0; k < max_expand; ++k) {
        if ((flo > 0.0) != (fhi > 0.0) || flo == 0.0 || fhi == 0.0) return {lo, hi};
        const double w = hi - lo;
        if (std::fabs(flo) < std::fabs(fhi)) { lo -= w; flo = f(lo); }
        else { hi += w; fhi = f(hi); }
    }
    throw std::runtime_error("expand_bracket: no sign change found");
}

}  // namespace rankval
