#pragma once

// Adaptive Gauss-Kronrod (G7,K15) quadrature on a finite interval, plus a
// half-line wrapper using the change of variables s = u/(1-u).

#include <cmath>
#include <stdexcept>
#include <vector>

namespace rankval {

struct QuadratureFailure : std::runtime_error {
    explicit QuadratureFailure(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

// QUADPACK G7K15 nodes/weights on [-1, 1].
inline constexpr double kGK15Nodes[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};
inline constexpr double kGK15WeightsK[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
inline constexpr double kGK15WeightsG[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

template <class F>
void gk15(F&& f, double a, double b, double& value, double& error) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double k_sum = 0.0, g_sum = 0.0;
    for (int i = 0; i < 8; ++i) {
        const double dx = h * kGK15Nodes[i];
        double fv;
        if (i == 7) {
            fv = f(c);
            k_sum += kGK15WeightsK[7] * fv;
            g_sum += kGK15WeightsG[3] * fv;
        } else {
            fv = f(c - dx) + f(c + dx);
            k_sum += kGK15WeightsK[i] * fv;
            if (i % 2 == 1) g_sum += kGK15WeightsG[i / 2] * fv;
        }
    }
    value = k_sum * h;
    const double diff = std::fabs(k_sum - g_sum) * h;
    // QUADPACK-style error inflation of |K-G|
    error = diff * std::sqrt(diff > 0.0 ? std::min(1.0, std::sqrt(200.0 * diff)) : 0.0);
    if (error < diff) error = diff;
}

}  // namespace detail

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    int segments = 1;
};

// Integrate f over [a, b] to absolute tolerance abstol; splits the worst
// segment until the summed error estimate is below tolerance.
template <class F>
QuadratureResult integrate(F&& f, double a, double b, double abstol = 1e-10,
                           int max_segments = 4096) {
    struct Seg { double a, b, value, error; };
    std::vector<Seg> segs;
    Seg s{a, b, 0.0, 0.0};
    detail::gk15(f, a, b, s.value, s.error);
    segs.push_back(s);

    double total_err = s.error;
    while (total_err > abstol && static_cast<int>(segs.size()) < max_segments) {
        // split the segment with the largest error
        std::size_t worst = 0;
        for (std::size_t i = 1; i < segs.size(); ++i)
            if (segs[i].error > segs[worst].error) worst = i;
        const Seg w = segs[worst];
        const double mid = 0.5 * (w.a + w.b);
        if (mid <= w.a || mid >= w.b) break;  // interval exhausted at double precision
        Seg l{w.a, mid, 0.0, 0.0}, r{mid, w.b, 0.0, 0.0};
        detail::gk15(f, l.a, l.b, l.value, l.error);
        detail::gk15(f, r.a, r.b, r.value, r.error);
        segs[worst] = l;
        segs.push_back(r);
        total_err += l.error + r.error - w.error;
    }

    QuadratureResult out;
    out.segments = static_cast<int>(segs.size());
    for (const Seg& g : segs) {
        out.value += g.value;
        out.error += g.error;
    }
    if (!(out.error <= std::max(abstol * 50.0, 1e-6)) || !std::isfinite(out.value)) {
        throw QuadratureFailure("integrate: failed to reach tolerance");
    }
    return out;
}

// Integral of f over (0, inf) via s = u/(1-u), ds = du/(1-u)^2.
template <class F>
QuadratureResult integrate_half_line(F&& f, double abstol = 1e-10) {
    return integrate(
        [&f](double u) {
            const double om = 1.0 - u;
            const double s = u / om;
            return f(s) / (om * om);
        },
        0.0, 1.0, abstol);
}

}  // namespace rankval
