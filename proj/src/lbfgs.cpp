#include "tnrd/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace tnrd {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double inf_norm(const std::vector<double>& a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

bool finite(double f, const std::vector<double>& g) {
    if (!std::isfinite(f)) return false;
    for (double v : g)
        if (!std::isfinite(v)) return false;
    return true;
}

// One point along the search ray: phi(a) = f(x + a d), dphi = <g, d>.
struct LsPoint {
    double a = 0.0;
    double f = std::numeric_limits<double>::infinity();
    double dphi = 0.0;
    bool ok = false;  // finite objective and gradient
    std::vector<double> x, g;
};

}  // namespace

LbfgsResult lbfgs_minimize(const ObjectiveFn& objective, const std::vector<double>& x0,
                           const LbfgsOptions& opts) {
    const size_t n = x0.size();
    std::vector<double> x = x0, g(n);
    double f = objective(x, g);
    if (!finite(f, g))
        throw std::runtime_error("lbfgs_minimize: non-finite objective or gradient at x0");

    LbfgsResult best;
    best.x = x;
    best.f = f;
    auto consider_best = [&best](const LsPoint& p) {
        if (p.ok && p.f < best.f) {
            best.f = p.f;
            best.x = p.x;
        }
    };

    std::deque<std::vector<double>> s_hist, y_hist;
    std::deque<double> rho_hist;
    std::vector<double> d(n), q(n);

    for (int iter = 0; iter < opts.max_iters; ++iter) {
        if (inf_norm(g) <= opts.grad_tol * std::max(1.0, inf_norm(x))) {
            best.converged = true;
            break;
        }

        // Two-loop recursion: d = -H g.
        q = g;
        const int k = static_cast<int>(s_hist.size());
        std::vector<double> alpha(k);
        for (int i = k - 1; i >= 0; --i) {
            alpha[i] = rho_hist[i] * dot(s_hist[i], q);
            for (size_t j = 0; j < n; ++j) q[j] -= alpha[i] * y_hist[i][j];
        }
        if (k > 0) {
            const double yy = dot(y_hist[k - 1], y_hist[k - 1]);
            const double gamma = yy > 0.0 ? dot(s_hist[k - 1], y_hist[k - 1]) / yy : 1.0;
            for (size_t j = 0; j < n; ++j) q[j] *= gamma;
        }
        for (int i = 0; i < k; ++i) {
            const double beta = rho_hist[i] * dot(y_hist[i], q);
            for (size_t j = 0; j < n; ++j) q[j] += s_hist[i][j] * (alpha[i] - beta);
        }
        for (size_t j = 0; j < n; ++j) d[j] = -q[j];

        double dg0 = dot(d, g);
        if (dg0 >= 0.0) {  // lost descent; restart from steepest descent
            for (size_t j = 0; j < n; ++j) d[j] = -g[j];
            dg0 = -dot(g, g);
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
        }
        const double f0 = f;

        auto eval_ray = [&](double a) {
            LsPoint p;
            p.a = a;
            p.x = x;
            for (size_t j = 0; j < n; ++j) p.x[j] += a * d[j];
            p.g.resize(n);
            p.f = objective(p.x, p.g);
            p.ok = finite(p.f, p.g);
            if (p.ok) {
                p.dphi = dot(p.g, d);
                consider_best(p);
            }
            return p;
        };
        auto wolfe1 = [&](const LsPoint& p) {
            return p.ok && p.f <= f0 + opts.c1 * p.a * dg0;
        };
        auto wolfe2 = [&](const LsPoint& p) { return std::abs(p.dphi) <= -opts.c2 * dg0; };

        // Nocedal & Wright Alg. 3.6. lo satisfies Wolfe-1 with the lowest f
        // seen; the minimizer is bracketed between lo and hi.
        auto zoom = [&](LsPoint lo, LsPoint hi) -> LsPoint {
            for (int z = 0; z < 50; ++z) {
                double a_mid;
                if (hi.ok) {
                    // quadratic through (lo.f, lo.dphi, hi.f), guarded
                    const double span = hi.a - lo.a;
                    const double denom = 2.0 * (hi.f - lo.f - lo.dphi * span);
                    a_mid = denom != 0.0 ? lo.a - lo.dphi * span * span / denom
                                         : 0.5 * (lo.a + hi.a);
                    const double lo_b = std::min(lo.a, hi.a) + 0.1 * std::abs(span);
                    const double hi_b = std::max(lo.a, hi.a) - 0.1 * std::abs(span);
                    if (!(a_mid >= lo_b && a_mid <= hi_b)) a_mid = 0.5 * (lo.a + hi.a);
                } else {
                    a_mid = 0.5 * (lo.a + hi.a);
                }
                LsPoint mid = eval_ray(a_mid);
                if (!wolfe1(mid) || mid.f >= lo.f) {
                    hi = std::move(mid);
                } else {
                    if (wolfe2(mid)) return mid;
                    if (mid.dphi * (hi.a - lo.a) >= 0.0) hi = lo;
                    lo = std::move(mid);
                }
                if (std::abs(hi.a - lo.a) <= 1e-14 * std::max(1.0, std::abs(lo.a))) break;
            }
            LsPoint fail;
            return fail;
        };

        LsPoint start;
        start.a = 0.0;
        start.f = f0;
        start.dphi = dg0;
        start.ok = true;
        start.x = x;
        start.g = g;

        LsPoint accepted;
        LsPoint prev = start;
        double a = (iter == 0) ? std::min(1.0, 1.0 / std::max(1.0, inf_norm(g))) : 1.0;
        constexpr double a_max = 1e6;
        for (int ls = 0; ls < 30; ++ls) {
            LsPoint cur = eval_ray(a);
            if (!wolfe1(cur) || (ls > 0 && cur.f >= prev.f)) {
                accepted = zoom(std::move(prev), std::move(cur));
                break;
            }
            if (wolfe2(cur)) {
                accepted = std::move(cur);
                break;
            }
            if (cur.dphi >= 0.0) {
                accepted = zoom(std::move(cur), std::move(prev));
                break;
            }
            prev = std::move(cur);
            a = 2.0 * a;
            if (a > a_max) break;
        }

        if (!accepted.ok) {
            best.line_search_failed = true;
            break;
        }

        std::vector<double> s(n), yv(n);
        for (size_t j = 0; j < n; ++j) {
            s[j] = accepted.x[j] - x[j];
            yv[j] = accepted.g[j] - g[j];
        }
        const double sy = dot(s, yv);
        if (sy > 1e-12 * std::sqrt(dot(s, s) * dot(yv, yv))) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(yv));
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > opts.memory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }

        x = std::move(accepted.x);
        g = std::move(accepted.g);
        f = accepted.f;
        best.iterations = iter + 1;
        if (opts.log) opts.log(iter + 1, f, std::sqrt(dot(g, g)), accepted.a);
    }

    return best;
}

}  // namespace tnrd
