#ifndef TNRD_LBFGS_HPP
#define TNRD_LBFGS_HPP

#include <functional>
#include <vector>

namespace tnrd {

/// Objective callback: fills grad (same size as x) and returns f(x).
using ObjectiveFn = std::function<double(const std::vector<double>& x, std::vector<double>& grad)>;

/// Per-iteration report: iteration index, objective, gradient norm, step length.
using LbfgsLogFn = std::function<void(int iter, double f, double gnorm, double step)>;

struct LbfgsOptions {
    int max_iters = 200;
    int memory = 10;
    double c1 = 1e-4;   // sufficient decrease (strong Wolfe)
    double c2 = 0.9;    // curvature (strong Wolfe)
    double grad_tol = 1e-10;  // stop when ||g||_inf <= grad_tol * max(1, ||x||_inf)
    LbfgsLogFn log;
};

struct LbfgsResult {
    std::vector<double> x;   // best-seen iterate
    double f = 0.0;          // objective at x
    int iterations = 0;
    bool converged = false;  // gradient tolerance reached
    bool line_search_failed = false;
};

/// Limited-memory BFGS with a strong-Wolfe line search. Returns the best-seen
/// iterate; the result objective never exceeds the objective at x0. A failed
/// line search terminates gracefully. Non-finite objective or gradient at an
/// accepted iterate aborts with a diagnostic (non-finite values at trial
/// points during the line search are treated as a rejected step).
LbfgsResult lbfgs_minimize(const ObjectiveFn& objective, const std::vector<double>& x0,
                           const LbfgsOptions& opts = {});

}  // namespace tnrd

#endif
