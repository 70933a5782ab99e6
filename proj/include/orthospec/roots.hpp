#pragma once

#include <functional>

namespace orthospec {

struct RootResult {
    double x = 0.0;
    double f = 0.0;
    int iterations = 0;
};

// Bisection on a bracket with known endpoint signs (endpoints are never
// evaluated, so callers may pass sign surrogates for boundary points).
// Stops when |f| < f_tol or the bracket width falls below
// x_tol * max(1, |x|).
RootResult bisect(const std::function<double(double)>& f, double lo, double hi,
                  double f_lo, double f_hi, double x_tol, double f_tol,
                  int max_iter = 240);

// Doubles `hi` away from `lo` until pred(hi) holds; returns the first hit.
// Throws the exception produced by on_fail() when the cap is exceeded.
double expand_upward(const std::function<bool(double)>& pred, double start,
                     double cap, const std::function<void()>& on_fail);

}  // namespace orthospec
