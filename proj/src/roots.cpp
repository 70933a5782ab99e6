#include "orthospec/roots.hpp"

#include <cmath>

#include "orthospec/errors.hpp"

namespace orthospec {

RootResult bisect(const std::function<double(double)>& f, double lo, double hi,
                  double f_lo, double f_hi, double x_tol, double f_tol,
                  int max_iter) {
    if (!(lo < hi)) throw InvalidArgument("bisect: empty bracket");
    if (f_lo == 0.0) return {lo, 0.0, 0};
    if (f_hi == 0.0) return {hi, 0.0, 0};
    if ((f_lo > 0) == (f_hi > 0))
        throw SolverError("bisect: endpoints do not bracket a sign change");
    RootResult res;
    for (int it = 1; it <= max_iter; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        res = {mid, fm, it};
        if (std::abs(fm) < f_tol) return res;
        if ((fm > 0) == (f_hi > 0)) {
            hi = mid;
            f_hi = fm;
        } else {
            lo = mid;
            f_lo = fm;
        }
        if (hi - lo < x_tol * std::max(1.0, std::abs(mid))) {
            res.x = 0.5 * (lo + hi);
            return res;
        }
    }
    return res;
}

double expand_upward(const std::function<bool(double)>& pred, double start,
                     double cap, const std::function<void()>& on_fail) {
    double x = start;
    while (x <= cap) {
        if (pred(x)) return x;
        x *= 2.0;
    }
    on_fail();
    throw SolverError("expand_upward: unreachable");
}

}  // namespace orthospec
