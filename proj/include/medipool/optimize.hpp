#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace medipool::opt {

/// Golden-section minimization of a unimodal f on [lo, hi].
/// Uses at most ceil(log((hi-lo)/tol)/log(1/0.618)) + 2 evaluations.
template <class F>
double minimize_scalar(F&& f, double lo, double hi, double tol) {
    if (!(lo < hi)) throw std::invalid_argument("minimize_scalar: requires lo < hi");
    if (!(tol > 0.0)) throw std::invalid_argument("minimize_scalar: requires tol > 0");

    constexpr double invphi = 0.61803398874989485;
    double a = lo, b = hi;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

/// Bisection root of f on [lo, hi]; requires a sign change (or an exact zero
/// at an endpoint). Returns the interval midpoint once width <= tol.
template <class F>
double find_root(F&& f, double lo, double hi, double tol) {
    if (!(lo < hi)) throw std::invalid_argument("find_root: requires lo < hi");
    if (!(tol > 0.0)) throw std::invalid_argument("find_root: requires tol > 0");
    double flo = f(lo);
    if (flo == 0.0) return lo;
    double fhi = f(hi);
    if (fhi == 0.0) return hi;
    if ((flo < 0.0) == (fhi < 0.0))
        throw std::invalid_argument("find_root: no sign change on [lo, hi]");
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;  // hit double resolution
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// Coarse grid scan followed by a golden-section refine around the best cell.
/// The scan guards against picking the wrong basin when f is not globally
/// unimodal; deterministic for a fixed grid.
template <class F>
double grid_then_golden(F&& f, double lo, double hi, int grid, double tol) {
    if (!(lo < hi)) throw std::invalid_argument("grid_then_golden: requires lo < hi");
    if (grid < 2) throw std::invalid_argument("grid_then_golden: grid too small");
    int best = 0;
    double fbest = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= grid; ++i) {
        const double x = lo + (hi - lo) * double(i) / double(grid);
        const double fx = f(x);
        if (fx < fbest) {
            fbest = fx;
            best = i;
        }
    }
    const double a = lo + (hi - lo) * double(std::max(0, best - 1)) / double(grid);
    const double b = lo + (hi - lo) * double(std::min(grid, best + 1)) / double(grid);
    return minimize_scalar(f, a, b, tol);
}

} // namespace medipool::opt
