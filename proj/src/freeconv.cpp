#include "orthospec/freeconv.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numbers>

#include "orthospec/errors.hpp"
#include "orthospec/roots.hpp"
#include "orthospec/theory.hpp"
#include "orthospec/transforms.hpp"

namespace orthospec {

namespace {

constexpr double kResidual = 1e-10;
// Derivative evaluations treat tau this close to 0 as the boundary.
constexpr double kLeftEdge = -1e-6;

std::complex<double> cauchy_from_tau(std::complex<double> z,
                                     std::complex<double> tau, double delta) {
    // G(z) = (1/z) (1-1/delta) / (1 - z w_T(1/z)) with w_T(1/z) = 1/tau.
    return (1.0 - 1.0 / delta) * tau / (z * (tau - z));
}

struct NewtonOutcome {
    std::complex<double> tau;
    double residual;
    int iterations;
    bool ok;
};

// Candidate iterates can stray onto the support cut where the resolvent
// quadrature fails; such evaluations count as non-improving steps rather
// than errors.
std::complex<double> residual_or_inf(const Model& m, std::complex<double> tau,
                                     std::complex<double> z) {
    try {
        return lambda_complex(m, tau) - z;
    } catch (const IntegrandError&) {
        return {std::numeric_limits<double>::infinity(), 0.0};
    }
}

NewtonOutcome newton_solve(const Model& m, std::complex<double> z,
                           std::complex<double> tau0) {
    std::complex<double> tau = tau0;
    std::complex<double> f = residual_or_inf(m, tau, z);
    int used = 0;
    if (!std::isfinite(std::abs(f))) return {tau, std::abs(f), 0, false};
    for (int it = 0; it < 200; ++it) {
        if (std::abs(f) < kResidual) return {tau, std::abs(f), used, true};
        std::complex<double> dp;
        try {
            dp = lambda_prime_complex(m, tau);
        } catch (const IntegrandError&) {
            break;
        }
        if (!(std::abs(dp) > 0)) break;
        const std::complex<double> step = f / dp;
        double damp = 1.0;
        std::complex<double> cand, fc;
        bool improved = false;
        for (int k = 0; k < 25; ++k) {
            cand = tau - damp * step;
            fc = residual_or_inf(m, cand, z);
            if (std::abs(fc) < std::abs(f)) {
                improved = true;
                break;
            }
            damp *= 0.5;
        }
        if (!improved) break;
        tau = cand;
        f = fc;
        ++used;
    }
    return {tau, std::abs(f), used, std::abs(f) < kResidual};
}

std::complex<double> asymptotic_seed(const Model& m, std::complex<double> z) {
    // Large-|z| expansion of the inverse of Lambda.
    const double et = m.expect([](double, double t) { return t; });
    return m.delta() * z - (m.delta() - 1.0) * et;
}

SubordinationPoint solve_point(const Model& m, std::complex<double> z,
                               std::complex<double> seed) {
    if (!(z.imag() < 0.0))
        throw InvalidArgument("subordinate: query point must have Im(z) < 0");
    NewtonOutcome out = newton_solve(m, z, seed);
    if (!out.ok || out.tau.imag() > 1e-12) {
        // Continuation from deep in the lower half plane. The height shrinks
        // geometrically; a failed rung retries closer to the last success.
        const double far = std::max(2.0, 2.0 * std::abs(z));
        NewtonOutcome walk =
            newton_solve(m, {z.real(), -far}, asymptotic_seed(m, {z.real(), -far}));
        int total = out.iterations + walk.iterations;
        if (!walk.ok || walk.tau.imag() > 1e-12)
            throw SolverError("subordinate: continuation anchor failed");
        double good_height = -far;
        std::complex<double> good_tau = walk.tau;
        double factor = 0.5;
        int rungs = 0;
        bool reached = false;
        while (++rungs < 200) {
            // heights are negative; the factor shrinks the magnitude
            double next = good_height * factor;
            if (next > z.imag()) next = z.imag();
            const NewtonOutcome step = newton_solve(m, {z.real(), next}, good_tau);
            total += step.iterations;
            if (step.ok && step.tau.imag() <= 1e-12) {
                good_height = next;
                good_tau = step.tau;
                factor = 0.5;
                if (next == z.imag()) {
                    reached = true;
                    walk = step;
                    break;
                }
            } else {
                factor = std::sqrt(factor);  // retreat toward the last rung
                if (factor > 0.97) break;
            }
        }
        if (!reached)
            throw SolverError("subordinate: Newton continuation failed");
        out = walk;
        out.iterations = total;
    }
    return {z, out.tau, cauchy_from_tau(z, out.tau, m.delta()), out.iterations};
}

}  // namespace

BulkSupport bulk_support(const Model& m) {
    const TauRResult right = find_tau_r(m);
    BulkSupport out;
    out.tau_r = right.tau_r;
    out.lambda_r = right.lambda_r;

    // Lambda is concave on (-inf, 0]; its derivative decreases from 1/delta
    // at -inf. A nonnegative derivative at the -1e-6 edge puts the maximum at
    // the tau = 0 boundary.
    if (lambda_prime(m, kLeftEdge) >= 0.0) {
        out.tau_l = 0.0;
        out.lambda_l = lambda_on_reals(m, 0.0);
        return out;
    }
    double lo = -1.0;
    int guard = 0;
    while (lambda_prime(m, lo) <= 0.0) {
        lo *= 2.0;
        if (++guard > 60 || lo < -1e8)
            throw SolverError("bulk_support: no left bracket for Lambda'");
    }
    const RootResult root =
        bisect([&](double tau) { return lambda_prime(m, tau); }, lo, kLeftEdge,
               +1.0, -1.0, 1e-12, 1e-10);
    out.tau_l = root.x;
    out.lambda_l = lambda_on_reals(m, root.x);
    return out;
}

SubordinationPoint subordinate(const Model& m, std::complex<double> z) {
    return solve_point(m, z, asymptotic_seed(m, z));
}

SubordinationPoint subordinate(const Model& m, std::complex<double> z,
                               std::complex<double> tau_seed) {
    return solve_point(m, z, tau_seed);
}

BulkSpectrum bulk_density(const Model& m, std::span<const double> grid) {
    for (double x : grid)
        if (!(x > 0.0))
            throw DomainError("bulk_density: grid points must be positive");

    const BulkSupport sup = bulk_support(m);
    BulkSpectrum out;
    out.lambda_l = sup.lambda_l;
    out.tau_l = sup.tau_l;
    out.lambda_r = sup.lambda_r;
    out.tau_r = sup.tau_r;
    out.grid.assign(grid.begin(), grid.end());
    out.density.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
    out.converged.assign(grid.size(), 0);

    constexpr double eps_top = 1e-2, eps_mid = 1e-3, eps_low = 1e-4;
    std::optional<std::complex<double>> prev_top;
    for (std::size_t i = 0; i < out.grid.size(); ++i) {
        const double x = out.grid[i];
        try {
            // Vertical continuation per point, horizontal warm start across
            // the grid at the top level.
            SubordinationPoint top =
                prev_top ? subordinate(m, {x, -eps_top}, *prev_top)
                         : subordinate(m, {x, -eps_top});
            prev_top = top.tau_T;
            const SubordinationPoint mid = subordinate(m, {x, -eps_mid}, top.tau_T);
            const SubordinationPoint low = subordinate(m, {x, -eps_low}, mid.tau_T);
            const double rho_top = top.cauchy.imag() / std::numbers::pi;
            const double rho_mid = mid.cauchy.imag() / std::numbers::pi;
            const double rho_low = low.cauchy.imag() / std::numbers::pi;
            // Extrapolation through the schedule with the model
            // rho(eps) = rho0 + c1 eps + c3 eps^3: off the support the
            // boundary imaginary part is odd in eps, so the quadratic term
            // vanishes identically and this form clears the off-support
            // 1e-6 bound right up to the edges.
            Eigen::Matrix3d v;
            v << 1.0, eps_top, eps_top * eps_top * eps_top,
                 1.0, eps_mid, eps_mid * eps_mid * eps_mid,
                 1.0, eps_low, eps_low * eps_low * eps_low;
            const Eigen::Vector3d rho0 =
                v.partialPivLu().solve(Eigen::Vector3d(rho_top, rho_mid, rho_low));
            out.density[i] = std::max(0.0, rho0(0));
            out.converged[i] = 1;
        } catch (const SolverError&) {
            prev_top.reset();  // do not poison later warm starts
        }
    }
    return out;
}

std::optional<double> outlier_location(const Model& m, double theta) {
    const BulkSupport sup = bulk_support(m);
    if (theta >= sup.tau_l && theta <= sup.tau_r) return std::nullopt;
    return lambda_on_reals(m, theta);
}

}  // namespace orthospec
