#include "orthospec/transforms.hpp"

#include <cmath>
#include <limits>

#include "orthospec/errors.hpp"

namespace orthospec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kBoundaryBand = 1e-13;

// Divergence classifier for boundary moments: probes the shifted expectation
// at h = 1e-3, 1e-4, 1e-5. Finite limits show geometrically decaying
// increments; logarithmic and polynomial divergences do not.
BoundaryMoment classify_shifted(const std::function<double(double)>& at_shift) {
    const double f3 = at_shift(1e-3);
    const double f4 = at_shift(1e-4);
    const double f5 = at_shift(1e-5);
    if (!std::isfinite(f3) || !std::isfinite(f4) || !std::isfinite(f5))
        return {false, kInf};
    if (std::abs(f5) > 1e10) return {false, kInf};
    const double d1 = f4 - f3, d2 = f5 - f4;
    const bool settled = std::abs(d2) <= 1e-6 * std::max(1.0, std::abs(f5));
    if (settled || std::abs(d2) <= 0.5 * std::abs(d1)) {
        const double direct = at_shift(0.0);
        if (!std::isfinite(direct)) return {false, kInf};
        return {true, direct};
    }
    return {false, kInf};
}

}  // namespace

BoundaryMoment inverse_moment_at_one(const Model& m, int k) {
    if (k != 1 && k != 2)
        throw InvalidArgument("inverse_moment_at_one: k must be 1 or 2");
    return classify_shifted([&](double h) {
        return m.expect([h, k](double, double t) {
            const double d = 1.0 + h - t;
            return k == 1 ? 1.0 / d : 1.0 / (d * d);
        });
    });
}

BoundaryMoment weighted_inverse_moment_at_one(const Model& m) {
    return classify_shifted([&](double h) {
        return m.expect([h](double s, double t) { return s / (1.0 + h - t); });
    });
}

BoundaryMoment inverse_moment_of_t(const Model& m) {
    return classify_shifted([&](double h) {
        return m.expect([h](double, double t) { return 1.0 / (t + h); });
    });
}

TransformValues eval_transforms(const Model& m, double tau) {
    if (tau < 1.0 - 1e-12)
        throw DomainError("eval_transforms: tau must be >= 1");
    const double frac = 1.0 - 1.0 / m.delta();
    TransformValues out;
    out.tau = tau;

    if (tau <= 1.0 + kBoundaryBand) {
        const BoundaryMoment m1 = inverse_moment_at_one(m, 1);
        if (!m1.finite) {
            // E[(1-T)^{-1}] = inf: Lambda(1) = 1, psi1(1) = 1.
            out.lambda_of_tau = 1.0;
            out.psi1 = 1.0;
            return out;
        }
        const double g = m1.value;
        out.lambda_of_tau = 1.0 - frac / g;
        const double sg = m.expect([](double s, double t) { return s / (1.0 - t); });
        out.psi1 = sg / g;
        const BoundaryMoment m2 = inverse_moment_at_one(m, 2);
        if (m2.finite) {
            const double sg2 =
                m.expect([](double s, double t) { return s / ((1.0 - t) * (1.0 - t)); });
            if (std::isfinite(sg2)) {
                out.psi2 = m2.value / (g * g);
                out.psi3sq = sg2 / (g * g);
            }
        }
        return out;
    }

    const double g = m.expect([tau](double, double t) { return 1.0 / (tau - t); });
    const double g2 =
        m.expect([tau](double, double t) { return 1.0 / ((tau - t) * (tau - t)); });
    const double sg = m.expect([tau](double s, double t) { return s / (tau - t); });
    const double sg2 =
        m.expect([tau](double s, double t) { return s / ((tau - t) * (tau - t)); });
    out.lambda_of_tau = tau - frac / g;
    out.psi1 = sg / g;
    out.psi2 = g2 / (g * g);
    out.psi3sq = sg2 / (g * g);
    return out;
}

double lambda_on_reals(const Model& m, double tau) {
    const double frac = 1.0 - 1.0 / m.delta();
    if (tau >= 1.0 - kBoundaryBand) {
        if (tau <= 1.0 + kBoundaryBand) {
            const BoundaryMoment m1 = inverse_moment_at_one(m, 1);
            return m1.finite ? 1.0 - frac / m1.value : 1.0;
        }
        const double g = m.expect([tau](double, double t) { return 1.0 / (tau - t); });
        return std::isinf(g) ? tau : tau - frac / g;
    }
    if (tau <= kBoundaryBand) {
        if (tau >= -kBoundaryBand) {
            const BoundaryMoment mt = inverse_moment_of_t(m);
            return mt.finite ? frac / mt.value : 0.0;
        }
        const double g = m.expect([tau](double, double t) { return 1.0 / (tau - t); });
        return tau - frac / g;
    }
    throw DomainError("lambda_on_reals: tau inside (0, 1)");
}

double lambda_prime(const Model& m, double tau) {
    if (tau <= 1.0 + kBoundaryBand && tau >= -kBoundaryBand)
        throw DomainError("lambda_prime: tau must satisfy tau > 1 or tau < 0");
    const double g = m.expect([tau](double, double t) { return 1.0 / (tau - t); });
    const double g2 =
        m.expect([tau](double, double t) { return 1.0 / ((tau - t) * (tau - t)); });
    if (std::isinf(g2) || std::isinf(g)) return -kInf;  // boundary blow-up
    return 1.0 - (1.0 - 1.0 / m.delta()) * g2 / (g * g);
}

std::complex<double> lambda_complex(const Model& m, std::complex<double> tau) {
    const std::complex<double> g = m.expect_complex(
        [tau](double, double t) { return 1.0 / (tau - t); });
    return tau - (1.0 - 1.0 / m.delta()) / g;
}

std::complex<double> lambda_prime_complex(const Model& m,
                                          std::complex<double> tau) {
    const std::complex<double> g = m.expect_complex(
        [tau](double, double t) { return 1.0 / (tau - t); });
    const std::complex<double> g2 = m.expect_complex(
        [tau](double, double t) { return 1.0 / ((tau - t) * (tau - t)); });
    return 1.0 - (1.0 - 1.0 / m.delta()) * g2 / (g * g);
}

}  // namespace orthospec
