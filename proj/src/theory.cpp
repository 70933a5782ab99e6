#include "orthospec/theory.hpp"

#include <cmath>
#include <limits>

#include "orthospec/errors.hpp"
#include "orthospec/roots.hpp"

namespace orthospec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kBracketCap = 1e8;
constexpr double kResidualTol = 1e-10;
constexpr double kWidthTol = 1e-12;
constexpr double kBoundaryBand = 1e-9;  // |psi1(tau_r) - delta/(delta-1)|

void require_theory_trimmer(const Model& m) {
    if (!m.trimmer().bounded())
        throw UnboundedTrimmer("theory: trimmer '" + m.trimmer().name() +
                               "' is unbounded; only Monte-Carlo applies");
    if (!m.trimmer().unit_range())
        throw InvalidArgument("theory: trimmer '" + m.trimmer().name() +
                              "' must have range within [0,1]; apply "
                              "normalize_trimmer first");
}

double informativeness_threshold(const Model& m) {
    return m.delta() / (m.delta() - 1.0);
}

double expect_st(const Model& m) {
    return m.expect([](double s, double t) { return s * t; });
}

double weighted_resolvent(const Model& m, double lam) {
    return m.expect([lam](double s, double t) { return s / (lam - t); });
}

}  // namespace

const char* to_string(Regime r) {
    switch (r) {
        case Regime::Uninformative: return "uninformative";
        case Regime::Informative: return "informative";
        case Regime::Boundary: return "boundary";
    }
    return "?";
}

TauRResult find_tau_r(const Model& m) {
    require_theory_trimmer(m);
    const double frac = (m.delta() - 1.0) / m.delta();
    const double threshold = informativeness_threshold(m);

    // Right derivative at 1 from psi2(1); divergent second moments push the
    // derivative to -inf and force an interior minimum.
    bool interior = false;
    const BoundaryMoment m1 = inverse_moment_at_one(m, 1);
    if (!m1.finite) {
        interior = true;
    } else {
        const BoundaryMoment m2 = inverse_moment_at_one(m, 2);
        if (!m2.finite) {
            interior = true;
        } else {
            const double psi2_at_1 = m2.value / (m1.value * m1.value);
            interior = frac * (threshold - psi2_at_1) < 0.0;
        }
    }
    if (!interior)
        return {1.0, lambda_on_reals(m, 1.0)};

    const double hi = expand_upward(
        [&](double x) { return lambda_prime(m, 1.0 + x) > 0.0; }, 1.0,
        kBracketCap, [] {
            throw NoMinimum("find_tau_r: no positive derivative up to tau = 1e8");
        });
    const RootResult root =
        bisect([&](double tau) { return lambda_prime(m, tau); }, 1.0, 1.0 + hi,
               -1.0, +1.0, kWidthTol, kResidualTol);
    return {root.x, lambda_on_reals(m, root.x)};
}

std::optional<double> find_theta_star(const Model& m) {
    require_theory_trimmer(m);
    const auto [tau_r, lambda_r] = find_tau_r(m);
    const double threshold = informativeness_threshold(m);
    const TransformValues at_r = eval_transforms(m, tau_r);
    if (!(at_r.psi1 > threshold)) return std::nullopt;

    auto gap = [&](double theta) {
        return eval_transforms(m, theta).psi1 - threshold;
    };
    // psi1(inf) = 1 < threshold guarantees the bracket closes.
    const double step = expand_upward(
        [&](double w) { return gap(tau_r + w) < 0.0; }, 1.0, kBracketCap, [] {
            throw SolverError("find_theta_star: psi1 stayed above "
                              "delta/(delta-1) up to tau_r + 1e8");
        });
    const RootResult root = bisect(gap, tau_r, tau_r + step, +1.0,
                                   gap(tau_r + step), kWidthTol, kResidualTol);
    return root.x;
}

double vartheta_critical(const Model& m) {
    const BoundaryMoment ws = weighted_inverse_moment_at_one(m);
    const double reciprocal =
        (ws.finite && std::isfinite(ws.value)) ? 1.0 / ws.value : 0.0;
    const double denom = 1.0 - reciprocal - expect_st(m);
    return denom > 0.0 ? 1.0 / denom : kInf;
}

double theta_of_vartheta(const Model& m, double vartheta) {
    if (!(vartheta > 0.0))
        throw InvalidArgument("theta_of_vartheta: vartheta must be positive");
    const double vc = vartheta_critical(m);
    if (vartheta <= vc) return 1.0;

    const double a = expect_st(m);
    auto g = [&](double lam) {
        return lam - a - 1.0 / vartheta - 1.0 / weighted_resolvent(m, lam);
    };
    // g(1+) = 1/vartheta_c - 1/vartheta > 0 by the critical-value identity;
    // the closed form avoids a boundary quadrature.
    const double g_at_one = 1.0 / vc - 1.0 / vartheta;
    const double step = expand_upward(
        [&](double w) { return g(1.0 + w) < 0.0; }, 1.0, kBracketCap, [] {
            throw SolverError("theta_of_vartheta: no sign change up to 1e8");
        });
    const RootResult root =
        bisect(g, 1.0, 1.0 + step, g_at_one, g(1.0 + step), 1e-13, 1e-12);
    return root.x;
}

namespace {

double lambda_plus(const Model& m, double tau, double tau_r, double lambda_r) {
    return tau <= tau_r ? lambda_r : lambda_on_reals(m, tau);
}

struct RegimeCall {
    Regime regime;
    double psi1_gap;  // psi1(tau_r) - delta/(delta-1)
};

RegimeCall classify_regime(const Model& m, double tau_r) {
    const double gap =
        eval_transforms(m, tau_r).psi1 - informativeness_threshold(m);
    if (std::abs(gap) < kBoundaryBand) return {Regime::Boundary, gap};
    return {gap > 0 ? Regime::Informative : Regime::Uninformative, gap};
}

}  // namespace

TheoryPrediction predict(const Model& m) {
    require_theory_trimmer(m);
    const auto [tau_r, lambda_r] = find_tau_r(m);
    const double threshold = informativeness_threshold(m);
    const RegimeCall call = classify_regime(m, tau_r);

    TheoryPrediction out;
    out.regime = call.regime;
    out.tau_r = tau_r;
    out.lambda_r = lambda_r;
    out.vartheta_c = vartheta_critical(m);

    auto rho2_at = [&](double theta) {
        const TransformValues tv = eval_transforms(m, theta);
        if (!tv.psi2 || !tv.psi3sq)
            throw SolverError("predict: psi2/psi3 undefined at theta");
        const double denom = *tv.psi3sq - threshold * *tv.psi2;
        if (!(denom > 0.0))
            throw SolverError("predict: nonpositive overlap denominator");
        const double rho2 = (threshold * threshold - threshold * *tv.psi2) / denom;
        if (rho2 < -1e-9 || rho2 > 1.0 + 1e-9)
            throw SolverError("predict: overlap outside [0,1]");
        return std::min(1.0, std::max(0.0, rho2));
    };

    if (call.regime == Regime::Informative) {
        const std::optional<double> theta = find_theta_star(m);
        if (!theta) throw SolverError("predict: informative regime without theta_star");
        out.theta_star = theta;
        out.lambda1_limit = lambda_on_reals(m, *theta);
        out.rho2_limit = rho2_at(*theta);
        const double denom =
            *theta - expect_st(m) - 1.0 / weighted_resolvent(m, *theta);
        if (denom > 0.0) out.vartheta_star = 1.0 / denom;
    } else if (call.regime == Regime::Uninformative) {
        out.lambda1_limit = lambda_r;
        out.rho2_limit = 0.0;
        const double denom = lambda_r - expect_st(m);
        if (denom > 0.0) out.vartheta_star = 1.0 / denom;
    } else {
        // Exact-boundary overlap is not asserted by the asymptotic result;
        // report the informative-branch continuous extension, flagged.
        out.lambda1_limit = lambda_r;
        const TransformValues tv = eval_transforms(m, tau_r);
        out.rho2_limit = (tv.psi2 && tv.psi3sq) ? rho2_at(tau_r) : 0.0;
        const double denom = lambda_r - expect_st(m);
        if (denom > 0.0) out.vartheta_star = 1.0 / denom;
    }
    return out;
}

VarthetaStarResult solve_vartheta_star(const Model& m) {
    require_theory_trimmer(m);
    const auto [tau_r, lambda_r] = find_tau_r(m);
    const double a = expect_st(m);
    const double threshold = informativeness_threshold(m);

    // Left side nondecreasing in vartheta, right side strictly decreasing.
    auto h = [&](double v) {
        return lambda_plus(m, theta_of_vartheta(m, v), tau_r, lambda_r) - 1.0 / v - a;
    };
    double lo = 1.0, hi = 1.0;
    int guard = 0;
    while (h(lo) > 0.0) {
        lo /= 2.0;
        if (++guard > 120)
            throw SolverError("solve_vartheta_star: no lower bracket");
    }
    guard = 0;
    while (h(hi) < 0.0) {
        hi *= 2.0;
        if (++guard > 120)
            throw SolverError("solve_vartheta_star: no upper bracket");
    }
    const RootResult root = bisect(h, lo, hi, h(lo) <= 0 ? -1.0 : 1.0, +1.0,
                                   1e-13, 1e-11, 300);
    const double v_star = root.x;
    const double theta_v = theta_of_vartheta(m, v_star);
    const double check = lambda_plus(m, theta_v, tau_r, lambda_r);

    VarthetaStarResult out{v_star, check, 0.0, 1};
    const RegimeCall call = classify_regime(m, tau_r);
    if (call.regime == Regime::Informative) {
        const TransformValues tv = eval_transforms(m, theta_v);
        if (!tv.psi2 || !tv.psi3sq)
            throw SolverError("solve_vartheta_star: psi2/psi3 undefined");
        out.derivative = (1.0 / (v_star * v_star)) * threshold *
                         (threshold - *tv.psi2) /
                         (*tv.psi3sq - threshold * threshold);
        out.lemma_case = 2;
    } else if (call.regime == Regime::Boundary) {
        out.lemma_case = 0;
    }
    return out;
}

DeltaTransition find_delta_transition(
    const std::function<TrimmingFunction(double)>& family, double delta_lo,
    double delta_hi, const QuadratureSettings& quad) {
    if (!(delta_lo > 1.0) || !(delta_hi > delta_lo))
        throw InvalidArgument("find_delta_transition: need 1 < delta_lo < delta_hi");

    auto criterion = [&](double delta) {
        TrimmingFunction t = family(delta);
        if (t.bounded() && !t.unit_range()) t = normalize_trimmer(t);
        const Model m(std::move(t), delta, quad);
        const auto [tau_r, lambda_r] = find_tau_r(m);
        return eval_transforms(m, tau_r).psi1 - delta / (delta - 1.0);
    };
    const double f_lo = criterion(delta_lo);
    const double f_hi = criterion(delta_hi);
    if (f_lo == 0.0 || f_hi == 0.0 || (f_lo > 0) == (f_hi > 0))
        throw NoTransition("find_delta_transition: criterion has the same sign "
                           "at both endpoints");
    double lo = delta_lo, hi = delta_hi;
    int iters = 0;
    double fl = f_lo;
    while (hi - lo > 1e-4) {
        const double mid = 0.5 * (lo + hi);
        const double fm = criterion(mid);
        ++iters;
        if (fm == 0.0) {
            lo = hi = mid;
            break;
        }
        if ((fm > 0) == (fl > 0)) {
            lo = mid;
            fl = fm;
        } else {
            hi = mid;
        }
    }
    return {0.5 * (lo + hi), lo, hi, iters};
}

RhoOptDetail rho_opt_detail(double delta, const QuadratureSettings& quad) {
    if (!(delta > 1.0)) throw InvalidArgument("rho_opt: delta must exceed 1");
    if (delta <= 2.0) return {0.0, std::nullopt};
    quad.validate();
    const double threshold = delta / (delta - 1.0);

    // tau - T_opt = tau - 1 + 1/S, so the defining ratios reduce to smooth
    // rational integrands in s.
    auto psi1_opt = [&](double tau) {
        const double b = tau - 1.0;
        const double num = integrate_exponential(
            [b](double s) { return s * s / (b * s + 1.0); }, quad);
        const double den = integrate_exponential(
            [b](double s) { return s / (b * s + 1.0); }, quad);
        return num / den;
    };
    // psi1_opt(1) = E[S^2]/E[S] = 2 > threshold for delta > 2; decreasing to 1.
    const double step = expand_upward(
        [&](double w) { return psi1_opt(1.0 + w) < threshold; }, 1.0, kBracketCap,
        [] { throw SolverError("rho_opt: bracket expansion failed"); });
    const RootResult root =
        bisect([&](double tau) { return psi1_opt(tau) - threshold; }, 1.0,
               1.0 + step, +1.0, -1.0, 1e-13, 1e-12, 300);
    const double theta = root.x;
    return {(theta - 1.0) / (theta - 1.0 / delta), theta};
}

double rho_opt(double delta, const QuadratureSettings& quad) {
    return rho_opt_detail(delta, quad).rho2;
}

}  // namespace orthospec
