#include <cmath>
#include <random>

#include "doctest.h"
#include "orthospec/errors.hpp"
#include "orthospec/theory.hpp"
#include "support/oracles.hpp"

using namespace orthospec;

namespace {

Model model_of(const char* id, double delta, double eps = 0.1) {
    TrimmingFunction t = make_trimmer(id, delta, eps);
    if (t.bounded() && !t.unit_range()) t = normalize_trimmer(t);
    return Model(std::move(t), delta);
}

Model const_model(double c, double delta) {
    return Model(make_trimmer("const", delta, c), delta);
}

}  // namespace

TEST_CASE("transforms for a degenerate constant trimmer") {
    const double c = 0.4, delta = 3.0;
    const Model m = const_model(c, delta);
    for (double tau : {1.2, 2.0, 7.5}) {
        const TransformValues tv = eval_transforms(m, tau);
        CHECK(tv.psi1 == doctest::Approx(1.0).epsilon(1e-11));
        CHECK(*tv.psi2 == doctest::Approx(1.0).epsilon(1e-11));
        CHECK(*tv.psi3sq == doctest::Approx(1.0).epsilon(1e-11));
        const double lam = tau - (1.0 - 1.0 / delta) * (tau - c);
        CHECK(tv.lambda_of_tau == doctest::Approx(lam).epsilon(1e-11));
    }
    CHECK_THROWS_AS(eval_transforms(m, 0.5), DomainError);
}

TEST_CASE("psi1 tends to 1 at large tau") {
    const Model m = model_of("mm", 3.0);
    CHECK(std::abs(eval_transforms(m, 1e6).psi1 - 1.0) < 1e-4);
    // asymptotics checked at 1e4: Lambda grows like tau/delta
    CHECK(std::abs(eval_transforms(m, 1e4).psi1 - 1.0) < 1e-3);
    CHECK(std::abs(lambda_on_reals(m, 1e4) / 1e4 - 1.0 / 3.0) < 1e-3);
}

TEST_CASE("transform values match an independent Monte-Carlo estimate") {
    // normalized opt-eps at delta = 4, tau = 2; 1e7 samples through another
    // generator entirely (std::mt19937_64)
    const double delta = 4.0, eps = 0.1, tau = 2.0;
    const Model m = model_of("opt-eps", delta, eps);
    std::mt19937_64 gen(12345);
    std::exponential_distribution<double> exp_dist(1.0);
    const std::size_t n = 10'000'000;
    double g = 0, g2 = 0, sg = 0, sg2 = 0;
    double vg = 0, vg2 = 0, vsg = 0, vsg2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double s = exp_dist(gen);
        const double t = s / (s + eps);  // normalized opt-eps in s form
        const double r = 1.0 / (tau - t);
        g += r;
        g2 += r * r;
        sg += s * r;
        sg2 += s * r * r;
        vg += r * r;
        vg2 += r * r * r * r;
        vsg += s * s * r * r;
        vsg2 += s * s * r * r * r * r;
    }
    const double dn = static_cast<double>(n);
    g /= dn; g2 /= dn; sg /= dn; sg2 /= dn;
    auto se = [dn](double sumsq, double mean) {
        return std::sqrt((sumsq / dn - mean * mean) / dn);
    };
    const double se_g = se(vg, g), se_g2 = se(vg2, g2);
    const double se_sg = se(vsg, sg), se_sg2 = se(vsg2, sg2);

    const TransformValues tv = eval_transforms(m, tau);
    const double lam_mc = tau - (1.0 - 1.0 / delta) / g;
    const double lam_se = (1.0 - 1.0 / delta) / (g * g) * se_g;
    CHECK(std::abs(tv.lambda_of_tau - lam_mc) < 3.0 * lam_se + 1e-9);

    const double psi1_mc = sg / g;
    const double psi1_se = psi1_mc * std::sqrt(std::pow(se_sg / sg, 2) + std::pow(se_g / g, 2));
    CHECK(std::abs(tv.psi1 - psi1_mc) < 3.0 * psi1_se + 1e-9);

    const double psi2_mc = g2 / (g * g);
    const double psi2_se = psi2_mc * std::sqrt(std::pow(se_g2 / g2, 2) + 4.0 * std::pow(se_g / g, 2));
    CHECK(std::abs(*tv.psi2 - psi2_mc) < 3.0 * psi2_se + 1e-9);

    const double psi3_mc = sg2 / (g * g);
    const double psi3_se = psi3_mc * std::sqrt(std::pow(se_sg2 / sg2, 2) + 4.0 * std::pow(se_g / g, 2));
    CHECK(std::abs(*tv.psi3sq - psi3_mc) < 3.0 * psi3_se + 1e-9);
}

TEST_CASE("tau = 1 boundary conventions") {
    SUBCASE("plateau trimmer: E[(1-T)^{-1}] literally infinite") {
        // piecewise-linear ramp that sits at 1 beyond y = 0.5
        const TrimmingFunction ramp(
            "ramp", {}, [](double y) { return std::min(1.0, 2.0 * y); },
            Interval{0.0, 1.0}, true, true);
        const Model m(ramp, 3.0);
        const TransformValues tv = eval_transforms(m, 1.0);
        CHECK(tv.lambda_of_tau == doctest::Approx(1.0));
        CHECK(tv.psi1 == doctest::Approx(1.0));
        CHECK_FALSE(tv.psi2.has_value());
        CHECK_FALSE(tv.psi3sq.has_value());
    }
    SUBCASE("peak trimmer: logarithmic divergence") {
        // hits 1 only at y = 1, linear on both sides: E[(1-T)^{-1}] diverges
        // logarithmically, the classifier must still call it infinite
        const TrimmingFunction peak(
            "peak", {}, [](double y) { return std::max(0.0, 1.0 - std::abs(y - 1.0)); },
            Interval{0.0, 1.0}, true, true);
        const Model m(peak, 3.0);
        const TransformValues tv = eval_transforms(m, 1.0);
        CHECK(tv.lambda_of_tau == doctest::Approx(1.0));
        CHECK(tv.psi1 == doctest::Approx(1.0));
        CHECK_FALSE(tv.psi2.has_value());
    }
    SUBCASE("mm trimmer: all moments finite at tau = 1") {
        const double delta = 3.0, c = std::sqrt(delta) - 1.0;
        const Model m = model_of("mm", delta);
        const TransformValues tv = eval_transforms(m, 1.0);
        // 1/(1-T) = (s+c)/c reduces everything to polynomial moments
        const double e1 = (1.0 + c) / c;
        CHECK(tv.lambda_of_tau == doctest::Approx(1.0 - (1.0 - 1.0 / delta) / e1).epsilon(1e-10));
        CHECK(tv.psi1 == doctest::Approx((2.0 + c) / (1.0 + c)).epsilon(1e-10));
        CHECK(*tv.psi2 == doctest::Approx((2.0 + 2.0 * c + c * c) / ((1.0 + c) * (1.0 + c))).epsilon(1e-10));
    }
}

TEST_CASE("find_tau_r") {
    SUBCASE("opt-eps with small eps below delta = 2 stays at 1") {
        const Model m = model_of("opt-eps", 1.8, 1e-3);
        CHECK(find_tau_r(m).tau_r == doctest::Approx(1.0));
    }
    SUBCASE("degenerate constant trimmer") {
        const double c = 0.3, delta = 2.5;
        const Model m = const_model(c, delta);
        const auto [tau_r, lambda_r] = find_tau_r(m);
        CHECK(tau_r == doctest::Approx(1.0));
        CHECK(lambda_r == doctest::Approx(1.0 - (1.0 - 1.0 / delta) * (1.0 - c)).epsilon(1e-11));
    }
    SUBCASE("interior minimum matches a dense grid scan (lal, delta = 4)") {
        const Model m = model_of("lal", 4.0);
        const auto [tau_r, lambda_r] = find_tau_r(m);
        const auto scan = oracles::grid_minimum(
            [&](double tau) { return lambda_on_reals(m, tau); }, 1.0001, 3.0, 1e-4);
        CHECK(std::abs(tau_r - scan.arg) < 1e-3);
        CHECK(std::abs(lambda_r - scan.value) < 1e-6);
        CHECK(tau_r > 1.0);
    }
    SUBCASE("mm at delta = 3 sits at the boundary tau_r = 1") {
        const Model m = model_of("mm", 3.0);
        const auto scan = oracles::grid_minimum(
            [&](double tau) { return lambda_on_reals(m, tau); }, 1.0, 3.0, 1e-4);
        const auto [tau_r, lambda_r] = find_tau_r(m);
        CHECK(tau_r == doctest::Approx(1.0));
        CHECK(std::abs(tau_r - scan.arg) < 1e-3);
    }
}

TEST_CASE("find_theta_star") {
    SUBCASE("degenerate trimmer has none") {
        CHECK_FALSE(find_theta_star(const_model(0.4, 3.0)).has_value());
    }
    SUBCASE("mm at delta = 5: residual self-check and grid bracketing") {
        const Model m = model_of("mm", 5.0);
        const auto theta = find_theta_star(m);
        REQUIRE(theta.has_value());
        CHECK(std::abs(eval_transforms(m, *theta).psi1 - 1.25) < 1e-9);
        // independent coarse bracketing of the root of psi1 - 5/4
        double lo = 1.0, hi = 0.0;
        double prev = eval_transforms(m, 1.0).psi1 - 1.25;
        for (double tau = 1.05; tau <= 4.0; tau += 0.05) {
            const double cur = eval_transforms(m, tau).psi1 - 1.25;
            if (prev > 0 && cur <= 0) {
                lo = tau - 0.05;
                hi = tau;
                break;
            }
            prev = cur;
        }
        REQUIRE(hi > 0.0);
        CHECK(*theta >= lo);
        CHECK(*theta <= hi);
    }
    SUBCASE("normalized opt-eps theta maps back to the raw-scale optimum") {
        // raw-scale theta = 1 + (theta_normalized - 1)/eps approaches the
        // T_opt solution as eps decreases
        const double delta = 3.0;
        const double theta_opt = rho_opt_detail(delta).theta_star.value();
        double prev_gap = 1e9;
        for (double eps : {1e-2, 1e-3, 1e-4}) {
            const Model m = model_of("opt-eps", delta, eps);
            const auto theta = find_theta_star(m);
            REQUIRE(theta.has_value());
            const double raw = 1.0 + (*theta - 1.0) / eps;
            const double gap = std::abs(raw - theta_opt);
            CHECK(gap < prev_gap);
            prev_gap = gap;
        }
        CHECK(prev_gap < 1e-3);
    }
}

TEST_CASE("predict") {
    SUBCASE("degenerate trimmer is uninformative") {
        const TheoryPrediction p = predict(const_model(0.4, 3.0));
        CHECK(p.regime == Regime::Uninformative);
        CHECK(p.rho2_limit == 0.0);
        CHECK_FALSE(p.theta_star.has_value());
    }
    SUBCASE("opt-eps(0.01) at delta = 3 approaches the optimal overlap") {
        const TheoryPrediction p = predict(model_of("opt-eps", 3.0, 0.01));
        const double target = rho_opt(3.0);
        CHECK(p.regime == Regime::Informative);
        CHECK(std::abs(p.rho2_limit - target) < 1e-2);
        // frozen oracle value for the optimal overlap at delta = 3
        CHECK(target == doctest::Approx(0.5700961589515214).epsilon(1e-9));
    }
    SUBCASE("overlap bounds and denominator positivity") {
        for (double delta : {2.5, 3.0, 4.0}) {
            for (const char* id : {"mm", "lal"}) {
                const TheoryPrediction p = predict(model_of(id, delta));
                CHECK(p.rho2_limit >= 0.0);
                CHECK(p.rho2_limit <= 1.0);
                if (p.theta_star) {
                    const TransformValues tv = eval_transforms(model_of(id, delta), *p.theta_star);
                    const double threshold = delta / (delta - 1.0);
                    CHECK(*tv.psi3sq > threshold * *tv.psi2);
                }
            }
        }
    }
    SUBCASE("impossibility: no trimmer beats the optimal overlap") {
        for (double delta : {2.5, 3.0, 4.0}) {
            const double best = rho_opt(delta);
            for (const char* id : {"mm", "lal", "opt-eps"}) {
                const TheoryPrediction p = predict(model_of(id, delta, 0.05));
                CHECK(p.rho2_limit <= best + 1e-9);
            }
        }
    }
}

TEST_CASE("Lambda: convexity, derivative identity, growth") {
    const Model m = model_of("mm", 3.0);
    SUBCASE("convexity on [1, inf)") {
        std::mt19937_64 gen(7);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int rep = 0; rep < 40; ++rep) {
            const double a = 1.0 + 6.0 * u(gen);
            const double b = a + 6.0 * u(gen) + 1e-3;
            const double w = u(gen);
            const double mid = w * a + (1.0 - w) * b;
            const double lhs = lambda_on_reals(m, mid);
            const double rhs = w * lambda_on_reals(m, a) + (1.0 - w) * lambda_on_reals(m, b);
            CHECK(lhs <= rhs + 1e-9);
        }
    }
    SUBCASE("derivative formula vs central differences") {
        for (double tau : {1.5, 2.0, 5.0}) {
            const double analytic = lambda_prime(m, tau);
            const double fd = oracles::central_difference(
                [&](double t) { return lambda_on_reals(m, t); }, tau, 1e-6);
            CHECK(std::abs(analytic - fd) < 1e-6 * std::max(1.0, std::abs(analytic)));
        }
    }
}

TEST_CASE("theta_of_vartheta") {
    const Model m = model_of("mm", 3.0);
    const double vc = vartheta_critical(m);
    REQUIRE(std::isfinite(vc));
    SUBCASE("below critical returns 1") {
        CHECK(theta_of_vartheta(m, vc / 2.0) == 1.0);
        CHECK(theta_of_vartheta(m, vc * 0.999) == 1.0);
    }
    SUBCASE("monotone in vartheta and unbounded") {
        double prev = 0.0;
        for (double v : {vc * 1.01, vc * 1.5, vc * 4.0, vc * 40.0, 1e6}) {
            const double th = theta_of_vartheta(m, v);
            CHECK(th >= prev - 1e-12);
            prev = th;
        }
        CHECK(theta_of_vartheta(m, 1e6) > 1e3);
    }
    SUBCASE("round trip through the closed-form inverse") {
        const double lam0 = 2.0;
        const double a = m.expect([](double s, double t) { return s * t; });
        const double sg = m.expect([lam0](double s, double t) { return s / (lam0 - t); });
        const double v = 1.0 / (lam0 - a - 1.0 / sg);
        REQUIRE(v > 0.0);
        CHECK(std::abs(theta_of_vartheta(m, v) - lam0) < 1e-8);
    }
    SUBCASE("rejects nonpositive vartheta") {
        CHECK_THROWS_AS(theta_of_vartheta(m, 0.0), InvalidArgument);
        CHECK_THROWS_AS(theta_of_vartheta(m, -1.0), InvalidArgument);
    }
    SUBCASE("degenerate trimmer: critical value is infinite, theta stays 1") {
        const Model cm = const_model(0.4, 3.0);
        // the defining denominator vanishes identically; numerically this
        // shows up as an astronomically large (or infinite) critical value
        CHECK(vartheta_critical(cm) > 1e12);
        CHECK(theta_of_vartheta(cm, 1e9) == 1.0);
    }
}

TEST_CASE("solve_vartheta_star") {
    SUBCASE("case 1: flat intersection reproduces the bulk edge") {
        const Model m = model_of("mm", 1.5);
        const VarthetaStarResult r = solve_vartheta_star(m);
        const auto [tau_r, lambda_r] = find_tau_r(m);
        CHECK(r.lemma_case == 1);
        CHECK(r.derivative == 0.0);
        CHECK(std::abs(r.lambda1_check - lambda_r) < 1e-9);
    }
    SUBCASE("case 2: rising intersection reproduces Lambda(theta_star)") {
        const Model m = model_of("mm", 4.0);
        const VarthetaStarResult r = solve_vartheta_star(m);
        const auto theta = find_theta_star(m);
        REQUIRE(theta.has_value());
        CHECK(r.lemma_case == 2);
        CHECK(std::abs(r.lambda1_check - lambda_on_reals(m, *theta)) < 1e-8);
    }
    SUBCASE("case 2 derivative vs a finite difference of the composite map") {
        const Model m = model_of("mm", 4.0);
        const VarthetaStarResult r = solve_vartheta_star(m);
        const auto [tau_r, lambda_r] = find_tau_r(m);
        auto composite = [&](double v) {
            const double th = theta_of_vartheta(m, v);
            return th <= tau_r ? lambda_r : lambda_on_reals(m, th);
        };
        const double fd = oracles::central_difference(composite, r.vartheta_star,
                                                      1e-5 * r.vartheta_star);
        CHECK(std::abs(r.derivative - fd) < 1e-4 * std::max(1e-12, std::abs(fd)));
    }
    SUBCASE("dual path at the informative mm point") {
        const Model m = model_of("mm", 3.0);
        CHECK(std::abs(solve_vartheta_star(m).lambda1_check -
                       predict(m).lambda1_limit) < 1e-8);
    }
}

TEST_CASE("find_delta_transition") {
    SUBCASE("opt-eps(1e-3) transition sits just above 2") {
        const auto tr = find_delta_transition(
            [](double d) { return make_trimmer("opt-eps", d, 1e-3); }, 1.5, 4.0);
        CHECK(tr.delta_T > 1.95);
        CHECK(tr.delta_T < 2.05);
        CHECK(tr.hi - tr.lo <= 1e-4);
    }
    SUBCASE("constant trimmer never transitions") {
        CHECK_THROWS_AS(find_delta_transition(
                            [](double d) { return make_trimmer("const", d, 0.4); },
                            1.5, 4.0),
                        NoTransition);
    }
    SUBCASE("mm transition against a dense regime scan") {
        const auto tr = find_delta_transition(
            [](double d) { return make_trimmer("mm", d); }, 2.0, 3.5);
        // closed form for the mm family: the criterion at tau_r = 1 flips at
        // the root of delta - sqrt(delta) - 1 = 0
        const double golden = 0.5 * (3.0 + std::sqrt(5.0));
        CHECK(std::abs(tr.delta_T - golden) < 1e-3);
        double flip = 0.0;
        for (double d = 2.55; d <= 2.70; d += 1e-3) {
            if (predict(model_of("mm", d)).regime == Regime::Informative) {
                flip = d;
                break;
            }
        }
        REQUIRE(flip > 0.0);
        CHECK(std::abs(tr.delta_T - flip) < 2e-3);
    }
}

TEST_CASE("rho_opt") {
    CHECK(rho_opt(2.0) == 0.0);
    CHECK(rho_opt(1.5) == 0.0);
    SUBCASE("monotone increasing in delta") {
        double prev = 0.0;
        for (double d = 2.1; d <= 50.0; d += 1.5) {
            const double r = rho_opt(d);
            CHECK(r > prev);
            prev = r;
        }
    }
    SUBCASE("dual formula at delta = 4") {
        const RhoOptDetail det = rho_opt_detail(4.0);
        REQUIRE(det.theta_star.has_value());
        const double th = *det.theta_star;
        const double b = th - 1.0;
        QuadratureSettings q;
        const double den = integrate_exponential(
            [b](double s) { return s / (b * s + 1.0); }, q);
        const double g2 = integrate_exponential(
            [b](double s) { return s * s / ((b * s + 1.0) * (b * s + 1.0)); }, q);
        const double sg2 = integrate_exponential(
            [b](double s) { return s * s * s / ((b * s + 1.0) * (b * s + 1.0)); }, q);
        const double threshold = 4.0 / 3.0;
        const double psi2 = g2 / (den * den), psi3sq = sg2 / (den * den);
        const double formula =
            (threshold * threshold - threshold * psi2) / (psi3sq - threshold * psi2);
        CHECK(std::abs(det.rho2 - formula) < 1e-8);
        // frozen oracle values
        CHECK(det.rho2 == doctest::Approx(0.7554875997511356).epsilon(1e-9));
        CHECK(th == doctest::Approx(3.3173290975699024).epsilon(1e-9));
    }
}

TEST_CASE("transform value invariants for nondegenerate trimmers") {
    for (const char* id : {"mm", "lal"}) {
        const Model m = model_of(id, 3.0);
        for (double tau : {1.2, 2.0, 10.0}) {
            const TransformValues tv = eval_transforms(m, tau);
            REQUIRE(tv.psi2.has_value());
            REQUIRE(tv.psi3sq.has_value());
            CHECK(*tv.psi2 > 1.0);  // Jensen strictness
            CHECK(*tv.psi3sq > 0.0);
        }
    }
}

TEST_CASE("regime flag matches the informativeness criterion") {
    for (double delta : {1.5, 2.5, 3.0, 4.0}) {
        const Model m = model_of("mm", delta);
        const TheoryPrediction p = predict(m);
        const double gap =
            eval_transforms(m, p.tau_r).psi1 - delta / (delta - 1.0);
        if (p.regime == Regime::Informative) {
            CHECK(gap > 0.0);
            CHECK(p.theta_star.has_value());
            CHECK(p.rho2_limit > 0.0);
            CHECK(p.lambda1_limit ==
                  doctest::Approx(lambda_on_reals(m, *p.theta_star)).epsilon(1e-10));
        } else if (p.regime == Regime::Uninformative) {
            CHECK(gap < 0.0);
            CHECK(p.rho2_limit == 0.0);
            CHECK(p.lambda1_limit == doctest::Approx(p.lambda_r).epsilon(1e-12));
        }
    }
}

TEST_CASE("theory rejects non-normalized and unbounded trimmers") {
    CHECK_THROWS_AS(predict(Model(make_trimmer("opt", 3.0), 3.0)), UnboundedTrimmer);
    CHECK_THROWS_AS(predict(Model(make_trimmer("opt-eps", 3.0, 0.1), 3.0)),
                    InvalidArgument);
}
