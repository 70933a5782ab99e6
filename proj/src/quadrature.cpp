#include "orthospec/quadrature.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <queue>

#include "orthospec/errors.hpp"

namespace orthospec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// e^{-80} ~ 1.8e-35: the truncated tail is negligible against any
// expectation of polynomially bounded integrands.
constexpr double kUpperCut = 80.0;

QuadratureRule golub_welsch(const Eigen::VectorXd& diag,
                            const Eigen::VectorXd& subdiag, double mu0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, subdiag, Eigen::ComputeEigenvectors);
    const int n = static_cast<int>(diag.size());
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        rule.nodes[i] = es.eigenvalues()(i);
        const double v0 = es.eigenvectors()(0, i);
        rule.weights[i] = mu0 * v0 * v0;
    }
    return rule;
}

}  // namespace

void QuadratureSettings::validate() const {
    if (primary_order < 32)
        throw InvalidArgument("QuadratureSettings: primary_order must be >= 32");
    if (!(adaptive_tol > 0.0) || adaptive_tol > 1e-6)
        throw InvalidArgument("QuadratureSettings: adaptive_tol must be in (0, 1e-6]");
    if (!(divergence_threshold > 0.0))
        throw InvalidArgument("QuadratureSettings: divergence_threshold must be positive");
}

namespace {

// (l_n, l_{n-1}) of the scaled Laguerre functions e^{-x/2} L_k(x). The
// scaling keeps the recurrence in range out to the largest nodes.
std::pair<double, double> scaled_laguerre(int n, double x) {
    double lm1 = 0.0;
    double l0 = std::exp(-0.5 * x);
    for (int k = 0; k < n; ++k) {
        const double lp = ((2.0 * k + 1.0 - x) * l0 - k * lm1) / (k + 1.0);
        lm1 = l0;
        l0 = lp;
    }
    return {l0, lm1};
}

}  // namespace

const QuadratureRule& gauss_laguerre(int order) {
    if (order < 1) throw InvalidArgument("gauss_laguerre: order must be >= 1");
    static std::map<int, QuadratureRule> cache;
    static std::mutex mtx;
    std::lock_guard lock(mtx);
    auto it = cache.find(order);
    if (it != cache.end()) return it->second;

    // Jacobi matrix of the Laguerre polynomials (alpha = 0). The tridiagonal
    // eigenvalues locate the nodes; eigenvector-based weights lose relative
    // accuracy at high orders, so each node is Newton-polished and the weight
    // comes from the closed form w = x e^{-x} / ((n+1) lhat_{n+1}(x))^2 with
    // lhat the scaled Laguerre function.
    Eigen::VectorXd diag(order), sub(order - 1);
    for (int k = 0; k < order; ++k) diag(k) = 2.0 * k + 1.0;
    for (int k = 1; k < order; ++k) sub(k - 1) = static_cast<double>(k);
    QuadratureRule rule = golub_welsch(diag, sub, 1.0);
    for (int i = 0; i < order; ++i) {
        double x = rule.nodes[i];
        for (int it2 = 0; it2 < 4; ++it2) {
            const auto [ln, lnm1] = scaled_laguerre(order, x);
            const double deriv = order * (ln - lnm1) / x - 0.5 * ln;
            if (!std::isfinite(deriv) || deriv == 0.0) break;
            const double step = ln / deriv;
            x -= step;
            if (std::abs(step) <= 1e-15 * std::max(1.0, x)) break;
        }
        rule.nodes[i] = x;
        const auto [lnp1, unused] = scaled_laguerre(order + 1, x);
        const double denom = (order + 1) * lnp1;
        double w = 0.0;
        if (std::isfinite(denom) && denom != 0.0) w = x * std::exp(-x) / (denom * denom);
        rule.weights[i] = std::isfinite(w) ? w : 0.0;  // underflowed tail
    }
    return cache.emplace(order, std::move(rule)).first->second;
}

const QuadratureRule& gauss_legendre(int order) {
    if (order < 1) throw InvalidArgument("gauss_legendre: order must be >= 1");
    static std::map<int, QuadratureRule> cache;
    static std::mutex mtx;
    std::lock_guard lock(mtx);
    auto it = cache.find(order);
    if (it != cache.end()) return it->second;

    Eigen::VectorXd diag = Eigen::VectorXd::Zero(order);
    Eigen::VectorXd sub(order - 1);
    for (int k = 1; k < order; ++k)
        sub(k - 1) = k / std::sqrt(4.0 * k * k - 1.0);
    return cache.emplace(order, golub_welsch(diag, sub, 2.0)).first->second;
}

namespace {

template <class Value>
struct Accumulator {
    Value sum{};
    bool saw_positive = false;
    bool saw_negative = false;
    bool saw_inf = false;

    void add(double weight, Value v);
};

template <>
void Accumulator<double>::add(double weight, double v) {
    if (std::isnan(v)) throw IntegrandError("non-finite integrand value at quadrature node");
    if (v > 0) saw_positive = true;
    if (v < 0) saw_negative = true;
    if (std::isinf(v)) {
        saw_inf = true;
        return;  // sign already recorded; magnitude handled by caller
    }
    sum += weight * v;
}

template <>
void Accumulator<std::complex<double>>::add(double weight, std::complex<double> v) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw IntegrandError("non-finite integrand value at quadrature node");
    sum += weight * v;
}

template <class Value>
Value laguerre_pass(const std::function<Value(double)>& g, int order,
                    Accumulator<Value>& acc) {
    const QuadratureRule& rule = gauss_laguerre(order);
    Accumulator<Value> local;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
        local.add(rule.weights[i], g(rule.nodes[i]));
    acc.saw_positive |= local.saw_positive;
    acc.saw_negative |= local.saw_negative;
    acc.saw_inf |= local.saw_inf;
    return local.sum;
}

template <class Value>
Value panel(const std::function<Value(double)>& g, double a, double b,
            Accumulator<Value>& acc) {
    const QuadratureRule& rule = gauss_legendre(15);
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    Accumulator<Value> local;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double s = mid + half * rule.nodes[i];
        local.add(rule.weights[i] * half, g(s) * std::exp(-s));
    }
    acc.saw_positive |= local.saw_positive;
    acc.saw_negative |= local.saw_negative;
    acc.saw_inf |= local.saw_inf;
    return local.sum;
}

// Divergence verdict: sign-consistent integrand blowing past the threshold.
bool consistent_sign(bool pos, bool neg) { return !(pos && neg); }

template <class Value>
Value adaptive_pass(const std::function<Value(double)>& g,
                    const QuadratureSettings& settings,
                    std::span<const double> hints, Accumulator<Value>& acc,
                    bool& diverged) {
    std::vector<double> breaks = {0.0, 1e-4, 1e-2, 0.5, 2.0, 8.0, 24.0, kUpperCut};
    for (double h : hints)
        if (h > 0.0 && h < kUpperCut) breaks.push_back(h);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    struct Piece {
        double a, b;
        Value whole;
        double err;
    };
    auto make_piece = [&](double a, double b) {
        Value whole = panel(g, a, b, acc);
        Value left = panel(g, a, 0.5 * (a + b), acc);
        Value right = panel(g, 0.5 * (a + b), b, acc);
        Piece p{a, b, left + right, std::abs(whole - (left + right))};
        return p;
    };

    auto cmp = [](const Piece& x, const Piece& y) { return x.err < y.err; };
    std::priority_queue<Piece, std::vector<Piece>, decltype(cmp)> heap(cmp);
    Value total{};
    double total_err = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        Piece p = make_piece(breaks[i], breaks[i + 1]);
        total += p.whole;
        total_err += p.err;
        heap.push(p);
    }

    const std::size_t max_pieces = 4000;
    std::size_t pieces = breaks.size() - 1;
    while (total_err > settings.adaptive_tol * std::max(1.0, std::abs(total)) &&
           pieces < max_pieces && !heap.empty()) {
        Piece worst = heap.top();
        heap.pop();
        total -= worst.whole;
        total_err -= worst.err;
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) continue;  // width at rounding limit
        for (Piece p : {make_piece(worst.a, mid), make_piece(mid, worst.b)}) {
            total += p.whole;
            total_err += p.err;
            heap.push(p);
        }
        ++pieces;
        if (std::abs(total) > settings.divergence_threshold &&
            consistent_sign(acc.saw_positive, acc.saw_negative)) {
            diverged = true;
            return total;
        }
    }
    if (total_err > settings.adaptive_tol * std::max(1.0, std::abs(total))) {
        if (consistent_sign(acc.saw_positive, acc.saw_negative) &&
            std::abs(total) > settings.divergence_threshold) {
            diverged = true;
            return total;
        }
        throw IntegrandError(
            "adaptive quadrature did not converge (possibly a slowly divergent "
            "integral)");
    }
    return total;
}

template <class Value>
Value integrate_impl(const std::function<Value(double)>& g,
                     const QuadratureSettings& settings,
                     std::span<const double> hints, bool& diverged,
                     Accumulator<Value>& acc) {
    settings.validate();
    diverged = false;

    Value prev = laguerre_pass(g, settings.primary_order, acc);
    for (int mult : {2, 4}) {
        if (acc.saw_inf) break;
        Value cur = laguerre_pass(g, settings.primary_order * mult, acc);
        // Converged estimates are trusted whatever their magnitude; the
        // sentinel is reserved for estimates that keep growing.
        if (std::abs(cur - prev) <=
            settings.adaptive_tol * std::max(1.0, std::abs(cur)))
            return cur;
        if (std::abs(cur) > settings.divergence_threshold &&
            std::abs(cur) > std::abs(prev) &&
            consistent_sign(acc.saw_positive, acc.saw_negative)) {
            diverged = true;
            return cur;
        }
        prev = cur;
    }
    if (acc.saw_inf) {
        if (consistent_sign(acc.saw_positive, acc.saw_negative)) {
            diverged = true;
            return prev;
        }
        throw IntegrandError("infinite integrand values of mixed sign");
    }
    return adaptive_pass(g, settings, hints, acc, diverged);
}

}  // namespace

double integrate_exponential(const std::function<double(double)>& g,
                             const QuadratureSettings& settings,
                             std::span<const double> hints) {
    bool diverged = false;
    Accumulator<double> acc;
    double value = integrate_impl<double>(g, settings, hints, diverged, acc);
    if (diverged) return acc.saw_negative ? -kInf : kInf;
    return value;
}

std::complex<double> integrate_exponential_complex(
    const std::function<std::complex<double>(double)>& g,
    const QuadratureSettings& settings, std::span<const double> hints) {
    bool diverged = false;
    Accumulator<std::complex<double>> acc;
    std::complex<double> value =
        integrate_impl<std::complex<double>>(g, settings, hints, diverged, acc);
    if (diverged)
        throw IntegrandError("divergent complex integral");
    return value;
}

}  // namespace orthospec
