#pragma once

#include <complex>
#include <functional>
#include <span>
#include <vector>

namespace orthospec {

struct QuadratureSettings {
    // Node count of the fixed Gauss-Laguerre rule tried first.
    int primary_order = 64;
    // Relative agreement required between successive refinements.
    double adaptive_tol = 1e-11;
    // Magnitude above which an expectation is declared infinite.
    double divergence_threshold = 1e12;

    void validate() const;  // throws InvalidArgument
};

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Weight e^{-x} on [0, inf). Rules are cached per order; thread-safe.
const QuadratureRule& gauss_laguerre(int order);

// Weight 1 on [-1, 1].
const QuadratureRule& gauss_legendre(int order);

// integral_0^inf g(s) e^{-s} ds.
//
// Strategy: fixed Gauss-Laguerre rule at primary_order, refined by doubling
// the order; if that fails to settle, an adaptive Gauss-Legendre subdivision
// of [0, 80] takes over. `hints` adds initial breakpoints for the adaptive
// stage (integrands with a sharp feature at a known location).
//
// The real overload returns +/-inf when the integral diverges with a
// sign-consistent integrand and throws IntegrandError on NaN at a node.
double integrate_exponential(const std::function<double(double)>& g,
                             const QuadratureSettings& settings,
                             std::span<const double> hints = {});

std::complex<double> integrate_exponential_complex(
    const std::function<std::complex<double>(double)>& g,
    const QuadratureSettings& settings, std::span<const double> hints = {});

}  // namespace orthospec
