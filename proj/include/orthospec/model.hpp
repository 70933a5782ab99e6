#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "orthospec/quadrature.hpp"
#include "orthospec/trimmer.hpp"

namespace orthospec {

// The joint law of (S, T): S = |Z|^2 ~ Exp(1) for Z standard complex
// Gaussian, T = trimmer(sqrt(S/delta)). Every expectation the theory needs
// is the 1-D integral  int_0^inf f(s, T(s)) e^{-s} ds.
class Model {
  public:
    Model(TrimmingFunction trimmer, double delta, QuadratureSettings quad = {});

    const TrimmingFunction& trimmer() const { return trimmer_; }
    double delta() const { return delta_; }
    const QuadratureSettings& quad() const { return quad_; }

    double trim_at_s(double s) const;

    // E[f(S, T)]; may return +/-inf for divergent expectations.
    double expect(const std::function<double(double, double)>& f) const;

    std::complex<double> expect_complex(
        const std::function<std::complex<double>(double, double)>& f) const;

    // Deterministic i.i.d. draws of (S, T) given the seed.
    std::vector<std::pair<double, double>> sample_trimmed(std::uint64_t seed,
                                                          std::int64_t count) const;

    Model with_trimmer(TrimmingFunction t) const {
        return Model(std::move(t), delta_, quad_);
    }

  private:
    TrimmingFunction trimmer_;
    double delta_;
    QuadratureSettings quad_;
    // s-locations where T crosses 1 - 1e-6, fed to the adaptive quadrature as
    // split hints (near-tau=1 transform integrals localize there).
    std::vector<double> split_hints_;
};

}  // namespace orthospec
