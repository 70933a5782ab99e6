#pragma once

#include <complex>
#include <optional>

#include "orthospec/model.hpp"

namespace orthospec {

// The function quadruple evaluated at tau:
//   Lambda(tau)  = tau - (1 - 1/delta) / E[1/(tau-T)]
//   psi1(tau)    = E[S/(tau-T)] / E[1/(tau-T)]
//   psi2(tau)    = E[1/(tau-T)^2] / E[1/(tau-T)]^2
//   psi3sq(tau)  = E[S/(tau-T)^2] / E[1/(tau-T)]^2
// At tau = 1 with E[(1-T)^{-1}] = inf the boundary convention applies:
// Lambda(1) = 1, psi1(1) = 1 (reading 1/inf = 0 and inf/inf = 1); psi2 and
// psi3sq are undefined there (and whenever E[(1-T)^{-2}] = inf).
struct TransformValues {
    double tau = 0.0;
    double lambda_of_tau = 0.0;
    double psi1 = 0.0;
    std::optional<double> psi2;
    std::optional<double> psi3sq;
};

TransformValues eval_transforms(const Model& m, double tau);  // tau >= 1

// Lambda on (-inf, 0] and [1, inf), with the divergence conventions at the
// two boundary points (Lambda(1) = 1, Lambda(0) = 0 when the respective
// inverse moment diverges). DomainError inside (0, 1).
double lambda_on_reals(const Model& m, double tau);

// Lambda'(tau) = ((delta-1)/delta) * (delta/(delta-1) - psi2(tau)) for
// tau > 1 or tau < 0; returns -inf when E[(tau-T)^{-2}] diverges (boundary
// approach), which is the correct sign for minimization logic.
double lambda_prime(const Model& m, double tau);

// Analytic continuation used by the subordination solver.
std::complex<double> lambda_complex(const Model& m, std::complex<double> tau);
std::complex<double> lambda_prime_complex(const Model& m,
                                          std::complex<double> tau);

// Classified boundary moments. `finite == false` means the expectation
// diverges to +inf (the convention cases of the transform definitions).
struct BoundaryMoment {
    bool finite = true;
    double value = 0.0;
};

BoundaryMoment inverse_moment_at_one(const Model& m, int k);    // E[(1-T)^{-k}]
BoundaryMoment weighted_inverse_moment_at_one(const Model& m);  // E[S/(1-T)]
BoundaryMoment inverse_moment_of_t(const Model& m);             // E[1/T]

}  // namespace orthospec
