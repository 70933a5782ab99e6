#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "orthospec/model.hpp"

namespace orthospec {

// Support of the bulk of the limiting spectrum: [lambda_l, lambda_r] with the
// extremizing arguments tau_l <= 0 and tau_r >= 1 of Lambda on the two real
// branches.
struct BulkSupport {
    double lambda_l = 0.0;
    double tau_l = 0.0;
    double lambda_r = 0.0;
    double tau_r = 1.0;
};

BulkSupport bulk_support(const Model& m);

// One evaluation of the subordination machinery at a query point z in the
// lower half plane: tau_T solves Lambda(tau) = z there, and the Cauchy
// transform of the limiting law follows in closed form from tau_T.
struct SubordinationPoint {
    std::complex<double> z;
    std::complex<double> tau_T;
    std::complex<double> cauchy;
    int iterations = 0;
};

SubordinationPoint subordinate(const Model& m, std::complex<double> z);
// Warm-started variant for continuation along grids.
SubordinationPoint subordinate(const Model& m, std::complex<double> z,
                               std::complex<double> tau_seed);

struct BulkSpectrum {
    double lambda_l = 0.0;
    double tau_l = 0.0;
    double lambda_r = 0.0;
    double tau_r = 1.0;
    std::vector<double> grid;
    std::vector<double> density;          // NaN where a point failed
    std::vector<std::uint8_t> converged;  // 0/1 per grid point
    std::optional<double> outlier;
};

// Density of the absolutely continuous part by Stieltjes inversion, with the
// epsilon-schedule {1e-2, 1e-3, 1e-4} and first-order Richardson
// extrapolation from the two smallest levels. The mass budget: an atom of
// mass 1 - 1/delta sits at zero, the continuous part integrates to 1/delta.
BulkSpectrum bulk_density(const Model& m, std::span<const double> grid);

// Predicted spike location: Lambda(theta) when theta exits [tau_l, tau_r],
// nothing otherwise.
std::optional<double> outlier_location(const Model& m, double theta);

}  // namespace orthospec
