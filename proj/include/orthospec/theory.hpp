#pragma once

#include <functional>
#include <optional>

#include "orthospec/model.hpp"
#include "orthospec/transforms.hpp"

namespace orthospec {

enum class Regime { Uninformative, Informative, Boundary };

const char* to_string(Regime r);

// Outputs of the asymptotic characterization: the location tau_r of the bulk
// edge minimum, the predicted limiting top eigenvalue and squared overlap,
// and the fixed-point quantities of the rank-one route.
struct TheoryPrediction {
    Regime regime = Regime::Uninformative;
    double tau_r = 1.0;
    double lambda_r = 0.0;
    std::optional<double> theta_star;
    double lambda1_limit = 0.0;
    double rho2_limit = 0.0;
    std::optional<double> vartheta_star;
    double vartheta_c = 0.0;
};

struct TauRResult {
    double tau_r;
    double lambda_r;
};

// argmin of the convex Lambda on [1, inf): tau_r = 1 when the right
// derivative at 1 is nonnegative, otherwise the unique interior zero of
// Lambda'. Throws NoMinimum if bracket expansion passes 1e8.
TauRResult find_tau_r(const Model& m);

// Unique root of psi1(theta) = delta/(delta-1) beyond tau_r, present exactly
// when psi1(tau_r) exceeds that threshold.
std::optional<double> find_theta_star(const Model& m);

TheoryPrediction predict(const Model& m);

// vartheta_c = (1 - E[S/(1-T)]^{-1} - E[S T])^{-1}; +inf for degenerate T.
double vartheta_critical(const Model& m);

// theta(vartheta): 1 for vartheta <= vartheta_c, otherwise the unique root of
// lambda - E[S T] - 1/vartheta = E[S/(lambda-T)]^{-1} beyond
// max(1, E[S T] + 1/vartheta).
double theta_of_vartheta(const Model& m, double vartheta);

struct VarthetaStarResult {
    double vartheta_star;
    // Lambda_+(theta(vartheta_star)); must agree with predict().lambda1_limit.
    double lambda1_check;
    double derivative;   // d/dvartheta Lambda_+(theta(vartheta)) at the root
    int lemma_case;      // 1, 2, or 0 at the regime boundary
};

// Solves the scalar fixed point Lambda_+(theta(v)) = 1/v + E[S T]; an
// independent route to the limiting top eigenvalue.
VarthetaStarResult solve_vartheta_star(const Model& m);

struct DeltaTransition {
    double delta_T;
    double lo, hi;  // final bracket
    int iterations;
};

// Critical sampling ratio where the informativeness criterion changes sign.
// The family maps delta to the trimmer at that delta (built-ins depend on
// delta); trimmers are normalized internally when required.
DeltaTransition find_delta_transition(
    const std::function<TrimmingFunction(double)>& family, double delta_lo,
    double delta_hi, const QuadratureSettings& quad = {});

// Best possible asymptotic squared overlap over trimming functions,
// evaluated with the analytic law tau - T_opt = tau - 1 + 1/S.
double rho_opt(double delta, const QuadratureSettings& quad = {});

struct RhoOptDetail {
    double rho2;
    std::optional<double> theta_star;  // root of psi1_opt = delta/(delta-1)
};
RhoOptDetail rho_opt_detail(double delta, const QuadratureSettings& quad = {});

}  // namespace orthospec
