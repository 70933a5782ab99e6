#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "orthospec/model.hpp"

namespace orthospec {

// First n columns of a Haar unitary on U(m), realized by QR of an i.i.d.
// standard complex Gaussian matrix with the triangular factor's diagonal
// phase-fixed to be real positive.
struct SensingMatrix {
    Eigen::MatrixXcd a;  // m x n, orthonormal columns
    int m() const { return static_cast<int>(a.rows()); }
    int n() const { return static_cast<int>(a.cols()); }
};

SensingMatrix sample_sensing(int m, int n, std::uint64_t seed);

struct TrialResult {
    double lambda1_hat = 0.0;
    double overlap = 0.0;  // |x*^H xhat|^2 / n
    long iterations = 0;   // 0 when the dense eigensolver was used
    double a_m = 0.0;      // A_1^H T A_1
    bool degenerate_eigenspace = false;
};

// Leading eigenpair of A^H T A with T = Diag(trimmer(|A x*|_i)). Power
// iteration handles large PSD instances; the dense Hermitian solver covers
// n <= 512, signed spectra (raw "opt" mode) and power-iteration stagnation.
TrialResult spectral_estimate(const SensingMatrix& A,
                              const Eigen::VectorXcd& x_star,
                              const TrimmingFunction& trimmer);

struct EmpiricalSummary {
    long trials = 0;
    double lambda1_mean = 0.0, lambda1_std = 0.0;
    double overlap_mean = 0.0, overlap_std = 0.0;
    double a_m_mean = 0.0;
    std::uint64_t seed = 0;
    int n = 0, m = 0;
    double delta = 0.0;
    std::string trimmer_name;
};

struct RunOptions {
    int n = 0;
    long trials = 1;
    std::uint64_t seed = 1;
    int threads = 1;
    bool random_xstar = false;      // default x* = sqrt(n) e_1
    std::string dump_jsonl;         // optional per-trial record file
};

// Independent trials with per-trial derived seeds; summaries are
// bit-identical across thread counts (fixed-order final reduction).
EmpiricalSummary run_trials(const Model& model, const RunOptions& opts);

// All m_dim eigenvalues (ascending) of the no-spike product model: T drawn
// i.i.d. from the trimmed law, multiplied against a Haar-rotated rank-n
// projection. The m_dim - n structural zeros are included.
std::vector<double> empirical_bulk(int m_dim, const Model& model,
                                   std::uint64_t seed);

// Same with one diagonal entry of T replaced by theta; returns the top
// eigenvalue and the maximum of the remainder.
std::pair<double, double> empirical_spiked(int m_dim, const Model& model,
                                           double theta, std::uint64_t seed);

struct RankOneReport {
    bool degenerate = false;  // q = 0 with lambda1(P) <= a: no fixed point
    double vartheta = 0.0;
    double lambda1_residual = 0.0;
    double overlap_residual = 0.0;
};

// Checks the scalar fixed-point characterization of the top eigenpair of a
// Hermitian matrix partitioned at its first coordinate:
//   L(v) = lambda1(P + v q q^H) = 1/v + a  at v = vartheta,
//   |e_1^H v_1|^2 = L'(vartheta) / (L'(vartheta) + 1/vartheta^2).
RankOneReport verify_rank_one_reduction(const Eigen::MatrixXcd& D);

// Exact finite-m evaluation of Q_m(lambda) = sum_i |A_i1|^2 / (lambda - T_i)
// on a grid of lambda > max_i T_i.
std::vector<double> empirical_Qm(const SensingMatrix& A,
                                 const TrimmingFunction& trimmer,
                                 std::span<const double> lambda_grid);

double empirical_am(const SensingMatrix& A, const TrimmingFunction& trimmer);

// Orthonormal basis of the orthogonal complement of a unit vector,
// m x (m-1). Used by the validation suites that build the deflated matrix
// explicitly.
Eigen::MatrixXcd orthonormal_complement(const Eigen::VectorXcd& a1);

}  // namespace orthospec
