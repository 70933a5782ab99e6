#include "orthospec/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <thread>

#include "orthospec/errors.hpp"
#include "orthospec/rng.hpp"
#include "orthospec/roots.hpp"

namespace orthospec {

namespace {

Eigen::VectorXd trimmed_measurements(const SensingMatrix& A,
                                     const Eigen::VectorXcd& x_star,
                                     const TrimmingFunction& trimmer) {
    const Eigen::VectorXd y = (A.a * x_star).cwiseAbs();
    Eigen::VectorXd t(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) t(i) = trimmer(y(i));
    return t;
}

struct PowerResult {
    double lambda1;
    Eigen::VectorXcd vec;
    long iterations;
    bool converged;
    bool immediate;  // settled within the first few sweeps
};

// Matrix-free power iteration on v -> A^H (t .* (A v)), valid for PSD
// instances. Gives up early when the observed contraction predicts the
// budget cannot be met; the caller then falls back to the dense solver.
PowerResult power_iteration(const SensingMatrix& A, const Eigen::VectorXd& t,
                            double rel_tol, long max_iter) {
    const int n = A.n();
    Eigen::VectorXcd v(n);
    Xoshiro256 rng(0x5EEDULL ^ static_cast<std::uint64_t>(n));
    for (int i = 0; i < n; ++i) v(i) = rng.complex_gaussian();
    v /= v.norm();

    double lam_prev = 0.0, delta_prev = 0.0;
    long check_mark = 512;
    double delta_at_mark = -1.0;
    int settled = 0;
    for (long it = 1; it <= max_iter; ++it) {
        Eigen::VectorXcd w = A.a * v;
        w.array() *= t.array();
        Eigen::VectorXcd u = A.a.adjoint() * w;
        const double lam = std::real(v.dot(u));
        const double nrm = u.norm();
        if (!(nrm > 0.0)) return {0.0, v, it, true, it <= 4};  // T annihilates
        v = u / nrm;
        const double delta = std::abs(lam - lam_prev);
        lam_prev = lam;
        if (delta <= rel_tol * std::max(std::abs(lam), 1e-300)) {
            if (++settled >= 3) return {lam, v, it, true, it <= 5};
        } else {
            settled = 0;
        }
        if (it == check_mark) {
            if (delta_at_mark > 0.0 && delta > 0.0) {
                const double c = std::pow(delta / delta_at_mark, 1.0 / 512.0);
                if (c >= 1.0 - 1e-12) return {lam, v, it, false, false};
                const double target = rel_tol * std::max(std::abs(lam), 1e-300);
                const double remaining = std::log(target / delta) / std::log(c);
                if (it + remaining > static_cast<double>(max_iter))
                    return {lam, v, it, false, false};
            }
            delta_at_mark = delta;
            check_mark += 512;
        }
        delta_prev = delta;
    }
    (void)delta_prev;
    return {lam_prev, v, max_iter, false, false};
}

struct DenseResult {
    double lambda1;
    Eigen::VectorXcd vec;
    bool degenerate;
};

DenseResult dense_top_eigenpair(const SensingMatrix& A,
                                const Eigen::VectorXd& t) {
    const Eigen::MatrixXcd M = A.a.adjoint() * (t.asDiagonal() * A.a);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(M);
    if (es.info() != Eigen::Success)
        throw SolverError("spectral_estimate: dense eigensolver failed");
    const int n = A.n();
    const double top = es.eigenvalues()(n - 1);
    const double next = n >= 2 ? es.eigenvalues()(n - 2) : top - 1.0;
    return {top, es.eigenvectors().col(n - 1),
            top - next <= 1e-12 * std::max(1.0, std::abs(top))};
}

void write_jsonl(const std::string& path,
                 const std::vector<std::uint64_t>& seeds,
                 const std::vector<TrialResult>& results) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("run_trials: cannot open dump file " + path);
    char buf[256];
    for (std::size_t i = 0; i < results.size(); ++i) {
        const TrialResult& r = results[i];
        std::snprintf(buf, sizeof(buf),
                      "{\"seed\":%llu,\"lambda1_hat\":%.12g,\"overlap\":%.12g,"
                      "\"iterations\":%ld,\"a_m\":%.12g}\n",
                      static_cast<unsigned long long>(seeds[i]), r.lambda1_hat,
                      r.overlap, r.iterations, r.a_m);
        out << buf;
    }
}

}  // namespace

SensingMatrix sample_sensing(int m, int n, std::uint64_t seed) {
    if (n < 1) throw DimensionError("sample_sensing: n must be >= 1");
    if (m < n + 1) throw DimensionError("sample_sensing: need m >= n + 1");
    Eigen::MatrixXcd g(m, n);
    Xoshiro256 rng(seed);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < m; ++i) g(i, j) = rng.complex_gaussian();
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
    Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(m, n);
    const auto& qrmat = qr.matrixQR();
    for (int j = 0; j < n; ++j) {
        const std::complex<double> rjj = qrmat(j, j);
        const double mag = std::abs(rjj);
        if (mag > 0.0) q.col(j) *= rjj / mag;
    }
    return {std::move(q)};
}

TrialResult spectral_estimate(const SensingMatrix& A,
                              const Eigen::VectorXcd& x_star,
                              const TrimmingFunction& trimmer) {
    const int m = A.m(), n = A.n();
    if (x_star.size() != n)
        throw DimensionError("spectral_estimate: x_star dimension mismatch");
    const double want_norm = std::sqrt(static_cast<double>(n));
    if (std::abs(x_star.norm() - want_norm) > 1e-6 * want_norm)
        throw InvalidArgument("spectral_estimate: ||x_star|| must be sqrt(n)");

    const Eigen::VectorXd t = trimmed_measurements(A, x_star, trimmer);

    TrialResult out;
    for (int i = 0; i < m; ++i)
        out.a_m += std::norm(A.a(i, 0)) * t(i);

    const bool signed_spectrum = trimmer.declared_range().lo < -1e-12;
    Eigen::VectorXcd top_vec;
    if (n <= 512 || signed_spectrum) {
        const DenseResult dr = dense_top_eigenpair(A, t);
        out.lambda1_hat = dr.lambda1;
        out.degenerate_eigenspace = dr.degenerate;
        out.iterations = 0;
        top_vec = dr.vec;
    } else {
        const PowerResult pr = power_iteration(A, t, 1e-10, 100000);
        if (pr.converged) {
            out.lambda1_hat = pr.lambda1;
            out.iterations = pr.iterations;
            out.degenerate_eigenspace = pr.immediate;
            top_vec = pr.vec;
        } else {
            const DenseResult dr = dense_top_eigenpair(A, t);
            out.lambda1_hat = dr.lambda1;
            out.degenerate_eigenspace = dr.degenerate;
            out.iterations = pr.iterations;  // spent before the fallback
            top_vec = dr.vec;
        }
    }
    out.overlap = std::norm(x_star.dot(top_vec)) / static_cast<double>(n);
    return out;
}

EmpiricalSummary run_trials(const Model& model, const RunOptions& opts) {
    if (opts.trials < 1) throw InvalidArgument("run_trials: trials must be >= 1");
    if (opts.n < 1) throw InvalidArgument("run_trials: n must be >= 1");
    const int m = static_cast<int>(std::llround(model.delta() * opts.n));
    if (m < opts.n + 1)
        throw InvalidArgument("run_trials: rounded m = delta*n leaves m < n+1");

    std::vector<std::uint64_t> seeds(static_cast<std::size_t>(opts.trials));
    for (long i = 0; i < opts.trials; ++i)
        seeds[static_cast<std::size_t>(i)] =
            derive_seed(opts.seed, static_cast<std::uint64_t>(i));

    std::vector<TrialResult> results(seeds.size());
    auto run_one = [&](std::size_t idx) {
        const std::uint64_t s = seeds[idx];
        const SensingMatrix A = sample_sensing(m, opts.n, s);
        Eigen::VectorXcd x_star;
        if (opts.random_xstar) {
            Xoshiro256 rng(derive_seed(s, 0x78A5ULL));
            x_star.resize(opts.n);
            for (int i = 0; i < opts.n; ++i) x_star(i) = rng.complex_gaussian();
            x_star *= std::sqrt(static_cast<double>(opts.n)) / x_star.norm();
        } else {
            x_star = Eigen::VectorXcd::Zero(opts.n);
            x_star(0) = std::sqrt(static_cast<double>(opts.n));
        }
        results[idx] = spectral_estimate(A, x_star, model.trimmer());
    };

    const int threads = std::max(1, opts.threads);
    if (threads == 1 || results.size() == 1) {
        for (std::size_t i = 0; i < results.size(); ++i) run_one(i);
    } else {
        std::vector<std::thread> pool;
        std::atomic<std::size_t> next{0};
        for (int w = 0; w < threads; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < results.size();
                     i = next.fetch_add(1))
                    run_one(i);
            });
        for (auto& th : pool) th.join();
    }

    // Fixed-order reduction: identical bytes no matter the thread count.
    EmpiricalSummary sum;
    sum.trials = opts.trials;
    sum.seed = opts.seed;
    sum.n = opts.n;
    sum.m = m;
    sum.delta = model.delta();
    sum.trimmer_name = model.trimmer().name();
    double l1 = 0, l2 = 0, o1 = 0, o2 = 0, am = 0;
    for (const TrialResult& r : results) {
        l1 += r.lambda1_hat;
        o1 += r.overlap;
        am += r.a_m;
    }
    const double inv = 1.0 / static_cast<double>(opts.trials);
    sum.lambda1_mean = l1 * inv;
    sum.overlap_mean = o1 * inv;
    sum.a_m_mean = am * inv;
    for (const TrialResult& r : results) {
        l2 += (r.lambda1_hat - sum.lambda1_mean) * (r.lambda1_hat - sum.lambda1_mean);
        o2 += (r.overlap - sum.overlap_mean) * (r.overlap - sum.overlap_mean);
    }
    if (opts.trials > 1) {
        sum.lambda1_std = std::sqrt(l2 / static_cast<double>(opts.trials - 1));
        sum.overlap_std = std::sqrt(o2 / static_cast<double>(opts.trials - 1));
    }
    if (!opts.dump_jsonl.empty()) write_jsonl(opts.dump_jsonl, seeds, results);
    return sum;
}

namespace {

std::vector<double> product_model_spectrum(int m_dim, const Model& model,
                                           std::uint64_t seed,
                                           std::optional<double> spike) {
    if (m_dim < 4) throw DimensionError("empirical_bulk: m_dim too small");
    if (m_dim > 4096)
        throw DimensionError("empirical_bulk: m_dim exceeds the 4096 cap");
    const int n = static_cast<int>(std::llround(m_dim / model.delta()));
    if (n < 1 || n + 1 > m_dim)
        throw DimensionError("empirical_bulk: rounded rank out of range");

    auto draws = model.sample_trimmed(derive_seed(seed, 1), m_dim);
    Eigen::VectorXd t(m_dim);
    for (int i = 0; i < m_dim; ++i) t(i) = draws[static_cast<std::size_t>(i)].second;
    if (spike) t(0) = *spike;

    // Nonzero spectrum of T * (V V^H) equals the spectrum of V^H T V for V
    // the first n Haar columns; the remaining m-n eigenvalues vanish.
    const SensingMatrix V = sample_sensing(m_dim, n, derive_seed(seed, 2));
    const Eigen::MatrixXcd w = V.a.adjoint() * (t.asDiagonal() * V.a);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(w);
    if (es.info() != Eigen::Success)
        throw SolverError("empirical_bulk: eigensolver failed");

    std::vector<double> ev(static_cast<std::size_t>(m_dim), 0.0);
    for (int i = 0; i < n; ++i)
        ev[static_cast<std::size_t>(m_dim - n + i)] = es.eigenvalues()(i);
    std::sort(ev.begin(), ev.end());
    return ev;
}

}  // namespace

std::vector<double> empirical_bulk(int m_dim, const Model& model,
                                   std::uint64_t seed) {
    return product_model_spectrum(m_dim, model, seed, std::nullopt);
}

std::pair<double, double> empirical_spiked(int m_dim, const Model& model,
                                           double theta, std::uint64_t seed) {
    if (!(theta > 0.0))
        throw InvalidArgument("empirical_spiked: theta must be positive");
    const std::vector<double> ev =
        product_model_spectrum(m_dim, model, seed, theta);
    return {ev[ev.size() - 1], ev[ev.size() - 2]};
}

RankOneReport verify_rank_one_reduction(const Eigen::MatrixXcd& D) {
    const Eigen::Index nd = D.rows();
    if (D.cols() != nd || nd < 3)
        throw DimensionError("verify_rank_one_reduction: need a square matrix of size >= 3");
    if ((D - D.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
        throw InvalidArgument("verify_rank_one_reduction: matrix is not Hermitian");

    const double a = D(0, 0).real();
    const Eigen::VectorXcd q = D.col(0).tail(nd - 1);
    const Eigen::MatrixXcd P = D.bottomRightCorner(nd - 1, nd - 1);

    auto top_of = [](const Eigen::MatrixXcd& H) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
        return es.eigenvalues()(H.rows() - 1);
    };
    auto L = [&](double v) -> double { return top_of(P + v * (q * q.adjoint())); };

    RankOneReport rep;
    const double scale = D.cwiseAbs().maxCoeff();
    const bool q_zero = q.norm() <= 1e-14 * std::max(1.0, scale);
    if (q_zero && top_of(P) <= a) {
        rep.degenerate = true;
        return rep;
    }

    auto fixed_point_gap = [&](double v) { return L(v) - 1.0 / v - a; };
    double lo = 1e-8;
    int guard = 0;
    while (fixed_point_gap(lo) > 0.0) {
        lo /= 4.0;
        if (++guard > 60)
            throw SolverError("verify_rank_one_reduction: no lower bracket");
    }
    const double hi = expand_upward(
        [&](double v) { return fixed_point_gap(v) > 0.0; }, 1.0, 1e12, [] {
            throw SolverError("verify_rank_one_reduction: no upper bracket");
        });
    const RootResult root =
        bisect(fixed_point_gap, lo, hi, -1.0, +1.0, 1e-13, 1e-12, 300);
    rep.vartheta = root.x;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(D);
    const double lam1 = es.eigenvalues()(nd - 1);
    const double e1_overlap = std::norm(es.eigenvectors()(0, nd - 1));
    rep.lambda1_residual = std::abs(lam1 - L(rep.vartheta));

    const double h = 1e-5 * std::max(1.0, rep.vartheta);
    const double lprime = (L(rep.vartheta + h) - L(rep.vartheta - h)) / (2.0 * h);
    const double predicted =
        lprime / (lprime + 1.0 / (rep.vartheta * rep.vartheta));
    rep.overlap_residual = std::abs(predicted - e1_overlap);
    return rep;
}

std::vector<double> empirical_Qm(const SensingMatrix& A,
                                 const TrimmingFunction& trimmer,
                                 std::span<const double> lambda_grid) {
    const int m = A.m(), n = A.n();
    const double root_n = std::sqrt(static_cast<double>(n));
    Eigen::VectorXd t(m), w(m);
    double t_max = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
        w(i) = std::norm(A.a(i, 0));
        t(i) = trimmer(root_n * std::abs(A.a(i, 0)));
        t_max = std::max(t_max, t(i));
    }
    std::vector<double> out;
    out.reserve(lambda_grid.size());
    for (double lam : lambda_grid) {
        if (!(lam > t_max))
            throw DomainError("empirical_Qm: grid point not above max T_i");
        double q = 0.0;
        for (int i = 0; i < m; ++i) q += w(i) / (lam - t(i));
        out.push_back(q);
    }
    return out;
}

double empirical_am(const SensingMatrix& A, const TrimmingFunction& trimmer) {
    const int m = A.m(), n = A.n();
    const double root_n = std::sqrt(static_cast<double>(n));
    double am = 0.0;
    for (int i = 0; i < m; ++i)
        am += std::norm(A.a(i, 0)) * trimmer(root_n * std::abs(A.a(i, 0)));
    return am;
}

Eigen::MatrixXcd orthonormal_complement(const Eigen::VectorXcd& a1) {
    const Eigen::Index m = a1.size();
    if (m < 2) throw DimensionError("orthonormal_complement: vector too short");
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(a1);
    const Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(m, m);
    return q.rightCols(m - 1);
}

}  // namespace orthospec
