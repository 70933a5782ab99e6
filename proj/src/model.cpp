#include "orthospec/model.hpp"

#include <cmath>

#include "orthospec/errors.hpp"
#include "orthospec/rng.hpp"

namespace orthospec {

namespace {

std::vector<double> find_threshold_crossings(const Model& m) {
    // Coarse geometric scan for T(s) crossing 1 - 1e-6, refined by bisection.
    const double threshold = 1.0 - 1e-6;
    std::vector<double> hints;
    double prev_s = 1e-8;
    double prev_v = m.trim_at_s(prev_s) - threshold;
    for (int k = 1; k <= 240; ++k) {
        const double s = 1e-8 * std::pow(10.0, k / 10.0);
        if (s > 80.0) break;
        const double v = m.trim_at_s(s) - threshold;
        if (prev_v == 0.0 || prev_v * v < 0.0) {
            double lo = prev_s, hi = s;
            for (int it = 0; it < 80; ++it) {
                const double mid = 0.5 * (lo + hi);
                if ((m.trim_at_s(mid) - threshold) * prev_v > 0.0)
                    lo = mid;
                else
                    hi = mid;
            }
            hints.push_back(0.5 * (lo + hi));
            if (hints.size() >= 4) break;
        }
        prev_s = s;
        prev_v = v;
    }
    return hints;
}

}  // namespace

Model::Model(TrimmingFunction trimmer, double delta, QuadratureSettings quad)
    : trimmer_(std::move(trimmer)), delta_(delta), quad_(quad) {
    if (!(delta > 1.0)) throw InvalidArgument("Model: delta must exceed 1 strictly");
    quad_.validate();
    split_hints_ = find_threshold_crossings(*this);
}

double Model::trim_at_s(double s) const {
    return trimmer_(std::sqrt(s / delta_));
}

double Model::expect(const std::function<double(double, double)>& f) const {
    return integrate_exponential(
        [&](double s) { return f(s, trim_at_s(s)); }, quad_, split_hints_);
}

std::complex<double> Model::expect_complex(
    const std::function<std::complex<double>(double, double)>& f) const {
    return integrate_exponential_complex(
        [&](double s) -> std::complex<double> { return f(s, trim_at_s(s)); },
        quad_, split_hints_);
}

std::vector<std::pair<double, double>> Model::sample_trimmed(
    std::uint64_t seed, std::int64_t count) const {
    if (count < 1) throw InvalidArgument("sample_trimmed: count must be >= 1");
    Xoshiro256 rng(seed);
    std::vector<std::pair<double, double>> out;
    out.reserve(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < count; ++i) {
        const double s = rng.exponential();
        out.emplace_back(s, trim_at_s(s));
    }
    return out;
}

}  // namespace orthospec
