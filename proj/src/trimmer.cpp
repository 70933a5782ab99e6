#include "orthospec/trimmer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include "orthospec/errors.hpp"

namespace orthospec {

bool TrimmingFunction::unit_range() const {
    return bounded_ && declared_range_.lo >= -1e-12 &&
           declared_range_.hi <= 1.0 + 1e-12;
}

TrimmingFunction normalize_trimmer(const TrimmingFunction& t) {
    if (!t.bounded())
        throw UnboundedTrimmer("normalize_trimmer: '" + t.name() +
                               "' is unbounded; only Monte-Carlo mode applies");
    const double a = t.declared_range().lo, b = t.declared_range().hi;
    if (!(b > a))
        throw InvalidArgument("normalize_trimmer: degenerate declared range");
    const double scale = 1.0 / (b - a), shift = -a / (b - a);
    if (std::abs(scale - 1.0) < 1e-15 && std::abs(shift) < 1e-15) {
        TrimmingFunction same = t;
        return same;  // already normalized; idempotent by construction
    }
    auto raw = t;  // owns a copy of the original evaluator
    TrimmingFunction out(
        t.name() + "~norm", t.params(),
        [raw, scale, shift](double y) { return scale * raw(y) + shift; },
        Interval{0.0, 1.0}, true, t.lipschitz());
    out.from_raw_ = AffineMap{scale, shift};
    return out;
}

TrimmingFunction make_trimmer(const std::string& id, double delta,
                              std::optional<double> eps) {
    if (!(delta > 1.0))
        throw InvalidArgument("make_trimmer: delta must exceed 1");
    if (id == "mm") {
        const double c = std::sqrt(delta) - 1.0;
        return TrimmingFunction(
            "mm", {{"delta", delta}},
            [delta, c](double y) {
                const double u = delta * y * y;
                return u / (u + c);
            },
            Interval{0.0, 1.0}, true, true);
    }
    if (id == "lal") {
        return TrimmingFunction(
            "lal", {{"delta", delta}},
            [delta](double y) {
                const double u = delta * y * y;
                return u / (u + 0.1);
            },
            Interval{0.0, 1.0}, true, true);
    }
    if (id == "opt") {
        return TrimmingFunction(
            "opt", {{"delta", delta}},
            [delta](double y) {
                const double u = delta * y * y;
                return 1.0 - 1.0 / u;  // -inf at y=0: unbounded below
            },
            Interval{-std::numeric_limits<double>::infinity(), 1.0}, false,
            false);
    }
    if (id == "opt-eps") {
        const double e = eps.value_or(0.1);
        if (!(e > 0.0))
            throw InvalidArgument("make_trimmer: opt-eps requires eps > 0");
        return TrimmingFunction(
            "opt-eps", {{"delta", delta}, {"eps", e}},
            [delta, e](double y) { return 1.0 - 1.0 / (delta * y * y + e); },
            Interval{1.0 - 1.0 / e, 1.0}, true, true);
    }
    if (id == "const") {
        const double c = eps.value_or(0.5);
        return TrimmingFunction("const", {{"value", c}},
                                [c](double) { return c; }, Interval{c, c},
                                true, true);
    }
    throw InvalidArgument("make_trimmer: unknown trimmer id '" + id + "'");
}

TrimmingFunction load_trimmer_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("load_trimmer_csv: cannot open " + path);
    std::vector<double> ys, ts;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream row(line);
        double y, t;
        if (!(row >> y >> t))
            throw InvalidArgument("load_trimmer_csv: malformed row '" + line + "'");
        if (y < 0.0)
            throw InvalidArgument("load_trimmer_csv: y values must be >= 0");
        ys.push_back(y);
        ts.push_back(t);
    }
    if (ys.size() < 2)
        throw InvalidArgument("load_trimmer_csv: need at least two rows");
    std::vector<std::size_t> order(ys.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return ys[a] < ys[b]; });
    std::vector<double> y_sorted, t_sorted;
    for (std::size_t i : order) {
        if (!y_sorted.empty() && ys[i] == y_sorted.back())
            throw InvalidArgument("load_trimmer_csv: duplicate y value");
        y_sorted.push_back(ys[i]);
        t_sorted.push_back(ts[i]);
    }
    const double lo = *std::min_element(t_sorted.begin(), t_sorted.end());
    const double hi = *std::max_element(t_sorted.begin(), t_sorted.end());
    auto eval = [y = std::move(y_sorted), t = std::move(t_sorted)](double q) {
        if (q <= y.front()) return t.front();
        if (q >= y.back()) return t.back();
        const auto it = std::upper_bound(y.begin(), y.end(), q);
        const std::size_t j = static_cast<std::size_t>(it - y.begin());
        const double w = (q - y[j - 1]) / (y[j] - y[j - 1]);
        return t[j - 1] + w * (t[j] - t[j - 1]);
    };
    return TrimmingFunction("csv:" + path, {}, std::move(eval),
                            Interval{lo, hi}, true, true);
}

}  // namespace orthospec
