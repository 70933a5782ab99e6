#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>

namespace orthospec {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

// Composition with the affine map applied by normalization:
// normalized value = scale * raw value + shift. Eigenvalues of the trimmed
// data matrix transform the same way, so raw-scale eigenvalues are recovered
// as (lambda - shift) / scale.
struct AffineMap {
    double scale = 1.0;
    double shift = 0.0;
};

// A trimming function y -> t applied to each phaseless measurement before the
// data matrix is formed. `eval` must be deterministic.
class TrimmingFunction {
  public:
    TrimmingFunction(std::string name, std::map<std::string, double> params,
                     std::function<double(double)> eval, Interval declared_range,
                     bool bounded, bool lipschitz)
        : name_(std::move(name)),
          params_(std::move(params)),
          eval_(std::move(eval)),
          declared_range_(declared_range),
          bounded_(bounded),
          lipschitz_(lipschitz) {}

    double operator()(double y) const { return eval_(y); }

    const std::string& name() const { return name_; }
    const std::map<std::string, double>& params() const { return params_; }
    Interval declared_range() const { return declared_range_; }
    bool bounded() const { return bounded_; }
    bool lipschitz() const { return lipschitz_; }
    const AffineMap& from_raw() const { return from_raw_; }

    // True when the declared range sits inside [0,1] (up to 1e-12), i.e. the
    // trimmer can be fed to the theory operations without normalization.
    bool unit_range() const;

    friend TrimmingFunction normalize_trimmer(const TrimmingFunction& t);

  private:
    std::string name_;
    std::map<std::string, double> params_;
    std::function<double(double)> eval_;
    Interval declared_range_;
    bool bounded_;
    bool lipschitz_;
    AffineMap from_raw_{};
};

// Affine rescaling onto [0,1]. The leading eigenvector of the trimmed data
// matrix is unchanged; the recorded AffineMap maps eigenvalues back.
// Throws UnboundedTrimmer if the trimmer is not bounded.
TrimmingFunction normalize_trimmer(const TrimmingFunction& t);

// Built-in registry. Ids: "mm", "lal", "opt", "opt-eps", "const".
// `eps` feeds "opt-eps" (default 0.1) and doubles as the constant level for
// "const" (default 0.5). The "mm" subtraction constant sqrt(delta)-1 makes
// the built-ins delta-dependent.
TrimmingFunction make_trimmer(const std::string& id, double delta,
                              std::optional<double> eps = std::nullopt);

// Piecewise-linear table from a two-column CSV (y, t); linear interpolation
// between knots, constant extrapolation outside.
TrimmingFunction load_trimmer_csv(const std::string& path);

}  // namespace orthospec
