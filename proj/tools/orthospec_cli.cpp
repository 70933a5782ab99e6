// Command-line front end: wires the model, theory, free-convolution and
// Monte-Carlo layers into reproducible experiments with CSV/JSON outputs.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "orthospec/errors.hpp"
#include "orthospec/freeconv.hpp"
#include "orthospec/model.hpp"
#include "orthospec/montecarlo.hpp"
#include "orthospec/theory.hpp"
#include "orthospec/trimmer.hpp"

namespace {

using orthospec::Model;
using orthospec::TrimmingFunction;

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitNoResult = 2;
constexpr int kExitSolver = 3;

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

// "A:STEP:B" (inclusive) or a comma-separated list.
std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        double a, step, b;
        char c1, c2;
        std::istringstream in(text);
        if (!(in >> a >> c1 >> step >> c2 >> b) || c1 != ':' || c2 != ':')
            throw orthospec::InvalidArgument("bad grid spec '" + text + "'");
        if (!(step > 0.0) || b < a)
            throw orthospec::InvalidArgument("bad grid spec '" + text + "'");
        for (double x = a; x <= b + 1e-9 * step; x += step) out.push_back(x);
        return out;
    }
    std::istringstream in(text);
    std::string tok;
    while (std::getline(in, tok, ','))
        if (!tok.empty()) out.push_back(std::stod(tok));
    if (out.empty())
        throw orthospec::InvalidArgument("empty grid spec '" + text + "'");
    return out;
}

using Cell = std::variant<double, long, std::string, std::monostate>;

struct Table {
    std::vector<std::pair<std::string, std::string>> header;  // config echo
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

std::string cell_csv(const Cell& c) {
    if (std::holds_alternative<double>(c)) return fmt_double(std::get<double>(c));
    if (std::holds_alternative<long>(c)) return std::to_string(std::get<long>(c));
    if (std::holds_alternative<std::string>(c)) return std::get<std::string>(c);
    return "";
}

void write_csv(std::ostream& out, const Table& t) {
    for (const auto& [k, v] : t.header) out << "# " << k << " = " << v << "\n";
    for (std::size_t i = 0; i < t.columns.size(); ++i)
        out << t.columns[i] << (i + 1 < t.columns.size() ? "," : "\n");
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            out << cell_csv(row[i]) << (i + 1 < row.size() ? "," : "\n");
    }
}

void write_json(std::ostream& out, const Table& t) {
    nlohmann::ordered_json j;
    for (const auto& [k, v] : t.header) j["config"][k] = v;
    j["columns"] = t.columns;
    auto rows = nlohmann::ordered_json::array();
    for (const auto& row : t.rows) {
        auto r = nlohmann::ordered_json::array();
        for (const Cell& c : row) {
            if (std::holds_alternative<double>(c)) {
                // round-trip through the 12-significant-digit text form so the
                // JSON mirror and the CSV carry identical values
                r.push_back(std::stod(fmt_double(std::get<double>(c))));
            } else if (std::holds_alternative<long>(c)) {
                r.push_back(std::get<long>(c));
            } else if (std::holds_alternative<std::string>(c)) {
                r.push_back(std::get<std::string>(c));
            } else {
                r.push_back(nullptr);
            }
        }
        rows.push_back(r);
    }
    j["rows"] = rows;
    out << j.dump(2) << "\n";
}

void emit(const Table& t, const std::string& path, const std::string& format) {
    std::ostringstream buf;
    if (format == "json")
        write_json(buf, t);
    else
        write_csv(buf, t);
    if (path.empty()) {
        std::cout << buf.str();
    } else {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw orthospec::InvalidArgument("cannot open output file " + path);
        out << buf.str();
    }
}

struct Options {
    std::string command;
    std::string trimmer = "mm";
    double eps = 0.1;
    std::optional<double> delta;
    std::string delta_grid;
    int n = 1000;
    long trials = 20;
    std::uint64_t seed = 1;
    std::string grid;
    std::string out;
    std::string format = "csv";
    int threads = 1;
    bool random_xstar = false;
    std::string dump;
    int quad_order = 64;
    double quad_tol = 1e-11;
};

TrimmingFunction raw_trimmer(const Options& o, double delta) {
    if (o.trimmer.size() > 4 &&
        o.trimmer.substr(o.trimmer.size() - 4) == ".csv")
        return orthospec::load_trimmer_csv(o.trimmer);
    return orthospec::make_trimmer(o.trimmer, delta, o.eps);
}

// Theory-ready trimmer: normalized onto [0,1] when needed (the recorded
// affine map is echoed into output headers).
TrimmingFunction theory_trimmer(const Options& o, double delta) {
    TrimmingFunction t = raw_trimmer(o, delta);
    if (t.bounded() && !t.unit_range()) return orthospec::normalize_trimmer(t);
    return t;
}

orthospec::QuadratureSettings quad_of(const Options& o) {
    orthospec::QuadratureSettings q;
    q.primary_order = o.quad_order;
    q.adaptive_tol = o.quad_tol;
    return q;
}

void echo_common(Table& t, const Options& o, const TrimmingFunction& trim) {
    t.header.emplace_back("command", o.command);
    t.header.emplace_back("trimmer", o.trimmer);
    t.header.emplace_back("eps", fmt_double(o.eps));
    if (o.delta) t.header.emplace_back("delta", fmt_double(*o.delta));
    if (!o.delta_grid.empty()) t.header.emplace_back("delta-grid", o.delta_grid);
    if (!o.grid.empty()) t.header.emplace_back("grid", o.grid);
    t.header.emplace_back("seed", std::to_string(o.seed));
    t.header.emplace_back("format", o.format);
    t.header.emplace_back("quad-order", std::to_string(o.quad_order));
    t.header.emplace_back("quad-tol", fmt_double(o.quad_tol));
    const orthospec::AffineMap& map = trim.from_raw();
    if (map.scale != 1.0 || map.shift != 0.0) {
        t.header.emplace_back("normalized", "1");
        t.header.emplace_back("affine-scale", fmt_double(map.scale));
        t.header.emplace_back("affine-shift", fmt_double(map.shift));
    }
}

std::vector<double> delta_list(const Options& o) {
    if (!o.delta_grid.empty()) return parse_grid(o.delta_grid);
    if (o.delta) return {*o.delta};
    throw orthospec::InvalidArgument("need --delta or --delta-grid");
}

int cmd_theory_curve(const Options& o) {
    const std::vector<double> deltas = delta_list(o);
    Table t;
    echo_common(t, o, theory_trimmer(o, deltas.front()));
    t.columns = {"delta", "tau_r", "theta_star", "lambda1_limit", "rho2_limit",
                 "regime", "ok"};
    for (double d : deltas) {
        std::vector<Cell> row;
        row.emplace_back(d);
        try {
            const Model m(theory_trimmer(o, d), d, quad_of(o));
            const orthospec::TheoryPrediction p = orthospec::predict(m);
            row.emplace_back(p.tau_r);
            if (p.theta_star)
                row.emplace_back(*p.theta_star);
            else
                row.emplace_back(std::monostate{});
            row.emplace_back(p.lambda1_limit);
            row.emplace_back(p.rho2_limit);
            row.emplace_back(std::string(orthospec::to_string(p.regime)));
            row.emplace_back(long{1});
        } catch (const orthospec::Error& e) {
            std::cerr << "warning: delta=" << d << ": " << e.what() << "\n";
            row.resize(1);
            row.emplace_back(std::monostate{});
            row.emplace_back(std::monostate{});
            row.emplace_back(std::monostate{});
            row.emplace_back(std::monostate{});
            row.emplace_back(std::string("error"));
            row.emplace_back(long{0});
        }
        t.rows.push_back(std::move(row));
    }
    emit(t, o.out, o.format);
    return kExitOk;
}

int cmd_simulate(const Options& o) {
    const std::vector<double> deltas = delta_list(o);
    Table t;
    echo_common(t, o, theory_trimmer(o, deltas.front()));
    t.header.emplace_back("n", std::to_string(o.n));
    t.header.emplace_back("trials", std::to_string(o.trials));
    t.columns = {"delta",        "n",            "trials",      "overlap_mean",
                 "overlap_std",  "lambda1_mean", "lambda1_std", "rho2_theory",
                 "lambda1_theory"};
    for (double d : deltas) {
        TrimmingFunction trim = theory_trimmer(o, d);
        const Model m(trim, d, quad_of(o));
        double rho2_theory = std::nan("");
        double lambda1_theory = std::nan("");
        if (trim.bounded() && trim.unit_range()) {
            const orthospec::TheoryPrediction p = orthospec::predict(m);
            rho2_theory = p.rho2_limit;
            lambda1_theory = p.lambda1_limit;
        } else {
            std::cerr << "warning: trimmer '" << trim.name()
                      << "' violates the theory assumptions; theory columns "
                         "are nan (Monte-Carlo only)\n";
        }
        orthospec::RunOptions ro;
        ro.n = o.n;
        ro.trials = o.trials;
        ro.seed = o.seed;
        ro.threads = o.threads;
        ro.random_xstar = o.random_xstar;
        ro.dump_jsonl = o.dump;
        const orthospec::EmpiricalSummary s = orthospec::run_trials(m, ro);
        t.rows.push_back({d, long{o.n}, long{o.trials}, s.overlap_mean,
                          s.overlap_std, s.lambda1_mean, s.lambda1_std,
                          rho2_theory, lambda1_theory});
    }
    emit(t, o.out, o.format);
    return kExitOk;
}

int cmd_bulk_density(const Options& o) {
    if (!o.delta) throw orthospec::InvalidArgument("bulk-density needs --delta");
    const double d = *o.delta;
    const Model m(theory_trimmer(o, d), d, quad_of(o));
    std::vector<double> xs;
    if (!o.grid.empty()) {
        xs = parse_grid(o.grid);
    } else {
        const orthospec::BulkSupport sup = orthospec::bulk_support(m);
        const double lo = std::max(1e-4, sup.lambda_l - 0.05);
        const double hi = sup.lambda_r + 0.05;
        for (int i = 0; i <= 400; ++i) xs.push_back(lo + (hi - lo) * i / 400.0);
    }
    const orthospec::BulkSpectrum spec = orthospec::bulk_density(m, xs);
    Table t;
    echo_common(t, o, m.trimmer());
    t.header.emplace_back("lambda_l", fmt_double(spec.lambda_l));
    t.header.emplace_back("tau_l", fmt_double(spec.tau_l));
    t.header.emplace_back("lambda_r", fmt_double(spec.lambda_r));
    t.header.emplace_back("tau_r", fmt_double(spec.tau_r));
    t.columns = {"x", "rho", "converged"};
    for (std::size_t i = 0; i < spec.grid.size(); ++i)
        t.rows.push_back({spec.grid[i], spec.density[i],
                          long{spec.converged[i] ? 1 : 0}});
    emit(t, o.out, o.format);
    return kExitOk;
}

int cmd_phase_transition(const Options& o) {
    double lo = 1.2, hi = 6.0;
    if (!o.delta_grid.empty()) {
        const std::vector<double> g = parse_grid(o.delta_grid);
        lo = g.front();
        hi = g.back();
    }
    auto family = [&](double d) { return theory_trimmer(o, d); };
    const orthospec::DeltaTransition tr =
        orthospec::find_delta_transition(family, lo, hi, quad_of(o));
    Table t;
    echo_common(t, o, theory_trimmer(o, lo));
    t.columns = {"delta_T", "bracket_lo", "bracket_hi", "iterations"};
    t.rows.push_back({tr.delta_T, tr.lo, tr.hi, long{tr.iterations}});
    emit(t, o.out, o.format);
    return kExitOk;
}

int cmd_optimal_sweep(const Options& o) {
    if (!o.delta) throw orthospec::InvalidArgument("optimal-sweep needs --delta");
    const double d = *o.delta;
    std::vector<double> eps_grid = {0.3, 0.1, 0.03, 0.01};
    if (!o.grid.empty()) eps_grid = parse_grid(o.grid);
    for (double e : eps_grid)
        if (!(e > 0.0) || !(e < 1.0))
            throw orthospec::InvalidArgument(
                "optimal-sweep: eps grid must lie in (0,1)");
    const double rho_best = orthospec::rho_opt(d, quad_of(o));
    Table t;
    Options oo = o;
    oo.trimmer = "opt-eps";
    echo_common(t, oo, raw_trimmer(oo, d));
    {
        std::ostringstream eg;
        for (std::size_t i = 0; i < eps_grid.size(); ++i)
            eg << (i ? "," : "") << fmt_double(eps_grid[i]);
        t.header.emplace_back("eps-grid", eg.str());
    }
    t.columns = {"epsilon", "delta", "rho2_eps", "rho2_opt", "gap"};
    for (double e : eps_grid) {
        TrimmingFunction trim = orthospec::normalize_trimmer(
            orthospec::make_trimmer("opt-eps", d, e));
        const Model m(std::move(trim), d, quad_of(o));
        const double rho_eps = orthospec::predict(m).rho2_limit;
        t.rows.push_back({e, d, rho_eps, rho_best, rho_best - rho_eps});
    }
    emit(t, o.out, o.format);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"asymptotics and Monte-Carlo for spectral initialization "
                 "under sub-sampled unitary sensing"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config");

    Options o;
    app.add_option("--trimmer", o.trimmer,
                   "trimmer id (mm|lal|opt|opt-eps|const) or a .csv table");
    app.add_option("--eps", o.eps, "epsilon for opt-eps (or level for const)");
    auto* optd = app.add_option("--delta", o.delta, "sampling ratio m/n");
    auto* optdg =
        app.add_option("--delta-grid", o.delta_grid, "A:STEP:B or comma list");
    optd->excludes(optdg);
    app.add_option("--n", o.n, "signal dimension for simulation");
    app.add_option("--trials", o.trials, "Monte-Carlo trials");
    app.add_option("--seed", o.seed, "master seed");
    app.add_option("--grid", o.grid,
                   "x grid (bulk-density) or eps grid (optimal-sweep)");
    app.add_option("--out", o.out, "output path (default stdout)");
    app.add_option("--format", o.format, "csv|json")
        ->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--threads", o.threads, "worker threads for Monte-Carlo");
    app.add_flag("--random-xstar", o.random_xstar,
                 "draw a random signal instead of sqrt(n) e1");
    app.add_option("--dump", o.dump, "JSON-lines per-trial dump (simulate)");
    app.add_option("--quad-order", o.quad_order, "Gauss-Laguerre primary order");
    app.add_option("--quad-tol", o.quad_tol, "adaptive quadrature tolerance");

    app.add_subcommand("theory-curve", "asymptotic prediction over a delta grid");
    app.add_subcommand("simulate", "finite-n Monte-Carlo against the theory");
    app.add_subcommand("bulk-density", "density of the limiting bulk spectrum");
    app.add_subcommand("phase-transition", "critical sampling ratio delta_T");
    app.add_subcommand("optimal-sweep",
                       "optimality gap of opt-eps along an eps grid");

    try {
        app.parse(argc, argv);
        o.command = app.get_subcommands().front()->get_name();
        if (o.command == "theory-curve") return cmd_theory_curve(o);
        if (o.command == "simulate") return cmd_simulate(o);
        if (o.command == "bulk-density") return cmd_bulk_density(o);
        if (o.command == "phase-transition") return cmd_phase_transition(o);
        if (o.command == "optimal-sweep") return cmd_optimal_sweep(o);
        return kExitInput;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    } catch (const orthospec::NoTransition& e) {
        std::cerr << "no result: " << e.what() << "\n";
        return kExitNoResult;
    } catch (const orthospec::SolverError& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return kExitSolver;
    } catch (const orthospec::NoMinimum& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return kExitSolver;
    } catch (const orthospec::IntegrandError& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return kExitSolver;
    } catch (const orthospec::Error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    }
}
