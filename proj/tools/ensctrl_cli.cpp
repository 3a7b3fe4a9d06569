// Command-line front end: experiment configuration, orchestration and CSV
// emission. Subcommands: simulate, optimize, oracle, sweep-n, check-grad,
// residual, check.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ensctrl/csv.hpp"
#include "ensctrl/lq.hpp"
#include "ensctrl/rng.hpp"

namespace fs = std::filesystem;
using namespace ensctrl;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitCheckFailure = 4;

// ---------------------------------------------------------------------------
// INI-style config: [section] headers, key = value lines, ';' or '#' comments.

struct IniFile {
    // section -> key -> (value, line number)
    std::map<std::string, std::map<std::string, std::pair<std::string, int>>> data;

    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return "";
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

    static IniFile parse(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw validation_error("cannot open config file: " + path);
        IniFile ini;
        std::string line, section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto comment = line.find_first_of(";#");
            if (comment != std::string::npos) line = line.substr(0, comment);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']') {
                    throw validation_error("config line " + std::to_string(lineno) +
                                           ": malformed section header");
                }
                section = trim(line.substr(1, line.size() - 2));
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw validation_error("config line " + std::to_string(lineno) +
                                       ": expected key = value");
            }
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty()) {
                throw validation_error("config line " + std::to_string(lineno) +
                                       ": empty key");
            }
            ini.data[section][key] = {value, lineno};
        }
        return ini;
    }
};

// Tracks which keys were consumed so leftovers can be rejected.
class ConfigReader {
public:
    explicit ConfigReader(IniFile ini) : ini_(std::move(ini)) {}

    std::optional<std::string> raw(const std::string& section, const std::string& key) {
        auto sit = ini_.data.find(section);
        if (sit == ini_.data.end()) return std::nullopt;
        auto kit = sit->second.find(key);
        if (kit == sit->second.end()) return std::nullopt;
        consumed_.insert(section + "." + key);
        return kit->second.first;
    }

    std::string require(const std::string& section, const std::string& key) {
        auto v = raw(section, key);
        if (!v) {
            throw validation_error("missing required config key [" + section + "] " + key);
        }
        return *v;
    }

    double number(const std::string& section, const std::string& key, double fallback) {
        auto v = raw(section, key);
        return v ? parse_number(section, key, *v) : fallback;
    }

    double require_number(const std::string& section, const std::string& key) {
        return parse_number(section, key, require(section, key));
    }

    long integer(const std::string& section, const std::string& key, long fallback) {
        auto v = raw(section, key);
        if (!v) return fallback;
        const double d = parse_number(section, key, *v);
        if (d != std::floor(d)) {
            throw validation_error("[" + section + "] " + key + " must be an integer");
        }
        return static_cast<long>(d);
    }

    bool boolean(const std::string& section, const std::string& key, bool fallback) {
        auto v = raw(section, key);
        if (!v) return fallback;
        if (*v == "true" || *v == "1" || *v == "yes") return true;
        if (*v == "false" || *v == "0" || *v == "no") return false;
        throw validation_error("[" + section + "] " + key + " must be a boolean");
    }

    std::string text(const std::string& section, const std::string& key,
                     const std::string& fallback) {
        auto v = raw(section, key);
        return v ? *v : fallback;
    }

    void reject_unknown() const {
        for (const auto& [section, keys] : ini_.data) {
            for (const auto& [key, value] : keys) {
                if (!consumed_.contains(section + "." + key)) {
                    throw validation_error("unknown config key [" + section + "] " + key +
                                           " (line " + std::to_string(value.second) + ")");
                }
            }
        }
    }

private:
    double parse_number(const std::string& section, const std::string& key,
                        const std::string& value) {
        try {
            std::size_t pos = 0;
            const double d = std::stod(value, &pos);
            if (pos != value.size()) throw std::invalid_argument(value);
            return d;
        } catch (const std::exception&) {
            throw validation_error("[" + section + "] " + key + ": not a number: '" + value + "'");
        }
    }

    IniFile ini_;
    std::set<std::string> consumed_;
};

std::vector<double> parse_number_list(const std::string& text, const std::string& what) {
    std::vector<double> out;
    std::string field;
    std::istringstream in(text);
    while (std::getline(in, field, ',')) {
        field = IniFile::trim(field);
        if (field.empty()) continue;
        try {
            out.push_back(std::stod(field));
        } catch (const std::exception&) {
            throw validation_error(what + ": not a number: '" + field + "'");
        }
    }
    if (out.empty()) throw validation_error(what + ": empty list");
    return out;
}

// Rows separated by ';', entries by spaces or commas.
Eigen::MatrixXd parse_matrix(const std::string& text, const std::string& what) {
    std::vector<std::vector<double>> rows;
    std::string row_text;
    std::istringstream rows_in(text);
    while (std::getline(rows_in, row_text, ';')) {
        std::vector<double> row;
        std::string field;
        std::istringstream row_in(row_text);
        while (row_in >> field) {
            if (!field.empty() && field.back() == ',') field.pop_back();
            try {
                row.push_back(std::stod(field));
            } catch (const std::exception&) {
                throw validation_error(what + ": not a number: '" + field + "'");
            }
        }
        if (!row.empty()) rows.push_back(std::move(row));
    }
    if (rows.empty()) throw validation_error(what + ": empty matrix");
    Eigen::MatrixXd m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows.front().size()) {
            throw validation_error(what + ": ragged matrix rows");
        }
        for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
    }
    return m;
}

// ---------------------------------------------------------------------------

struct RunConfig {
    std::string problem_name = "linear2d";
    BuiltinOptions problem_opts;

    std::string measure_kind = "empirical"; // empirical | quantile | explicit-list
    int N = 300;
    std::uint64_t seed = 1;
    std::string measure_file;

    int M = 64;
    int S = 4;

    double beta = 1e-3;

    std::string method = "grad"; // grad | pmp
    OptimizerConfig opt;

    std::string out_dir = "out";
    bool full_grid = false;

    std::string control_file; // optional initial / evaluated control

    int validation_N = 20;
    std::uint64_t validation_seed = 0; // 0 -> seed + 1

    std::vector<int> sweep_N;
    int sweep_N_ref = 1000;

    std::string summary() const {
        std::ostringstream s;
        s << "problem=" << problem_name << " measure=" << measure_kind << " N=" << N
          << " seed=" << seed << " M=" << M << " S=" << S << " beta=" << format_double(beta)
          << " method=" << method << " gamma0=" << format_double(opt.gamma0)
          << " tau=" << format_double(opt.tau) << " c=" << format_double(opt.c)
          << " max_iter=" << opt.max_iter << " grad_tol=" << format_double(opt.grad_tol)
          << " correction=" << (opt.use_correction ? 1 : 0);
        return s.str();
    }
};

RunConfig load_config(const std::string& path) {
    ConfigReader cfg(IniFile::parse(path));
    RunConfig rc;

    rc.problem_name = cfg.text("problem", "name", rc.problem_name);
    if (rc.problem_name != "linear2d" && rc.problem_name != "generic-lti" &&
        rc.problem_name != "logistic1d") {
        throw validation_error("[problem] name must be linear2d, generic-lti or logistic1d");
    }
    if (auto y = cfg.raw("problem", "y_tar")) {
        const auto vals = parse_number_list(*y, "[problem] y_tar");
        if (vals.size() != 2) throw validation_error("[problem] y_tar needs 2 components");
        rc.problem_opts.y_tar << vals[0], vals[1];
    }
    rc.problem_opts.logistic_x0 = cfg.number("problem", "logistic_x0", 0.5);
    rc.problem_opts.logistic_target = cfg.number("problem", "logistic_target", 0.0);
    if (rc.problem_name == "generic-lti") {
        rc.problem_opts.lti_A0 = parse_matrix(cfg.require("problem", "A0"), "[problem] A0");
        rc.problem_opts.lti_B0 = parse_matrix(cfg.require("problem", "B0"), "[problem] B0");
        const int n = static_cast<int>(rc.problem_opts.lti_A0.rows());
        const int k = static_cast<int>(rc.problem_opts.lti_B0.cols());
        rc.problem_opts.lti_A1 = cfg.raw("problem", "A1")
            ? parse_matrix(*cfg.raw("problem", "A1"), "[problem] A1")
            : Eigen::MatrixXd::Zero(n, n);
        rc.problem_opts.lti_B1 = cfg.raw("problem", "B1")
            ? parse_matrix(*cfg.raw("problem", "B1"), "[problem] B1")
            : Eigen::MatrixXd::Zero(n, k);
        const auto x0 = parse_number_list(cfg.require("problem", "x0"), "[problem] x0");
        const auto y = parse_number_list(cfg.require("problem", "target"), "[problem] target");
        rc.problem_opts.lti_x0 = Eigen::Map<const Eigen::VectorXd>(x0.data(), x0.size());
        rc.problem_opts.lti_target = Eigen::Map<const Eigen::VectorXd>(y.data(), y.size());
    }

    rc.measure_kind = cfg.text("measure", "kind", rc.measure_kind);
    if (rc.measure_kind != "empirical" && rc.measure_kind != "quantile" &&
        rc.measure_kind != "explicit-list") {
        throw validation_error("[measure] kind must be empirical, quantile or explicit-list");
    }
    rc.N = static_cast<int>(cfg.integer("measure", "N", rc.N));
    if (rc.N < 1) throw validation_error("[measure] N must be >= 1");
    rc.seed = static_cast<std::uint64_t>(cfg.integer("measure", "seed", 1));
    rc.measure_file = cfg.text("measure", "file", "");
    if (rc.measure_kind == "explicit-list" && rc.measure_file.empty()) {
        throw validation_error("[measure] file is required for explicit-list measures");
    }

    rc.M = static_cast<int>(cfg.integer("discretization", "M", rc.M));
    rc.S = static_cast<int>(cfg.integer("discretization", "S", rc.S));
    if (rc.M < 1 || rc.S < 1) throw validation_error("[discretization] M and S must be >= 1");

    rc.beta = cfg.number("objective", "beta", rc.beta);
    if (!(rc.beta > 0.0)) throw validation_error("[objective] beta must be > 0");

    rc.method = cfg.text("algorithm", "method", rc.method);
    if (rc.method != "grad" && rc.method != "pmp") {
        throw validation_error("[algorithm] method must be grad or pmp");
    }
    rc.opt.gamma0 = cfg.number("algorithm", "gamma0", rc.opt.gamma0);
    rc.opt.tau = cfg.number("algorithm", "tau", rc.opt.tau);
    rc.opt.c = cfg.number("algorithm", "c", rc.opt.c);
    rc.opt.max_iter = static_cast<int>(cfg.integer("algorithm", "max_iter", rc.opt.max_iter));
    rc.opt.grad_tol = cfg.number("algorithm", "grad_tol", rc.opt.grad_tol);
    rc.opt.use_correction = cfg.boolean("algorithm", "correction", true);
    rc.opt.validate();

    rc.out_dir = cfg.text("output", "directory", rc.out_dir);
    rc.full_grid = cfg.boolean("output", "full_grid", false);

    rc.control_file = cfg.text("control", "file", "");

    rc.validation_N = static_cast<int>(cfg.integer("validation", "N", rc.validation_N));
    if (rc.validation_N < 1) throw validation_error("[validation] N must be >= 1");
    rc.validation_seed = static_cast<std::uint64_t>(
        cfg.integer("validation", "seed", static_cast<long>(rc.seed + 1)));

    if (auto list = cfg.raw("sweep", "N_list")) {
        for (double v : parse_number_list(*list, "[sweep] N_list")) {
            if (v < 1 || v != std::floor(v)) {
                throw validation_error("[sweep] N_list entries must be positive integers");
            }
            rc.sweep_N.push_back(static_cast<int>(v));
        }
    }
    // Default reference: the largest requested ensemble size.
    const long default_ref = rc.sweep_N.empty()
        ? 0
        : *std::max_element(rc.sweep_N.begin(), rc.sweep_N.end());
    rc.sweep_N_ref = static_cast<int>(cfg.integer("sweep", "N_ref", default_ref));
    if (!rc.sweep_N.empty() && rc.sweep_N_ref < 1) {
        throw validation_error("[sweep] N_ref must be >= 1");
    }

    cfg.reject_unknown();
    return rc;
}

DiscreteMeasure build_measure(const RunConfig& rc, int N, std::uint64_t seed) {
    if (rc.measure_kind == "quantile") return quantile_quadrature(Beta44Law{}, N);
    if (rc.measure_kind == "explicit-list") return read_measure_csv(rc.measure_file);
    return sample_empirical(Beta44Law{}, N, seed);
}

PiecewiseControl initial_control(const RunConfig& rc, int k) {
    if (!rc.control_file.empty()) {
        PiecewiseControl u = read_control_csv(rc.control_file, rc.S);
        if (u.grid().M != rc.M || u.k() != k) {
            throw validation_error("control file does not match M/k of the configuration");
        }
        return u;
    }
    return PiecewiseControl(TimeGrid(rc.M, rc.S), k);
}

fs::path ensure_out_dir(const RunConfig& rc) {
    fs::path dir(rc.out_dir);
    fs::create_directories(dir);
    return dir;
}

RunTrace run_optimizer(const RunConfig& rc, const EnsembleProblem& problem,
                       const DiscreteMeasure& measure, const PiecewiseControl& u0) {
    if (rc.method == "pmp") {
        return run_iterative_pmp(problem, measure, u0, rc.beta, rc.opt);
    }
    return run_projected_gradient(problem, measure, u0, rc.beta, rc.opt);
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_simulate(const RunConfig& rc) {
    const EnsembleProblem problem = builtin_problem(rc.problem_name, rc.problem_opts);
    const DiscreteMeasure measure = build_measure(rc, rc.N, rc.seed);
    const PiecewiseControl u = initial_control(rc, problem.k);
    const TrajectoryBundle traj = integrate_forward(problem, measure, u);
    const fs::path dir = ensure_out_dir(rc);
    write_trajectory_csv((dir / "trajectories.csv").string(), traj, rc.full_grid, rc.summary());
    write_measure_csv((dir / "measure.csv").string(), measure, rc.summary());
    std::cout << "wrote " << (dir / "trajectories.csv").string() << "\n";
    return 0;
}

int cmd_optimize(const RunConfig& rc) {
    const EnsembleProblem problem = builtin_problem(rc.problem_name, rc.problem_opts);
    const DiscreteMeasure measure = build_measure(rc, rc.N, rc.seed);
    const PiecewiseControl u0 = initial_control(rc, problem.k);
    const RunTrace trace = run_optimizer(rc, problem, measure, u0);

    const fs::path dir = ensure_out_dir(rc);
    const std::string comment = rc.summary();
    write_trace_csv((dir / "trace.csv").string(), trace, comment);
    write_control_csv((dir / "control.csv").string(), trace.final_control, comment);
    const TrajectoryBundle traj = integrate_forward(problem, measure, trace.final_control);
    write_trajectory_csv((dir / "trajectories.csv").string(), traj, rc.full_grid, comment);
    write_measure_csv((dir / "measure.csv").string(), measure, comment);

    // Validate the control on freshly sampled parameters.
    const DiscreteMeasure test_measure =
        sample_empirical(Beta44Law{}, rc.validation_N, rc.validation_seed);
    const TrajectoryBundle test_traj =
        integrate_forward(problem, test_measure, trace.final_control);
    double mean_err = 0.0;
    std::vector<double> errs(test_measure.size());
    for (int j = 0; j < test_measure.size(); ++j) {
        double err;
        if (problem.quadratic_terminal) {
            err = (test_traj.terminal_state(j) - problem.target(test_measure.theta(j))).norm();
        } else {
            err = problem.terminal_cost(test_traj.terminal_state(j), test_measure.theta(j));
        }
        errs[j] = err;
        mean_err += err / test_measure.size();
    }
    {
        std::ofstream out(dir / "validation.csv");
        out << "# " << comment << " validation_seed=" << rc.validation_seed
            << " mean_err=" << format_double(mean_err) << "\n";
        out << "j,theta,terminal_error\n";
        for (int j = 0; j < test_measure.size(); ++j) {
            out << j << "," << format_double(test_measure.theta(j)[0]) << ","
                << format_double(errs[j]) << "\n";
        }
    }

    std::cout << "final cost " << format_double(trace.final_cost.total)
              << " after " << trace.records.size() << " iterations; validation mean error "
              << format_double(mean_err) << "\n";
    return 0;
}

int cmd_oracle(const RunConfig& rc) {
    const EnsembleProblem problem = builtin_problem(rc.problem_name, rc.problem_opts);
    if (!problem.is_linear) {
        throw validation_error("oracle requires a linear problem");
    }
    const DiscreteMeasure measure = build_measure(rc, rc.N, rc.seed);
    const LqSolution sol = solve_lq(problem, measure, rc.M, rc.beta, rc.S);
    const fs::path dir = ensure_out_dir(rc);
    const std::string comment = rc.summary();
    write_control_csv((dir / "oracle_control.csv").string(), sol.u_opt, comment);
    {
        std::ofstream out(dir / "oracle.csv");
        out << "# " << comment << "\n";
        out << "cost_opt,gram_condition,normal_residual\n";
        out << format_double(sol.cost_opt) << "," << format_double(sol.gram_condition) << ","
            << format_double(sol.normal_residual) << "\n";
    }
    std::cout << "oracle cost " << format_double(sol.cost_opt) << " (condition "
              << format_double(sol.gram_condition) << ")\n";
    return 0;
}

int cmd_sweep_n(const RunConfig& rc) {
    if (rc.sweep_N.empty()) {
        throw validation_error("sweep-n requires [sweep] N_list");
    }
    const EnsembleProblem problem = builtin_problem(rc.problem_name, rc.problem_opts);
    const PiecewiseControl u0(TimeGrid(rc.M, rc.S), problem.k);

    const DiscreteMeasure ref_measure = build_measure(rc, rc.sweep_N_ref, rc.seed);
    const RunTrace ref = run_optimizer(rc, problem, ref_measure, u0);

    const fs::path dir = ensure_out_dir(rc);
    std::ofstream out(dir / "sweep.csv");
    out << "# " << rc.summary() << " N_ref=" << rc.sweep_N_ref << "\n";
    out << "N,err,cost\n";
    for (int N : rc.sweep_N) {
        const DiscreteMeasure measure = build_measure(rc, N, rc.seed);
        const RunTrace trace = run_optimizer(rc, problem, measure, u0);
        const double err = axpy(-1.0, ref.final_control, trace.final_control).l2_norm();
        out << N << "," << format_double(err) << "," << format_double(trace.final_cost.total)
            << "\n";
        std::cout << "N=" << N << " err=" << format_double(err) << "\n";
    }
    return 0;
}

int cmd_check_grad(const RunConfig& rc, double tol, bool quiet = false) {
    const EnsembleProblem problem = builtin_problem(rc.problem_name, rc.problem_opts);
    const DiscreteMeasure measure = build_measure(rc, rc.N, rc.seed);

    // Seeded random control so the check probes a generic point.
    PiecewiseControl u(TimeGrid(rc.M, rc.S), problem.k);
    Rng rng(rc.seed ^ 0x9e3779b97f4a7c15ULL);
    for (int l = 0; l < rc.M; ++l) {
        for (int i = 0; i < problem.k; ++i) {
            u.values()(l, i) = 2.0 * rng.uniform() - 1.0;
        }
    }

    const TrajectoryBundle traj = integrate_forward(problem, measure, u);
    const AdjointBundle adj = integrate_adjoint(problem, measure, u, traj);
    const GradientReport grad = assemble_gradient(problem, measure, u, rc.beta, traj, adj);
    const PiecewiseControl fd = fd_gradient(problem, measure, u, rc.beta, 1e-6);

    const double denom = std::max(fd.l2_norm(), 1e-300);
    const double rel_l2 = axpy(-1.0, grad.delta_u, fd).l2_norm() / denom;
    const Eigen::MatrixXd diff = (grad.delta_u.values() - fd.values()).cwiseAbs();
    const double max_rel = diff.maxCoeff() / std::max(fd.values().cwiseAbs().maxCoeff(), 1e-300);
    const double mean_rel = diff.mean() / std::max(fd.values().cwiseAbs().mean(), 1e-300);

    if (!quiet) {
        std::cout << "gradient check: rel_l2=" << format_double(rel_l2)
                  << " max_rel=" << format_double(max_rel)
                  << " mean_rel=" << format_double(mean_rel) << " tol=" << format_double(tol)
                  << "\n";
    }
    return rel_l2 <= tol ? 0 : kExitCheckFailure;
}

int cmd_residual(const RunConfig& rc) {
    const EnsembleProblem problem = builtin_problem(rc.problem_name, rc.problem_opts);
    const DiscreteMeasure measure = build_measure(rc, rc.N, rc.seed);
    const PiecewiseControl u = initial_control(rc, problem.k);
    const double res = pmp_residual(problem, measure, u, rc.beta);
    std::cout << "pmp residual " << format_double(res) << "\n";
    return 0;
}

int cmd_check(const RunConfig& rc) {
    const EnsembleProblem problem = builtin_problem(rc.problem_name, rc.problem_opts);
    const DiscreteMeasure measure = build_measure(rc, rc.N, rc.seed);
    bool ok = true;
    auto report = [&](const std::string& name, bool pass, const std::string& detail) {
        std::cout << (pass ? "PASS  " : "FAIL  ") << name << "  " << detail << "\n";
        if (!pass) ok = false;
    };

    // Gradient vs finite differences.
    {
        RunConfig grc = rc;
        grc.M = std::min(rc.M, 16);
        grc.N = std::min(rc.N, 5);
        const double tol = rc.problem_name == "linear2d" ? 1e-4 : 5e-4;
        const int rcode = cmd_check_grad(grc, tol, /*quiet=*/true);
        report("gradient-oracle", rcode == 0, "fd comparison at M=" + std::to_string(grc.M));
    }

    // Short optimizer run decreases the cost and keeps the PMP residual sane.
    {
        RunConfig orc = rc;
        orc.opt.max_iter = std::min(rc.opt.max_iter, 50);
        const PiecewiseControl u0(TimeGrid(rc.M, rc.S), problem.k);
        const RunTrace trace = run_optimizer(orc, problem, measure, u0);
        bool monotone = true;
        double prev = std::numeric_limits<double>::infinity();
        for (const auto& rec : trace.records) {
            if (rec.accepted) {
                if (rec.cost > prev) monotone = false;
                prev = rec.cost;
            }
        }
        report("cost-decay", monotone && trace.final_cost.total <= trace.records.front().cost,
               "final cost " + format_double(trace.final_cost.total));
    }

    // Controllability of the sampled sub-ensemble (informational on
    // deficiency: duplicated atoms legitimately lose rank).
    if (problem.is_linear) {
        const int expect = problem.n * measure.size();
        const int rank = kalman_rank(measure, problem);
        std::cout << (rank == expect ? "PASS  " : "INFO  ") << "kalman-rank  rank "
                  << rank << " of " << expect << "\n";

        const LqSolution sol = solve_lq(problem, measure, rc.M, rc.beta, rc.S);
        const CostReport at_opt = endpoint_cost(problem, measure, sol.u_opt, rc.beta);
        const double rel = std::abs(at_opt.total - sol.cost_opt) /
                           std::max(1.0, std::abs(sol.cost_opt));
        report("oracle-consistency", rel <= 1e-6,
               "integrator vs oracle cost rel err " + format_double(rel));
    }

    return ok ? 0 : kExitCheckFailure;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ensemble optimal control of parametrized affine systems"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir_override;
    std::string method_override;
    bool full_grid_flag = false;
    bool no_correction = false;
    std::optional<std::uint64_t> seed_override;
    double grad_check_tol = 1e-4;

    auto add_common = [&](CLI::App* sub, bool needs_config = true) {
        auto* opt = sub->add_option("--config", config_path, "INI configuration file");
        if (needs_config) opt->required();
        sub->add_option("--out", out_dir_override, "output directory override");
        sub->add_flag("--full-grid", full_grid_flag, "emit every substep node");
        sub->add_option("--seed", seed_override, "measure seed override");
        sub->add_option("--method", method_override, "optimizer: grad or pmp");
        sub->add_flag("--no-correction", no_correction, "disable the PMP covector correction");
    };

    auto* simulate = app.add_subcommand("simulate", "integrate the ensemble forward");
    auto* optimize = app.add_subcommand("optimize", "run the configured optimizer");
    auto* oracle = app.add_subcommand("oracle", "exact linear-quadratic solution");
    auto* sweep = app.add_subcommand("sweep-n", "minimizer stability across ensemble sizes");
    auto* check_grad = app.add_subcommand("check-grad", "gradient vs finite differences");
    auto* residual = app.add_subcommand("residual", "PMP residual of a control");
    auto* check = app.add_subcommand("check", "full diagnostic suite");
    for (auto* sub : {simulate, optimize, oracle, sweep, check_grad, residual, check}) {
        add_common(sub);
    }
    check_grad->add_option("--tol", grad_check_tol, "relative L2 failure threshold");

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig rc = load_config(config_path);
        if (!out_dir_override.empty()) rc.out_dir = out_dir_override;
        if (full_grid_flag) rc.full_grid = true;
        if (seed_override) rc.seed = *seed_override;
        if (!method_override.empty()) {
            if (method_override != "grad" && method_override != "pmp") {
                throw validation_error("--method must be grad or pmp");
            }
            rc.method = method_override;
        }
        if (no_correction) rc.opt.use_correction = false;

        if (simulate->parsed()) return cmd_simulate(rc);
        if (optimize->parsed()) return cmd_optimize(rc);
        if (oracle->parsed()) return cmd_oracle(rc);
        if (sweep->parsed()) return cmd_sweep_n(rc);
        if (check_grad->parsed()) return cmd_check_grad(rc, grad_check_tol);
        if (residual->parsed()) return cmd_residual(rc);
        if (check->parsed()) return cmd_check(rc);
    } catch (const divergence_error& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return kExitDivergence;
    } catch (const validation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return 0;
}
