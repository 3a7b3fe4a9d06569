#include "ensctrl/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ensctrl {

namespace {

std::ofstream open_out(const std::string& path, const std::string& comment) {
    std::ofstream out(path);
    if (!out) throw validation_error("cannot open for writing: " + path);
    if (!comment.empty()) out << "# " << comment << "\n";
    return out;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, sep)) out.push_back(field);
    return out;
}

double parse_double(const std::string& s) {
    try {
        return std::stod(s);
    } catch (const std::exception&) {
        throw validation_error("malformed number in CSV: '" + s + "'");
    }
}

} // namespace

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_control_csv(const std::string& path, const PiecewiseControl& u,
                       const std::string& comment) {
    auto out = open_out(path, comment);
    out << "t";
    for (int i = 1; i <= u.k(); ++i) out << ",u" << i;
    out << "\n";
    for (int l = 0; l < u.grid().M; ++l) {
        out << format_double(static_cast<double>(l) / u.grid().M);
        for (int i = 0; i < u.k(); ++i) out << "," << format_double(u.values()(l, i));
        out << "\n";
    }
}

PiecewiseControl read_control_csv(const std::string& path, int S) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open control CSV: " + path);
    std::string line;
    std::vector<std::vector<double>> rows;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) { // `t,u1,...`
            header_seen = true;
            continue;
        }
        const auto fields = split(line, ',');
        if (fields.size() < 2) throw validation_error("control CSV row too short");
        std::vector<double> row;
        for (std::size_t i = 1; i < fields.size(); ++i) row.push_back(parse_double(fields[i]));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw validation_error("control CSV has no data rows");
    const int M = static_cast<int>(rows.size());
    const int k = static_cast<int>(rows.front().size());
    Eigen::MatrixXd values(M, k);
    for (int l = 0; l < M; ++l) {
        if (static_cast<int>(rows[l].size()) != k) {
            throw validation_error("control CSV rows have inconsistent widths");
        }
        for (int i = 0; i < k; ++i) values(l, i) = rows[l][i];
    }
    return PiecewiseControl(TimeGrid(M, S), std::move(values));
}

void write_measure_csv(const std::string& path, const DiscreteMeasure& m,
                       const std::string& comment) {
    auto out = open_out(path, comment);
    out << "theta,alpha\n";
    for (int j = 0; j < m.size(); ++j) {
        for (int i = 0; i < m.dim(); ++i) {
            out << format_double(m.theta(j)[i]) << ",";
        }
        out << format_double(m.alpha(j)) << "\n";
    }
}

DiscreteMeasure read_measure_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open measure CSV: " + path);
    std::string line;
    std::vector<Eigen::VectorXd> thetas;
    std::vector<double> alphas;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        const auto fields = split(line, ',');
        if (fields.size() < 2) throw validation_error("measure CSV row too short");
        Eigen::VectorXd theta(fields.size() - 1);
        for (std::size_t i = 0; i + 1 < fields.size(); ++i) theta[i] = parse_double(fields[i]);
        thetas.push_back(std::move(theta));
        alphas.push_back(parse_double(fields.back()));
    }
    return DiscreteMeasure(std::move(thetas), std::move(alphas));
}

namespace {

void write_bundle(const std::string& path, const TimeGrid& grid,
                  const std::vector<Eigen::VectorXd>& thetas,
                  const std::vector<Eigen::MatrixXd>& arrays, const char* prefix,
                  bool full_grid, const std::string& comment) {
    std::ofstream out = open_out(path, comment);
    const int n = static_cast<int>(arrays.front().cols());
    out << "j,theta,t";
    for (int i = 1; i <= n; ++i) out << "," << prefix << i;
    out << "\n";
    const int stride = full_grid ? 1 : grid.S;
    for (std::size_t j = 0; j < arrays.size(); ++j) {
        for (int m = 0; m <= grid.num_substeps(); m += stride) {
            out << j << "," << format_double(thetas[j][0]) << ","
                << format_double(grid.node_time(m));
            for (int i = 0; i < n; ++i) out << "," << format_double(arrays[j](m, i));
            out << "\n";
        }
    }
}

} // namespace

void write_trajectory_csv(const std::string& path, const TrajectoryBundle& bundle,
                          bool full_grid, const std::string& comment) {
    write_bundle(path, bundle.grid, bundle.thetas, bundle.states, "x", full_grid, comment);
}

void write_adjoint_csv(const std::string& path, const AdjointBundle& bundle,
                       bool full_grid, const std::string& comment) {
    write_bundle(path, bundle.grid, bundle.thetas, bundle.costates, "l", full_grid, comment);
}

void write_trace_csv(const std::string& path, const RunTrace& trace,
                     const std::string& comment) {
    auto out = open_out(path, comment);
    out << "iter,cost,integral,reg,gamma,accepted,grad_norm\n";
    for (const auto& rec : trace.records) {
        out << rec.iter << "," << format_double(rec.cost) << ","
            << format_double(rec.integral_term) << "," << format_double(rec.reg_term) << ","
            << format_double(rec.gamma) << "," << (rec.accepted ? 1 : 0) << ","
            << format_double(rec.grad_norm) << "\n";
    }
}

void write_cost_csv(const std::string& path, const CostReport& report,
                    const std::string& comment, const std::string& per_member_path) {
    auto out = open_out(path, comment);
    out << "total,integral,reg\n";
    out << format_double(report.total) << "," << format_double(report.integral_term) << ","
        << format_double(report.reg_term) << "\n";
    if (!per_member_path.empty()) {
        auto pm = open_out(per_member_path, comment);
        pm << "j,term\n";
        for (std::size_t j = 0; j < report.per_member.size(); ++j) {
            pm << j << "," << format_double(report.per_member[j]) << "\n";
        }
    }
}

} // namespace ensctrl
