#ifndef ENSCTRL_CSV_HPP
#define ENSCTRL_CSV_HPP

#include <string>

#include "ensctrl/integrate.hpp"
#include "ensctrl/optimize.hpp"

namespace ensctrl {

// All writers emit `# <comment>` as the first line when a comment is
// given (used by the CLI to record the resolved configuration), and
// format doubles with enough digits to round-trip exactly.

std::string format_double(double v);

void write_control_csv(const std::string& path, const PiecewiseControl& u,
                       const std::string& comment = "");
PiecewiseControl read_control_csv(const std::string& path, int S);

void write_measure_csv(const std::string& path, const DiscreteMeasure& m,
                       const std::string& comment = "");
DiscreteMeasure read_measure_csv(const std::string& path);

void write_trajectory_csv(const std::string& path, const TrajectoryBundle& bundle,
                          bool full_grid, const std::string& comment = "");
void write_adjoint_csv(const std::string& path, const AdjointBundle& bundle,
                       bool full_grid, const std::string& comment = "");

void write_trace_csv(const std::string& path, const RunTrace& trace,
                     const std::string& comment = "");

void write_cost_csv(const std::string& path, const CostReport& report,
                    const std::string& comment = "",
                    const std::string& per_member_path = "");

} // namespace ensctrl

#endif
