#pragma once

#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "cli/config.hpp"
#include "fracflow/flow.hpp"
#include "fracflow/grid.hpp"

namespace fracflow::cli {

inline constexpr const char* kTraceHeader = "t,dt,l2,lp_p,seminorm_p,log_int,energy,nehari,dissipation";

void write_trace_header(std::ostream& os);
void write_trace_row(std::ostream& os, const TraceRow<double>& row);
void write_trace(const std::string& path, const std::vector<TraceRow<double>>& rows);

/// Whitespace- or comma-separated cell values.
Vector<double> read_profile(const std::string& path);

/// u0 = amplitude · profile(kind).
Vector<double> make_initial_data(const Grid<double>& grid, const InitialCondition& ic);

using KeyValues = std::vector<std::pair<std::string, std::string>>;

void write_key_values(std::ostream& os, const KeyValues& kv);
void write_key_values(const std::string& path, const KeyValues& kv);

/// `dir/name`, creating `dir` when missing.
std::string output_path(const std::string& dir, const std::string& name);

} // namespace fracflow::cli
