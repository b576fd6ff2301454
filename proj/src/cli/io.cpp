#include "cli/io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fracflow/error.hpp"
#include "fracflow/initial_data.hpp"

namespace fracflow::cli {

void write_trace_header(std::ostream& os) { os << kTraceHeader << '\n'; }

void write_trace_row(std::ostream& os, const TraceRow<double>& row) {
    const auto& r = row.report;
    os << format_number(row.t) << ',' << format_number(row.dt) << ',' << format_number(r.l2) << ','
       << format_number(r.lp_p) << ',' << format_number(r.seminorm_p) << ',' << format_number(r.log_int) << ','
       << format_number(r.energy) << ',' << format_number(r.nehari) << ',' << format_number(row.dissipation) << '\n';
}

void write_trace(const std::string& path, const std::vector<TraceRow<double>>& rows) {
    std::ofstream os(path);
    if (!os) throw Error(ErrorKind::ConfigError, "cannot write '" + path + "'");
    write_trace_header(os);
    for (const auto& row : rows) write_trace_row(os, row);
}

Vector<double> read_profile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::ConfigError, "cannot open initial data file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    for (char& c : text)
        if (c == ',') c = ' ';
    std::istringstream tokens(text);
    std::vector<double> values;
    std::string tok;
    while (tokens >> tok) {
        std::size_t used = 0;
        double x = 0;
        try {
            x = std::stod(tok, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != tok.size())
            throw Error(ErrorKind::ConfigError, path + ": value " + std::to_string(values.size() + 1) +
                                                    " is not a number: '" + tok + "'");
        values.push_back(x);
    }
    return Eigen::Map<const Vector<double>>(values.data(), static_cast<Eigen::Index>(values.size()));
}

Vector<double> make_initial_data(const Grid<double>& grid, const InitialCondition& ic) {
    const auto& m = grid.params();
    Vector<double> u;
    if (ic.kind == "bump") {
        const double c = ic.center.value_or((m.a + m.b) / 2);
        const double hw = ic.half_width.value_or(std::min(c - m.a, m.b - c));
        if (!(hw > 0.0)) throw Error(ErrorKind::ConfigError, "bump support lies outside the domain");
        u = bump_profile(grid, c, hw);
    } else if (ic.kind == "sine") {
        u = sine_mode(grid, ic.mode);
    } else if (ic.kind == "random") {
        u = smoothed_random_field(grid, ic.seed, ic.passes);
    } else if (ic.kind == "file") {
        u = read_profile(ic.path);
        if (u.size() != grid.size())
            throw Error(ErrorKind::ConfigError, ic.path + ": expected " + std::to_string(grid.size()) +
                                                    " values, found " + std::to_string(u.size()));
    } else {
        throw Error(ErrorKind::ConfigError, "unknown ic.kind '" + ic.kind + "'");
    }
    return ic.amplitude * u;
}

void write_key_values(std::ostream& os, const KeyValues& kv) {
    for (const auto& [k, v] : kv) os << k << '=' << v << '\n';
}

void write_key_values(const std::string& path, const KeyValues& kv) {
    std::ofstream os(path);
    if (!os) throw Error(ErrorKind::ConfigError, "cannot write '" + path + "'");
    write_key_values(os, kv);
}

std::string output_path(const std::string& dir, const std::string& name) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::ConfigError, "cannot create output directory '" + dir + "': " + ec.message());
    return (std::filesystem::path(dir) / name).string();
}

} // namespace fracflow::cli
