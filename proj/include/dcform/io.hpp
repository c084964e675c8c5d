#pragma once

// CSV emission for sweeps and traces. All numeric output uses 9 significant
// digits; files are written whole-file atomically (temp + rename).

#include "dcform/analysis.hpp"
#include "dcform/simgrid.hpp"

#include <cstdio>
#include <filesystem>
#include <limits>
#include <fstream>
#include <sstream>
#include <string>

namespace dcform {

/// Problem with user-supplied input (malformed file, bad CSV); maps to CLI
/// exit code 2.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::string format_g9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

inline std::string index_curve_csv(const IndexCurve& curve) {
    std::ostringstream out;
    out << "omega_rad_s,mag_abs,mag_db,phase_deg,label\n";
    for (const auto& s : curve.samples) {
        const double mag = std::abs(s.value);
        const double db = 20.0 * std::log10(std::max(mag, 1e-300));
        const double ph = std::arg(s.value) * 180.0 / std::numbers::pi;
        out << format_g9(s.omega) << ',' << format_g9(mag) << ',' << format_g9(db) << ','
            << format_g9(ph) << ',' << label_name(s.label) << '\n';
    }
    return out.str();
}

inline std::string trace_csv(const Trace& trace) {
    std::ostringstream out;
    for (std::size_t i = 0; i < trace.columns.size(); ++i)
        out << trace.columns[i] << (i + 1 < trace.columns.size() ? ',' : '\n');
    for (const auto& row : trace.rows)
        for (std::size_t i = 0; i < row.size(); ++i)
            out << format_g9(row[i]) << (i + 1 < row.size() ? ',' : '\n');
    return out.str();
}

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;         // numeric cells (NaN for text)
    std::vector<std::vector<std::string>> text;    // raw cells
};

inline CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    CsvTable t;
    std::string line;
    if (!std::getline(in, line) || line.empty()) throw InputError("empty CSV: " + path.string());
    std::stringstream hdr(line);
    std::string cell;
    while (std::getline(hdr, cell, ',')) t.columns.push_back(cell);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::vector<double> nums;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) {
            cells.push_back(cell);
            try {
                std::size_t pos = 0;
                double v = std::stod(cell, &pos);
                nums.push_back(pos == cell.size() ? v : std::numeric_limits<double>::quiet_NaN());
            } catch (...) {
                nums.push_back(std::numeric_limits<double>::quiet_NaN());
            }
        }
        if (cells.size() != t.columns.size())
            throw InputError("ragged CSV row in " + path.string());
        t.rows.push_back(std::move(nums));
        t.text.push_back(std::move(cells));
    }
    if (t.rows.empty()) throw InputError("CSV has no data rows: " + path.string());
    return t;
}

}  // namespace dcform
