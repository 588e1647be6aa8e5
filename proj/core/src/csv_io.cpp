#include "nvicore/csv_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "nvicore/errors.hpp"

namespace nvi {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        // trim whitespace and a trailing CR
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

double parse_double(const std::string& cell, std::size_t line_no, const std::string& column) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(cell, &pos);
        if (pos != cell.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw DataError("line " + std::to_string(line_no) + ": cannot parse '" + cell +
                        "' in column " + column);
    }
}

} // namespace

TimeSeries read_signal_csv(const std::string& path, const std::string& channel) {
    std::ifstream f(path);
    if (!f) throw DataError("read_signal_csv: cannot open " + path);

    std::string line;
    if (!std::getline(f, line)) throw DataError("read_signal_csv: " + path + " is empty");
    const auto header = split_line(line);
    if (header.size() < 2 || header[0] != "t_s") {
        throw DataError("read_signal_csv: header must start with t_s, got '" + line + "'");
    }
    std::size_t col = 1;
    if (!channel.empty()) {
        const auto it = std::find(header.begin(), header.end(), channel);
        if (it == header.end()) {
            throw DataError("read_signal_csv: no column named '" + channel + "'");
        }
        col = static_cast<std::size_t>(it - header.begin());
    }

    std::vector<double> times, values;
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split_line(line);
        if (cells.size() != header.size()) {
            throw DataError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " cells, got " +
                            std::to_string(cells.size()));
        }
        times.push_back(parse_double(cells[0], line_no, "t_s"));
        values.push_back(parse_double(cells[col], line_no, header[col]));
    }
    if (times.size() < 2) throw DataError("read_signal_csv: need >= 2 samples");

    std::vector<double> steps(times.size() - 1);
    for (std::size_t i = 0; i + 1 < times.size(); ++i) {
        steps[i] = times[i + 1] - times[i];
        if (steps[i] <= 0.0) {
            throw DataError("line " + std::to_string(i + 3) + ": t_s must be increasing");
        }
    }
    std::vector<double> sorted = steps;
    std::sort(sorted.begin(), sorted.end());
    const double median_dt = sorted[sorted.size() / 2];
    for (std::size_t i = 0; i < steps.size(); ++i) {
        if (std::fabs(steps[i] - median_dt) > 0.01 * median_dt) {
            throw DataError("line " + std::to_string(i + 3) + ": sample step " +
                            std::to_string(steps[i]) + " deviates more than 1 % from the median " +
                            std::to_string(median_dt));
        }
    }

    TimeSeries ts;
    ts.fs = 1.0 / median_dt;
    ts.t0 = times.front();
    ts.label = header[col];
    ts.samples = std::move(values);
    ts.validate();
    return ts;
}

void write_signal_csv(const std::string& path, const TimeSeries& ts) {
    ts.validate();
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("write_signal_csv: cannot open " + path);
    f << "t_s," << (ts.label.empty() ? "value" : ts.label) << "\n";
    f.precision(12);
    for (std::size_t i = 0; i < ts.samples.size(); ++i) {
        f << ts.time_at(i) << "," << ts.samples[i] << "\n";
    }
}

std::vector<ModalityRow> read_modality_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("read_modality_csv: cannot open " + path);

    std::string line;
    if (!std::getline(f, line)) throw DataError("read_modality_csv: " + path + " is empty");
    const auto header = split_line(line);
    const std::vector<std::string> wanted = {"spo2_pct", "rmssd_ms", "pi", "phase_left_deg",
                                             "phase_right_deg"};
    std::vector<std::ptrdiff_t> col(wanted.size(), -1);
    for (std::size_t w = 0; w < wanted.size(); ++w) {
        const auto it = std::find(header.begin(), header.end(), wanted[w]);
        if (it != header.end()) col[w] = it - header.begin();
    }
    if (std::all_of(col.begin(), col.end(), [](std::ptrdiff_t c) { return c < 0; })) {
        throw DataError("read_modality_csv: no modality columns found in " + path);
    }

    std::vector<ModalityRow> rows;
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        ModalityRow row;
        row.line = line_no;
        const auto cells = split_line(line);
        try {
            if (cells.size() != header.size()) {
                throw DataError("expected " + std::to_string(header.size()) + " cells, got " +
                                std::to_string(cells.size()));
            }
            auto fetch = [&](std::size_t w) -> std::optional<double> {
                if (col[w] < 0) return std::nullopt;
                const std::string& cell = cells[static_cast<std::size_t>(col[w])];
                if (cell.empty()) return std::nullopt;
                return parse_double(cell, line_no, wanted[w]);
            };
            row.inputs.spo2_pct = fetch(0);
            row.inputs.rmssd_ms = fetch(1);
            row.inputs.pi = fetch(2);
            row.inputs.phase_left_deg = fetch(3);
            row.inputs.phase_right_deg = fetch(4);
            row.ok = true;
        } catch (const Error& e) {
            row.ok = false;
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_feature_matrix_csv(const std::string& path,
                              const std::vector<std::string>& feature_names,
                              const std::vector<FeatureRecord>& records) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("write_feature_matrix_csv: cannot open " + path);
    f << "record_id";
    for (const auto& name : feature_names) f << "," << name;
    f << "\n";
    f.precision(12);
    for (const auto& rec : records) {
        f << rec.record_id;
        for (const auto& name : feature_names) {
            f << ",";
            bool found = false;
            for (const auto& [n, v] : rec.features.items()) {
                if (n == name) {
                    if (std::isfinite(v)) f << v;
                    found = true;
                    break;
                }
            }
            (void)found;
        }
        f << "\n";
    }
}

std::size_t CsvTable::column_index(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw DataError("csv table: no column named '" + name + "'");
    return static_cast<std::size_t>(it - columns.begin());
}

CsvTable read_csv_table(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("read_csv_table: cannot open " + path);
    std::string line;
    if (!std::getline(f, line)) throw DataError("read_csv_table: " + path + " is empty");
    CsvTable table;
    table.columns = split_line(line);
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split_line(line);
        if (cells.size() != table.columns.size()) {
            throw DataError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(table.columns.size()) + " cells, got " +
                            std::to_string(cells.size()));
        }
        std::vector<double> row(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (cells[i].empty()) {
                row[i] = std::numeric_limits<double>::quiet_NaN();
                continue;
            }
            try {
                std::size_t pos = 0;
                row[i] = std::stod(cells[i], &pos);
                if (pos != cells[i].size()) row[i] = std::numeric_limits<double>::quiet_NaN();
            } catch (const std::exception&) {
                row[i] = std::numeric_limits<double>::quiet_NaN();
            }
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

} // namespace nvi
