#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nvicore/morphology.hpp"
#include "nvicore/nvi_score.hpp"
#include "nvicore/time_series.hpp"

namespace nvi {

// Signal CSV: header `t_s,<channel>[,...]`, one sample per row, strictly
// increasing t_s. The rate is the inverse median step; every step must be
// within 1 % of the median. Malformed rows raise DataError with the line
// number. An empty channel name selects the first value column.
TimeSeries read_signal_csv(const std::string& path, const std::string& channel = "");

void write_signal_csv(const std::string& path, const TimeSeries& ts);

// One row of the modality-input CSV (columns spo2_pct, rmssd_ms, pi,
// phase_left_deg, phase_right_deg; empty cell = absent). Rows that fail to
// parse carry the error instead of aborting the file.
struct ModalityRow {
    std::size_t line = 0;
    bool ok = false;
    ModalityInputs inputs;
    std::string error;
};

std::vector<ModalityRow> read_modality_csv(const std::string& path);

// Feature matrix CSV: first column record_id, then one column per feature
// in registry order; missing values are empty cells.
struct FeatureRecord {
    std::string record_id;
    FeatureVector features;
};

void write_feature_matrix_csv(const std::string& path,
                              const std::vector<std::string>& feature_names,
                              const std::vector<FeatureRecord>& records);

// Generic numeric table: header + rows, non-numeric/empty cells as NaN.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::size_t column_index(const std::string& name) const;  // throws DataError
};

CsvTable read_csv_table(const std::string& path);

} // namespace nvi
