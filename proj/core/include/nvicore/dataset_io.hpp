#pragma once

#include <string>

#include "nvicore/synth.hpp"

namespace nvi {

// Dataset directory: manifest.json plus one binary matrix file per window
// (win_000000.bin ...). The manifest carries n, fs, duration_s, seed,
// split indices, class balance and noise settings; it holds no timestamp so
// identical runs produce byte-identical directories.
void save_dataset(const std::string& dir, const Dataset& dataset);

Dataset load_dataset(const std::string& dir);

// Window CSV export: header channel,t_index,value rows plus label/target.
void export_window_csv(const std::string& path, const LabeledWindow& window, double fs);

} // namespace nvi
