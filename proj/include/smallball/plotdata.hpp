#pragma once

#include <string>
#include <vector>

#include "smallball/experiments.hpp"

namespace smallball {

// Figure tables share the columns x, y, y_lo, y_hi, series. Rows are grouped by series
// with x increasing; intervals are +-1.96 standard errors unless the source table carries
// its own bounds.
Table plot_sbf_vs_eps(const std::vector<const Table*>& sbf, const std::vector<const Table*>& gauge);
Table plot_distortion_vs_r(const Table& quantize);
Table plot_series_ratio(const Table& series);
Table plot_scaled_vs_eps(const Table& scaled);

// Reads manifest.json and the result tables in out_dir and writes plot_*.csv next to
// them. Returns the written file names.
std::vector<std::string> emit_plotdata(const std::string& out_dir);

}  // namespace smallball
