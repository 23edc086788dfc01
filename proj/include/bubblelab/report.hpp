#pragma once

#include <string>

#include "bubblelab/concentration.hpp"

namespace bubblelab {

inline constexpr const char* kReportSchema = "bubble-lab/1";

/// JSON document with sigma_points, theta, n_hat, ratios, necks and
/// tolerances (plus per-point detail), two-space indented.
std::string report_json(const DefectReport& report);

/// Writes report.json, sigma.csv, inventory.csv and necks.csv into dir.
void write_report(const std::string& dir, const DefectReport& report);

}  // namespace bubblelab
