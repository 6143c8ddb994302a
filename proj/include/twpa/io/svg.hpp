#pragma once

#include <string>

#include "twpa/io/csv.hpp"

namespace twpa::io {

/// Line chart of every numeric column against the first one. Non-numeric
/// columns are skipped; with a `quantity` column one series is drawn per
/// distinct quantity. Output is deterministic (no timestamps).
std::string line_chart_svg(const CsvTable& table, const std::string& title);

void write_svg(const std::string& path, const CsvTable& table, const std::string& title);

}  // namespace twpa::io
