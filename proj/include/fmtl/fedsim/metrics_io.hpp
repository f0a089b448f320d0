#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "fmtl/fedsim/simulator.hpp"

namespace fmtl {

// Shortest decimal form that round-trips the double ("nan"/"inf" spelled out).
std::string format_double(double v);

std::string metrics_csv_header();
// One row per client followed by a "mean" row.
void write_metrics_rows(std::ostream& out, const MetricsRecord& r);
std::string metrics_csv(const std::vector<MetricsRecord>& records);

}  // namespace fmtl
