#include "fmtl/fedsim/metrics_io.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace fmtl {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string metrics_csv_header() { return "round,client,metric,loss,grad_norm_sq,consensus\n"; }

void write_metrics_rows(std::ostream& out, const MetricsRecord& r) {
  const std::string tail = "," + format_double(r.grad_norm_sq) + "," + format_double(r.consensus) + "\n";
  for (std::size_t k = 0; k < r.client_metric.size(); ++k) {
    out << r.round << ',' << k << ',' << format_double(r.client_metric[k]) << ',' << format_double(r.client_loss[k])
        << tail;
  }
  out << r.round << ",mean," << format_double(r.mean_metric) << ',' << format_double(r.mean_loss) << tail;
}

std::string metrics_csv(const std::vector<MetricsRecord>& records) {
  std::ostringstream os;
  os << metrics_csv_header();
  for (const auto& r : records) write_metrics_rows(os, r);
  return os.str();
}

}  // namespace fmtl
