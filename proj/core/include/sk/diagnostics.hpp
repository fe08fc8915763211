#pragma once

#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "sk/trace.hpp"

namespace sk {

struct RateFit {
  double rho = 0.0;        // exp of the least-squares slope of log value vs n
  double intercept = 0.0;  // multiplicative: fitted value ~ intercept * rho^n
  double residual = 0.0;   // RMS misfit in log space
  long used = 0;
  long dropped = 0;  // nonpositive or below the 1e-14 noise floor
};

// series = (n, value) pairs; points with n < burn_in are ignored.
// Throws precondition_error when fewer than 4 usable points remain.
RateFit fit_rate(const std::vector<std::pair<long, double>>& series,
                 long burn_in = 5);

struct SandwichRow {
  long n = 0;  // cycle index of the even-side reference value
  std::string metric;
  // ratio_step:  D(lambda_U, pi_2n+1)   / (chi   * D(pi_2n, nu_V))
  // ratio_cycle: D(pi_2(n+1), nu_V)     / (chi   * D(lambda_U, pi_2n+1))
  double ratio_step = 0.0, ratio_cycle = 0.0;
  bool skipped = false;  // both sides at the noise floor
};

struct SandwichAudit {
  std::vector<SandwichRow> rows;
  double max_ratio = 0.0;
  long violations = 0;  // ratios exceeding 1 beyond slack 1 + 1e-8
  std::string worst;    // description of the worst row, empty when clean
};

// Requires trace metadata "chi_S" and both sides of every audited metric.
SandwichAudit sandwich_audit(const DivergenceTrace& trace);

// CSV schema: header `n,side,metric,value`, UTF-8, LF endings, values in
// scientific notation with 17 significant digits. Re-import reproduces the
// trace bit-exactly.
void export_csv(const DivergenceTrace& trace, const std::string& path);
DivergenceTrace import_csv(const std::string& path);

struct ReportOptions {
  long burn_in = 5;
  double theoretical_rho = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> extra_lines;  // e.g. condition verdicts
};

// Human-readable run summary: fitted rates per (metric, side), the
// theoretical rate when given, and any extra lines.
std::string report(const DivergenceTrace& trace, const ReportOptions& opts = {});

}  // namespace sk
