#include "sk/diagnostics.hpp"

#include <algorithm>
#include <array>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "sk/errors.hpp"

namespace sk {

namespace {

constexpr double kFloor = 1e-14;  // quadrature noise floor

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

}  // namespace

std::vector<std::pair<long, double>> DivergenceTrace::series(
    const std::string& metric, const std::string& side) const {
  std::vector<std::pair<long, double>> out;
  for (const Row& r : rows) {
    if (r.metric != metric || r.side != side) continue;
    if (!out.empty() && r.n <= out.back().first)
      throw precondition_error("trace series " + metric + "/" + side +
                               ": n not strictly increasing");
    out.emplace_back(r.n, r.value);
  }
  return out;
}

std::vector<std::string> DivergenceTrace::metrics() const {
  std::vector<std::string> out;
  for (const Row& r : rows)
    if (std::find(out.begin(), out.end(), r.metric) == out.end())
      out.push_back(r.metric);
  return out;
}

RateFit fit_rate(const std::vector<std::pair<long, double>>& series,
                 long burn_in) {
  std::vector<double> xs, ys;
  RateFit fit;
  for (const auto& [n, v] : series) {
    if (n < burn_in) continue;
    if (!(v > 0.0) || v < kFloor) {
      ++fit.dropped;
      continue;
    }
    xs.push_back(static_cast<double>(n));
    ys.push_back(std::log(v));
  }
  if (xs.size() < 4)
    throw precondition_error(
        "fit_rate: fewer than 4 usable points after burn-in");

  const double m = static_cast<double>(xs.size());
  double xbar = 0.0, ybar = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xbar += xs[i];
    ybar += ys[i];
  }
  xbar /= m;
  ybar /= m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - xbar) * (xs[i] - xbar);
    sxy += (xs[i] - xbar) * (ys[i] - ybar);
  }
  if (!(sxx > 0.0))
    throw precondition_error("fit_rate: all points share one index");
  const double slope = sxy / sxx;

  fit.rho = std::exp(slope);
  fit.intercept = std::exp(ybar - slope * xbar);
  double rss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (ybar + slope * (xs[i] - xbar));
    rss += e * e;
  }
  fit.residual = std::sqrt(rss / m);
  fit.used = static_cast<long>(xs.size());
  return fit;
}

SandwichAudit sandwich_audit(const DivergenceTrace& trace) {
  const auto chi_it = trace.metadata.find("chi_S");
  if (chi_it == trace.metadata.end())
    throw precondition_error("sandwich_audit: trace lacks chi_S metadata");
  const double chi = chi_it->second;
  constexpr double kSlack = 1.0 + 1e-8;

  SandwichAudit audit;
  for (const std::string& metric : trace.metrics()) {
    const auto ev = trace.series(metric, "even");
    const auto od = trace.series(metric, "odd");
    if (ev.empty() || od.empty())
      throw precondition_error("sandwich_audit: metric " + metric +
                               " is missing a side");
    std::map<long, double> evn(ev.begin(), ev.end());
    std::map<long, double> odn(od.begin(), od.end());

    auto check = [&](double num, double den, long n, const char* kind,
                     double& slot) {
      if (num < kFloor) return false;  // numerator at the noise floor
      const double bound = chi * den;
      slot = bound > 0.0 ? num / bound
                         : std::numeric_limits<double>::infinity();
      if (slot > audit.max_ratio) {
        audit.max_ratio = slot;
        if (slot > kSlack) {
          std::ostringstream os;
          os << metric << " " << kind << " ratio " << slot << " at n=" << n;
          audit.worst = os.str();
        }
      }
      if (slot > kSlack) ++audit.violations;
      return true;
    };

    for (const auto& [n, de] : evn) {
      const auto io = odn.find(n);
      if (io == odn.end()) continue;
      const double dodd = io->second;
      SandwichRow row;
      row.n = n;
      row.metric = metric;
      bool any = check(dodd, de, n, "step", row.ratio_step);
      const auto ie1 = evn.find(n + 1);
      if (ie1 != evn.end())
        any = check(ie1->second, dodd, n, "cycle", row.ratio_cycle) || any;
      row.skipped = !any;
      audit.rows.push_back(std::move(row));
    }
  }
  return audit;
}

void export_csv(const DivergenceTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw numerical_error("export_csv: cannot open " + path + ": " +
                          std::strerror(errno));
  if (!trace.model_id.empty()) out << "# model_id " << trace.model_id << "\n";
  for (const auto& [key, value] : trace.metadata)
    out << "# meta " << key << " " << fmt17(value) << "\n";
  out << "n,side,metric,value\n";
  for (const DivergenceTrace::Row& r : trace.rows)
    out << r.n << ',' << r.side << ',' << r.metric << ',' << fmt17(r.value)
        << '\n';
  out.flush();
  if (!out)
    throw numerical_error("export_csv: write failed for " + path + ": " +
                          std::strerror(errno));
}

DivergenceTrace import_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw numerical_error("import_csv: cannot open " + path + ": " +
                          std::strerror(errno));
  DivergenceTrace trace;
  std::string line;
  bool header_seen = false;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    if (line[0] == '#') {
      std::istringstream is(line.substr(1));
      std::string tag;
      is >> tag;
      if (tag == "model_id") {
        is >> std::ws;
        std::getline(is, trace.model_id);
      } else if (tag == "meta") {
        std::string key, value;
        if (!(is >> key >> value))
          throw numerical_error("import_csv: bad meta line at " + where);
        trace.metadata[key] = std::strtod(value.c_str(), nullptr);
      }
      continue;
    }
    if (!header_seen) {
      if (line != "n,side,metric,value")
        throw numerical_error("import_csv: unexpected header at " + where +
                              ": " + line);
      header_seen = true;
      continue;
    }
    std::array<std::string, 4> field;
    std::size_t start = 0;
    for (int f = 0; f < 4; ++f) {
      const std::size_t comma = line.find(',', start);
      if (f < 3 && comma == std::string::npos)
        throw numerical_error("import_csv: expected 4 fields at " + where);
      field[static_cast<std::size_t>(f)] =
          line.substr(start, comma == std::string::npos ? comma : comma - start);
      start = comma + 1;
    }
    char* end = nullptr;
    DivergenceTrace::Row row;
    row.n = std::strtol(field[0].c_str(), &end, 10);
    if (end == field[0].c_str() || *end != '\0')
      throw numerical_error("import_csv: bad index at " + where);
    row.side = field[1];
    row.metric = field[2];
    row.value = std::strtod(field[3].c_str(), &end);
    if (end == field[3].c_str() || *end != '\0')
      throw numerical_error("import_csv: bad value at " + where);
    trace.rows.push_back(std::move(row));
  }
  if (!header_seen)
    throw numerical_error("import_csv: no header found in " + path);
  return trace;
}

std::string report(const DivergenceTrace& trace, const ReportOptions& opts) {
  std::ostringstream os;
  os << "run summary";
  if (!trace.model_id.empty()) os << " [" << trace.model_id << "]";
  os << "\n";
  for (const auto& [key, value] : trace.metadata)
    os << "  " << key << " = " << fmt17(value) << "\n";
  for (const std::string& metric : trace.metrics())
    for (const char* side : {"even", "odd"}) {
      const auto s = trace.series(metric, side);
      if (s.empty()) continue;
      os << "  " << metric << "/" << side << ": ";
      try {
        const RateFit f = fit_rate(s, opts.burn_in);
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "rho_hat=%.10f intercept=%.6e residual=%.3e used=%ld "
                      "dropped=%ld",
                      f.rho, f.intercept, f.residual, f.used, f.dropped);
        os << buf << "\n";
      } catch (const precondition_error&) {
        os << "too few points for a rate fit\n";
      }
    }
  if (!std::isnan(opts.theoretical_rho)) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "  theoretical rho=%.10f",
                  opts.theoretical_rho);
    os << buf << "\n";
  }
  for (const std::string& extra : opts.extra_lines) os << "  " << extra << "\n";
  return os.str();
}

}  // namespace sk
