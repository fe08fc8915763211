#pragma once

#include <map>
#include <string>
#include <vector>

namespace sk {

// Long-format divergence log. n is the cycle index: side "even" records
// D(pi_{2n}, nu_V), side "odd" records D(lambda_U, pi_{2n+1}), the argument
// order of the sandwich chain.
struct DivergenceTrace {
  struct Row {
    long n = 0;
    std::string side;    // "even" or "odd"
    std::string metric;  // e.g. "TV", "KL"
    double value = 0.0;
  };

  std::vector<Row> rows;
  std::string model_id;
  std::map<std::string, double> metadata;  // e.g. chi_S, theoretical_rate

  void add(long n, const std::string& side, const std::string& metric,
           double value) {
    rows.push_back({n, side, metric, value});
  }

  // Sorted (n, value) pairs of one series; validates n strictly increasing.
  std::vector<std::pair<long, double>> series(const std::string& metric,
                                              const std::string& side) const;
  std::vector<std::string> metrics() const;
};

}  // namespace sk
