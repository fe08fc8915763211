#pragma once

#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace sk::detail {

// log sum_k exp(terms_k), max-shifted; -inf terms drop out, -inf when all do.
inline double logsumexp(const Eigen::ArrayXd& terms) {
  double hi = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < terms.size(); ++k)
    if (terms(k) > hi) hi = terms(k);
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (Eigen::Index k = 0; k < terms.size(); ++k)
    acc += std::exp(terms(k) - hi);
  return hi + std::log(acc);
}

}  // namespace sk::detail
