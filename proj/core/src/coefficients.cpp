#include "sk/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sk/errors.hpp"

namespace sk {

namespace {

constexpr double kZeroTol = 1e-300;

// min_y a(y)/b(y) over the target grid; 0 on support mismatch, +inf when
// both rows vanish everywhere (callers never feed that for Markov kernels).
double min_row_ratio(const Eigen::MatrixXd& k, Eigen::Index i1,
                     Eigen::Index i2) {
  double lo = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < k.cols(); ++j) {
    const double a = k(i1, j);
    const double b = k(i2, j);
    const bool za = a < kZeroTol;
    const bool zb = b < kZeroTol;
    if (zb) continue;  // ratio +inf (or 0/0): no constraint on the min
    if (za) return 0.0;
    lo = std::min(lo, a / b);
    if (lo == 0.0) return 0.0;
  }
  return lo;
}

}  // namespace

double jmath(const Kernel& k) {
  const Eigen::Index p = k.density.rows();
  if (p < 2) return 1.0;
  double lo = std::numeric_limits<double>::infinity();
  for (Eigen::Index i1 = 0; i1 < p; ++i1) {
    for (Eigen::Index i2 = 0; i2 < p; ++i2) {
      if (i1 == i2) continue;
      lo = std::min(lo, min_row_ratio(k.density, i1, i2));
      if (lo == 0.0) return 0.0;
    }
  }
  return std::isfinite(lo) ? lo : 1.0;
}

double hbar(const Kernel& k) {
  const Eigen::Index p = k.density.rows();
  if (p < 2) return 1.0;
  double lo = 1.0;
  for (Eigen::Index i1 = 0; i1 < p; ++i1) {
    for (Eigen::Index i2 = i1 + 1; i2 < p; ++i2) {
      const double fwd = min_row_ratio(k.density, i1, i2);
      if (fwd == 0.0) return 0.0;
      const double bwd = min_row_ratio(k.density, i2, i1);
      if (bwd == 0.0) return 0.0;
      if (std::isfinite(fwd) && std::isfinite(bwd))
        lo = std::min(lo, fwd * bwd);
    }
  }
  return lo;
}

double birkhoff_coefficient(const Kernel& k) {
  const double h = hbar(k);
  const double r = std::sqrt(h);
  return (1.0 - r) / (1.0 + r);
}

DobrushinResult dobrushin_coefficient(const Kernel& k) {
  const Eigen::Index p = k.density.rows();
  const Eigen::ArrayXd wy =
      Eigen::Map<const Eigen::ArrayXd>(k.target->weights.data(),
                                       static_cast<Eigen::Index>(k.target->size()));
  double chi = 0.0;
  for (Eigen::Index i1 = 0; i1 + 1 < p; ++i1) {
    for (Eigen::Index i2 = i1 + 1; i2 < p; ++i2) {
      const double tv =
          0.5 * ((k.density.row(i1) - k.density.row(i2)).transpose().array().abs() *
                 wy)
                    .sum();
      chi = std::max(chi, tv);
    }
  }
  return {chi, 1.0 - chi};
}

WeightedDobrushinResult dobrushin_weighted(const Kernel& k,
                                           const Eigen::ArrayXd& phi,
                                           const Eigen::ArrayXd& psi) {
  const Eigen::Index p = k.density.rows();
  const Eigen::Index q = k.density.cols();
  if (phi.size() != p || psi.size() != q)
    throw domain_error("dobrushin_weighted: weight sizes do not match kernel");
  if ((phi <= 0).any() || (psi <= 0).any())
    throw precondition_error("dobrushin_weighted: weights must be positive");

  WeightedDobrushinResult res;
  Eigen::ArrayXd ph = phi, ps = psi;
  const double lo_phi = ph.minCoeff();
  const double lo_psi = ps.minCoeff();
  if (lo_phi < 1.0) {
    ph *= 1.0 / lo_phi;
    res.rescaled = true;
  }
  if (lo_psi < 1.0) {
    ps *= 1.0 / lo_psi;
    res.rescaled = true;
  }

  const Eigen::ArrayXd wy =
      Eigen::Map<const Eigen::ArrayXd>(k.target->weights.data(), q);
  const Eigen::ArrayXd lump = ps * wy;
  for (Eigen::Index i1 = 0; i1 + 1 < p; ++i1) {
    for (Eigen::Index i2 = i1 + 1; i2 < p; ++i2) {
      const double num =
          ((k.density.row(i1) - k.density.row(i2)).transpose().array().abs() *
           lump)
              .sum();
      res.value = std::max(res.value, num / (ph(i1) + ph(i2)));
    }
  }
  return res;
}

}  // namespace sk
