#pragma once

#include "sk/space.hpp"

namespace sk {

// W_p between two probability measures on 1-D grids via the quantile
// coupling: W_p^p = integral over q in (0,1) of |F1^{-1}(q) - F2^{-1}(q)|^p.
// Grids are sorted internally; returns W_p (the p-th root).
double wasserstein_1d(const Measure& mu1, const Measure& mu2, double p);

// Exact optimum of the discrete transport program
//   min sum_{ij} T_ij cost(i,j)  s.t.  T >= 0, row sums = masses of mu1,
//   column sums = masses of mu2.
// Up to 8 points per side this runs an exhaustive search over the extreme
// points of the transportation polytope; up to 30 points it runs the
// transportation simplex with Bland's anti-cycling rule. Larger instances
// throw domain_error. Returns the optimal cost value.
double transport_oracle(const Measure& mu1, const Measure& mu2,
                        const Eigen::MatrixXd& cost);

namespace detail {

// Every vertex of the transportation polytope is reachable by greedily
// saturating one row or column at a time; the search branches over all
// active cells with an admissible lower bound for pruning, so it is exact.
double transport_bruteforce(const Eigen::ArrayXd& supply,
                            const Eigen::ArrayXd& demand,
                            const Eigen::MatrixXd& cost);

double transport_simplex(const Eigen::ArrayXd& supply,
                         const Eigen::ArrayXd& demand,
                         const Eigen::MatrixXd& cost);

}  // namespace detail

}  // namespace sk
