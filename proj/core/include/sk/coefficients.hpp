#pragma once

#include "sk/divergence.hpp"
#include "sk/space.hpp"

namespace sk {

// Minimal cross-row density ratio over all (x1, x2, y):
//   jmath(K) = inf k(x1,y)/k(x2,y).
// Returns 0 when rows are not mutually absolutely continuous (support
// patterns differ at the 1e-300 zero tolerance).
double jmath(const Kernel& k);

// Minimal cross-ratio product over row pairs:
//   hbar(K) = inf over (x1,x2) of [min_y k(x1,y)/k(x2,y)] * [min_y k(x2,y)/k(x1,y)].
// Invariant under Sinkhorn updates of the kernel. 0 on mismatched supports.
double hbar(const Kernel& k);

// Lipschitz constant of K on the Hilbert projective metric:
//   (1 - sqrt(hbar)) / (1 + sqrt(hbar)).
double birkhoff_coefficient(const Kernel& k);

struct DobrushinResult {
  double chi = 0.0;      // max over row pairs of TV between rows
  double epsilon = 1.0;  // 1 - chi
};

DobrushinResult dobrushin_coefficient(const Kernel& k);

struct WeightedDobrushinResult {
  double value = 0.0;
  bool rescaled = false;  // phi or psi scaled up to satisfy min >= 1
  // Sup over Dirac pairs, the computable reduction of the operator-norm
  // definition; tightness on general measure pairs is not guaranteed.
  const char* estimator = "Dirac-pair estimator";
};

// max over source pairs (x1,x2) of |delta_{x1}K - delta_{x2}K|(psi) /
// (phi(x1) + phi(x2)), with weights phi on the source and psi on the target,
// both >= 1 (rescaled with a warning flag otherwise).
WeightedDobrushinResult dobrushin_weighted(const Kernel& k,
                                           const Eigen::ArrayXd& phi,
                                           const Eigen::ArrayXd& psi);

}  // namespace sk
