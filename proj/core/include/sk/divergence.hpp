#pragma once

#include <string>
#include <vector>

#include "sk/space.hpp"

namespace sk {

// Jointly 1-homogeneous convex integrand Phi(u,v) with Phi(1,1) = 0.
// D_Phi(mu1, mu2) = sum_i Phi(d1_i, d2_i) w_i, independent of the dominating
// measure by homogeneity; the base weights serve as the dominating measure.
struct PhiSpec {
  enum class Family { TV, KL, Hellinger2, AlphaDiv, JensenShannon, Jeffreys };

  Family family = Family::TV;
  double alpha = 0.0;  // only meaningful for AlphaDiv

  double operator()(double u, double v) const;
  std::string name() const;

  static PhiSpec tv();
  static PhiSpec kl();
  static PhiSpec hellinger2();
  static PhiSpec alpha_div(double alpha);  // alpha not in {0,1}
  static PhiSpec jensen_shannon();
  static PhiSpec jeffreys();

  // Every 1-homogeneous family at representative parameters; used by the
  // property suites.
  static std::vector<PhiSpec> all(double alpha = 2.0);
};

// 1/2 sum_i |d1_i - d2_i| w_i for probability measures on the same space.
double total_variation(const Measure& mu1, const Measure& mu2);

double phi_entropy(const PhiSpec& spec, const Measure& mu1, const Measure& mu2);

// (alpha-1)^{-1} log sum_i d1_i^alpha d2_i^{1-alpha} w_i. Not 1-homogeneous,
// so it lives outside the PhiSpec family and its contraction is not covered
// by the Dobrushin dominance property.
double renyi_divergence(double alpha, const Measure& mu1, const Measure& mu2);

// log(max(d1/d2) * max(d2/d1)) over the common support; infinity when the
// supports differ (non-comparable measures).
double hilbert_metric(const Measure& mu1, const Measure& mu2);

struct WeightedTvResult {
  double value = 0.0;
  bool rescaled = false;  // phi was scaled up so min(phi) = 1/2
  double factor = 1.0;    // multiplier applied to phi (and hence to value)
};

// |mu1 - mu2|(phi) = sum_i |d1_i - d2_i| phi_i w_i with the norm convention
// phi >= 1/2; smaller weights are rescaled and reported.
WeightedTvResult weighted_tv(const Measure& mu1, const Measure& mu2,
                             const Eigen::ArrayXd& phi);

}  // namespace sk
