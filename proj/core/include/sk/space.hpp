#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "sk/errors.hpp"

namespace sk {

// Finite quadrature grid: points x_i with positive base weights w_i.
// A measure on the grid is stored as a density d_i w.r.t. these weights,
// so integrals are plain weighted sums and the base measure never needs
// to be a probability.
struct DiscreteSpace {
  std::vector<double> points;
  std::vector<double> weights;
  std::string label;

  std::size_t size() const { return points.size(); }
};

using SpacePtr = std::shared_ptr<const DiscreteSpace>;

SpacePtr make_space(std::vector<double> points, std::vector<double> weights,
                    std::string label = "");
// Uniform midpoint grid on [lo, hi] with n cells; weight per point = (hi-lo)/n.
SpacePtr midpoint_grid(double lo, double hi, std::size_t n, std::string label = "");

bool same_space(const DiscreteSpace& a, const DiscreteSpace& b);
bool same_space(const SpacePtr& a, const SpacePtr& b);

struct Measure {
  SpacePtr space;
  Eigen::ArrayXd density;  // w.r.t. the space's base weights, >= 0

  double mass() const;
  bool is_probability(double tol = 1e-12) const;
  Eigen::ArrayXd weights() const;  // copy of base weights as an array
};

Measure make_measure(SpacePtr space, Eigen::ArrayXd density);
// Scales the density so the total mass is exactly 1.
Measure normalized(const Measure& mu);

// Conditional density table k(x_i, y_j) w.r.t. the target's base weights.
// Markov kernels satisfy sum_j k(i,j) w^Y_j = 1 per row; unnormalized
// integral operators reuse the same storage with `markov` unset.
struct Kernel {
  SpacePtr source;
  SpacePtr target;
  Eigen::MatrixXd density;

  Eigen::ArrayXd row_integrals() const;
  double markov_defect() const;  // max_i |row integral - 1|
  Measure row(Eigen::Index i) const;
};

Kernel make_kernel(SpacePtr source, SpacePtr target, Eigen::MatrixXd density,
                   bool require_markov = true, double tol = 1e-10);

// (mu K)(dy): density_j = sum_i d_i w^X_i k(i,j). Mass is preserved for
// Markov kernels.
Measure apply_kernel(const Measure& mu, const Kernel& k);

// (K1 K2)(x,dz) integrating over the middle space.
Kernel kernel_compose(const Kernel& k1, const Kernel& k2);

}  // namespace sk
