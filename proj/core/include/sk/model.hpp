#pragma once

#include <optional>
#include <string>

#include "sk/space.hpp"

namespace sk {

// Discrete entropic transport model: marginal potentials U, V on grids X, Y
// and a transition potential W on X x Y (log units; +inf entries are masked
// and carry zero kernel mass).
//
// U and V are shifted at construction so lambda_U = e^{-U} lambda and
// nu_V = e^{-V} nu are probability measures. W is kept exactly as given
// (condition checkers reason about the analytic cost); the per-row
// log-normalizers that make the forward kernel Markov on the grid are stored
// separately and applied by the iteration engine. Row normalization is a
// gauge shift W -> W + a(x): bridges, transitions and marginals do not
// depend on it.
class TransportModel {
 public:
  TransportModel(SpacePtr x, SpacePtr y, Eigen::ArrayXd u, Eigen::ArrayXd v,
                 Eigen::MatrixXd w, std::string label = "");

  const SpacePtr& X() const { return x_; }
  const SpacePtr& Y() const { return y_; }
  const Eigen::ArrayXd& U() const { return u_; }
  const Eigen::ArrayXd& V() const { return v_; }
  const Eigen::MatrixXd& W() const { return w_; }
  const std::string& label() const { return label_; }

  // log of the row integrals of e^{-W} against the Y base weights; the
  // engine's effective cost is W_eff = W + row_log_norm(x).
  const Eigen::ArrayXd& row_log_norm() const { return row_log_norm_; }
  double w_eff(Eigen::Index i, Eigen::Index j) const {
    return w_(i, j) + row_log_norm_(i);
  }
  bool masked(Eigen::Index i, Eigen::Index j) const {
    return !std::isfinite(w_(i, j));
  }

  Measure lambda_U() const;
  Measure nu_V() const;
  // Reference Markov kernel Q(x,dy) = e^{-W_eff(x,y)} nu(dy); rows integrate
  // to 1 exactly by construction of the normalizers.
  Kernel Q() const;

  // Minimum of W over unmasked entries (the lower bound the model assumes).
  double w_min() const { return w_min_; }

 private:
  SpacePtr x_, y_;
  Eigen::ArrayXd u_, v_;
  Eigen::MatrixXd w_;
  Eigen::ArrayXd row_log_norm_;
  double w_min_ = 0.0;
  std::string label_;
};

}  // namespace sk
