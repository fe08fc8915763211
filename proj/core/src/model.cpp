#include "sk/model.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "lse.hpp"
#include "sk/errors.hpp"

namespace sk {

namespace {

Eigen::ArrayXd log_weights(const SpacePtr& s) {
  Eigen::ArrayXd lw(static_cast<Eigen::Index>(s->size()));
  for (std::size_t i = 0; i < s->size(); ++i)
    lw(static_cast<Eigen::Index>(i)) = std::log(s->weights[i]);
  return lw;
}

}  // namespace

TransportModel::TransportModel(SpacePtr x, SpacePtr y, Eigen::ArrayXd u,
                               Eigen::ArrayXd v, Eigen::MatrixXd w,
                               std::string label)
    : x_(std::move(x)),
      y_(std::move(y)),
      u_(std::move(u)),
      v_(std::move(v)),
      w_(std::move(w)),
      label_(std::move(label)) {
  if (!x_ || !y_) throw precondition_error("TransportModel: null space");
  const Eigen::Index nx = static_cast<Eigen::Index>(x_->size());
  const Eigen::Index ny = static_cast<Eigen::Index>(y_->size());
  if (u_.size() != nx || v_.size() != ny)
    throw precondition_error("TransportModel: potential sizes do not match grids");
  if (w_.rows() != nx || w_.cols() != ny)
    throw precondition_error("TransportModel: W shape does not match grids");
  if (!u_.isFinite().all() || !v_.isFinite().all())
    throw precondition_error("TransportModel: U and V must be finite");

  w_min_ = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < nx; ++i)
    for (Eigen::Index j = 0; j < ny; ++j) {
      const double wij = w_(i, j);
      if (std::isnan(wij) || wij == -std::numeric_limits<double>::infinity())
        throw precondition_error(
            "TransportModel: W entries must be finite or +inf (masked)");
      if (std::isfinite(wij) && wij < w_min_) w_min_ = wij;
    }
  if (!std::isfinite(w_min_))
    throw domain_error("TransportModel: every entry of W is masked");

  const Eigen::ArrayXd lwx = log_weights(x_);
  const Eigen::ArrayXd lwy = log_weights(y_);

  row_log_norm_.resize(nx);
  Eigen::ArrayXd terms(ny);
  for (Eigen::Index i = 0; i < nx; ++i) {
    for (Eigen::Index j = 0; j < ny; ++j)
      terms(j) = masked(i, j)
                     ? -std::numeric_limits<double>::infinity()
                     : -w_(i, j) + lwy(j);
    const double l = detail::logsumexp(terms);
    if (!std::isfinite(l))
      throw domain_error("TransportModel: row " + std::to_string(i) + " (x = " +
                         std::to_string(x_->points[static_cast<std::size_t>(i)]) +
                         ") carries no kernel mass");
    row_log_norm_(i) = l;
  }

  const double su = detail::logsumexp(-u_ + lwx);
  const double sv = detail::logsumexp(-v_ + lwy);
  if (!std::isfinite(su) || !std::isfinite(sv))
    throw numerical_error("TransportModel: marginal normalization degenerated");
  u_ += su;  // lambda_U and nu_V become probabilities
  v_ += sv;
}

Measure TransportModel::lambda_U() const {
  return make_measure(x_, (-u_).exp());
}

Measure TransportModel::nu_V() const { return make_measure(y_, (-v_).exp()); }

Kernel TransportModel::Q() const {
  const Eigen::Index nx = w_.rows(), ny = w_.cols();
  Eigen::MatrixXd q(nx, ny);
  for (Eigen::Index i = 0; i < nx; ++i)
    for (Eigen::Index j = 0; j < ny; ++j)
      q(i, j) = masked(i, j) ? 0.0 : std::exp(-w_eff(i, j));
  return make_kernel(x_, y_, std::move(q), /*require_markov=*/true, 1e-10);
}

}  // namespace sk
