#include "sk/gaussian.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

#include "sk/errors.hpp"

namespace sk {

namespace {

Eigen::MatrixXd sym(const Eigen::MatrixXd& a) {
  return 0.5 * (a + a.transpose());
}

// Eigendecomposition-backed SPD helpers; callers name the matrix so the
// error message can point at it.
Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> spd_eigs(
    const Eigen::MatrixXd& a, const char* what, double floor = 0.0) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym(a));
  if (es.info() != Eigen::Success)
    throw numerical_error(std::string(what) + ": eigendecomposition failed");
  if (es.eigenvalues().minCoeff() <= floor)
    throw precondition_error(std::string(what) + " is not positive definite");
  return es;
}

Eigen::MatrixXd spd_sqrt(const Eigen::MatrixXd& a, const char* what) {
  auto es = spd_eigs(a, what);
  return es.eigenvectors() *
         es.eigenvalues().cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& a, const char* what) {
  auto es = spd_eigs(a, what);
  return es.eigenvectors() *
         es.eigenvalues().cwiseInverse().asDiagonal() *
         es.eigenvectors().transpose();
}

double condition_number(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym(a));
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  return lo > 0 ? hi / lo : std::numeric_limits<double>::infinity();
}

double lambda_min(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym(a));
  return es.eigenvalues().minCoeff();
}

}  // namespace

void GaussianEOTModel::validate() const {
  const long d = dim();
  if (d < 1) throw precondition_error("GaussianEOTModel: empty model");
  if (m_bar.size() != d || alpha.size() != d)
    throw precondition_error("GaussianEOTModel: mean sizes disagree");
  auto square = [d](const Eigen::MatrixXd& a, const char* what) {
    if (a.rows() != d || a.cols() != d)
      throw precondition_error(std::string("GaussianEOTModel: ") + what +
                               " is not d x d");
  };
  square(sigma, "sigma");
  square(sigma_bar, "sigma_bar");
  square(beta, "beta");
  square(tau, "tau");
  spd_eigs(sigma, "sigma");
  spd_eigs(sigma_bar, "sigma_bar");
  spd_eigs(tau, "tau");
  if (!Eigen::FullPivLU<Eigen::MatrixXd>(beta).isInvertible())
    throw precondition_error("GaussianEOTModel: beta is singular");
}

GaussianEOTModel scalar_gaussian_model(double m, double sigma, double m_bar,
                                       double sigma_bar, double alpha,
                                       double beta, double tau) {
  GaussianEOTModel g;
  g.m = Eigen::VectorXd::Constant(1, m);
  g.m_bar = Eigen::VectorXd::Constant(1, m_bar);
  g.sigma = Eigen::MatrixXd::Constant(1, 1, sigma);
  g.sigma_bar = Eigen::MatrixXd::Constant(1, 1, sigma_bar);
  g.alpha = Eigen::VectorXd::Constant(1, alpha);
  g.beta = Eigen::MatrixXd::Constant(1, 1, beta);
  g.tau = Eigen::MatrixXd::Constant(1, 1, tau);
  g.validate();
  return g;
}

RiccatiCoordinates riccati_coordinates(const GaussianEOTModel& model) {
  model.validate();
  RiccatiCoordinates rc;
  rc.gamma = spd_sqrt(model.sigma_bar, "sigma_bar") *
             spd_inverse(model.tau, "tau") * model.beta *
             spd_sqrt(model.sigma, "sigma");
  rc.varpi = spd_inverse(rc.gamma * rc.gamma.transpose(), "gamma gamma'");
  rc.varpi_bar = spd_inverse(rc.gamma.transpose() * rc.gamma, "gamma' gamma");
  return rc;
}

Eigen::MatrixXd ricc_map(const Eigen::MatrixXd& varpi,
                         const Eigen::MatrixXd& v) {
  spd_eigs(varpi, "ricc_map: varpi");
  if (lambda_min(v) < -1e-12)
    throw precondition_error("ricc_map: v must be positive semidefinite");
  const Eigen::Index d = varpi.rows();
  const Eigen::MatrixXd inner = spd_inverse(varpi + sym(v), "varpi + v");
  return sym(spd_inverse(Eigen::MatrixXd::Identity(d, d) + inner,
                         "I + (varpi + v)^{-1}"));
}

RiccatiState riccati_init(const GaussianEOTModel& model) {
  model.validate();
  RiccatiState s;
  s.k = 0;
  const Eigen::MatrixXd isb =
      spd_inverse(spd_sqrt(model.sigma_bar, "sigma_bar"), "sigma_bar^{1/2}");
  s.upsilon = sym(isb * model.tau * isb);
  s.gain = model.beta;
  s.noise = model.tau;
  s.mean = model.alpha + model.beta * model.m;
  s.marginal_cov = sym(model.beta * model.sigma * model.beta.transpose() +
                       model.tau);
  return s;
}

RiccatiState riccati_step(const GaussianEOTModel& model,
                          const RiccatiState& s) {
  const Eigen::Index d = model.dim();
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(d, d);
  const RiccatiCoordinates rc = riccati_coordinates(model);
  const Eigen::MatrixXd sq_sigma = spd_sqrt(model.sigma, "sigma");
  const Eigen::MatrixXd sq_sigma_bar = spd_sqrt(model.sigma_bar, "sigma_bar");
  const Eigen::MatrixXd inv_tau = spd_inverse(model.tau, "tau");

  RiccatiState out;
  out.k = s.k + 1;
  out.prev_upsilon = s.upsilon;
  if (s.k % 2 == 0) {
    // 2n -> 2n+1: upsilon_{2n+1}^{-1} = I + gamma' upsilon_{2n} gamma.
    const Eigen::MatrixXd inv =
        id + rc.gamma.transpose() * s.upsilon * rc.gamma;
    out.upsilon = sym(spd_inverse(inv, "I + gamma' upsilon gamma"));
    out.noise = sym(sq_sigma * out.upsilon * sq_sigma);
    out.gain = out.noise * model.beta.transpose() * inv_tau;
    out.mean = model.m + out.gain * (model.m_bar - s.mean);
    out.marginal_cov =
        sym(out.gain * model.sigma_bar * out.gain.transpose() + out.noise);
  } else {
    // 2n+1 -> 2(n+1): upsilon^{-1} = I + gamma upsilon_{2n+1} gamma', and
    // the landing value must agree with Ricc_varpi(upsilon_2n).
    const Eigen::MatrixXd inv = id + rc.gamma * s.upsilon * rc.gamma.transpose();
    out.upsilon = sym(spd_inverse(inv, "I + gamma upsilon gamma'"));
    if (s.prev_upsilon.size() > 0) {
      const Eigen::MatrixXd expect = ricc_map(rc.varpi, s.prev_upsilon);
      const double defect = (out.upsilon - expect).cwiseAbs().maxCoeff();
      if (defect > 1e-12)
        throw numerical_error(
            "riccati_step: Riccati consistency defect " +
            std::to_string(defect) + " (condition number " +
            std::to_string(condition_number(inv)) + ")");
    }
    out.noise = sym(sq_sigma_bar * out.upsilon * sq_sigma_bar);
    out.gain = out.noise * inv_tau * model.beta;
    out.mean = model.m_bar + out.gain * (model.m - s.mean);
    out.marginal_cov =
        sym(out.gain * model.sigma * out.gain.transpose() + out.noise);
  }
  return out;
}

std::vector<RiccatiState> sinkhorn_params(const GaussianEOTModel& model,
                                          long k_max) {
  if (k_max < 0) throw precondition_error("sinkhorn_params: k_max < 0");
  std::vector<RiccatiState> states;
  states.reserve(static_cast<std::size_t>(k_max) + 1);
  states.push_back(riccati_init(model));
  for (long k = 0; k < k_max; ++k)
    states.push_back(riccati_step(model, states.back()));
  return states;
}

std::vector<GibbsLoopParams> gibbs_loop_params(const GaussianEOTModel& model,
                                               long k_max) {
  if (k_max < 1) throw precondition_error("gibbs_loop_params: k_max < 1");
  const std::vector<RiccatiState> states = sinkhorn_params(model, k_max);
  std::vector<GibbsLoopParams> loops;
  loops.reserve(static_cast<std::size_t>(k_max));
  for (long k = 1; k <= k_max; ++k) {
    const RiccatiState& cur = states[static_cast<std::size_t>(k)];
    const RiccatiState& prev = states[static_cast<std::size_t>(k - 1)];
    GibbsLoopParams lp;
    lp.k = k;
    lp.gain = cur.gain * prev.gain;
    lp.noise = sym(cur.noise + cur.gain * prev.noise * cur.gain.transpose());
    const Eigen::MatrixXd& fixed = (k % 2 == 0) ? model.sigma_bar : model.sigma;
    lp.fixed_point_residual =
        (fixed - (lp.gain * fixed * lp.gain.transpose() + lp.noise))
            .cwiseAbs()
            .maxCoeff();
    loops.push_back(std::move(lp));
  }
  return loops;
}

RateReport theoretical_rate(const GaussianEOTModel& model) {
  const RiccatiCoordinates rc = riccati_coordinates(model);
  RateReport rep;
  const Eigen::MatrixXd half = 0.5 * rc.varpi;
  rep.delta = sym(half + spd_sqrt(rc.varpi + half * half, "varpi + (varpi/2)^2"));
  rep.lambda_min = lambda_min(rep.delta);
  rep.rho = 1.0 / (1.0 + rep.lambda_min);
  return rep;
}

CCReport check_cc(const GaussianEOTModel& model, double delta) {
  model.validate();
  if (!(delta > 0.0 && delta < 1.0))
    throw domain_error("check_cc: delta must lie in (0, 1)");
  const double d = std::min(delta, 1.0 - delta);
  const Eigen::MatrixXd inv_tau = spd_inverse(model.tau, "tau");
  CCReport rep;
  rep.margin_x = lambda_min(d * spd_inverse(model.sigma, "sigma") -
                            model.beta.transpose() * inv_tau * model.beta);
  rep.margin_y =
      lambda_min(d * spd_inverse(model.sigma_bar, "sigma_bar") - inv_tau);
  rep.holds = rep.margin_x > 0.0 && rep.margin_y > 0.0;
  return rep;
}

DiscretizeResult discretize(const GaussianEOTModel& model, long n_points,
                            double k_sd) {
  model.validate();
  if (model.dim() != 1)
    throw precondition_error("discretize: only scalar models");
  if (n_points < 3 || n_points % 2 == 0)
    throw precondition_error("discretize: point count must be odd and >= 3");
  if (!(k_sd > 0))
    throw precondition_error("discretize: window width must be positive");

  const double m = model.m(0), mb = model.m_bar(0);
  const double sd_x = std::sqrt(model.sigma(0, 0));
  const double sd_y = std::sqrt(model.sigma_bar(0, 0));
  const double a = model.alpha(0), b = model.beta(0, 0), t = model.tau(0, 0);

  const auto grid_x = midpoint_grid(m - k_sd * sd_x, m + k_sd * sd_x,
                                    static_cast<std::size_t>(n_points), "x");
  const auto grid_y = midpoint_grid(mb - k_sd * sd_y, mb + k_sd * sd_y,
                                    static_cast<std::size_t>(n_points), "y");

  auto quad_potential = [](double center, double var) {
    return [center, var](double z) {
      return 0.5 * (z - center) * (z - center) / var +
             0.5 * std::log(2.0 * M_PI * var);
    };
  };
  const auto u_fn = quad_potential(m, model.sigma(0, 0));
  const auto v_fn = quad_potential(mb, model.sigma_bar(0, 0));

  const Eigen::Index nx = static_cast<Eigen::Index>(grid_x->size());
  const Eigen::Index ny = static_cast<Eigen::Index>(grid_y->size());
  Eigen::ArrayXd u(nx), v(ny);
  for (Eigen::Index i = 0; i < nx; ++i)
    u(i) = u_fn(grid_x->points[static_cast<std::size_t>(i)]);
  for (Eigen::Index j = 0; j < ny; ++j)
    v(j) = v_fn(grid_y->points[static_cast<std::size_t>(j)]);
  Eigen::MatrixXd w(nx, ny);
  for (Eigen::Index i = 0; i < nx; ++i) {
    const double xi = grid_x->points[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < ny; ++j) {
      const double yj = grid_y->points[static_cast<std::size_t>(j)];
      const double r = yj - a - b * xi;
      w(i, j) = 0.5 * r * r / t + 0.5 * std::log(2.0 * M_PI * t);
    }
  }

  DiscretizeResult out{TransportModel(grid_x, grid_y, std::move(u),
                                      std::move(v), std::move(w), "gaussian"),
                       std::erfc(k_sd / std::sqrt(2.0)),
                       std::erfc(k_sd / std::sqrt(2.0)), false};
  out.tail_warning = out.tail_mass_x > 1e-8 || out.tail_mass_y > 1e-8;
  return out;
}

double gaussian_tv_1d(double m1, double s1, double m2, double s2) {
  if (!(s1 > 0) || !(s2 > 0))
    throw precondition_error("gaussian_tv_1d: variances must be positive");
  auto cdf = [](double z, double m, double var) {
    return 0.5 * std::erfc(-(z - m) / std::sqrt(2.0 * var));
  };
  const double dm = m2 - m1;
  if (std::abs(s1 - s2) < 1e-15 * (s1 + s2)) {
    if (dm == 0.0) return 0.0;
    // Single crossing at the midpoint.
    const double r = 0.5 * (m1 + m2);
    return std::abs(cdf(r, m1, s1) - cdf(r, m2, s2));
  }
  // Density crossings: quadratic in z from equating the two log densities.
  const double qa = 0.5 / s2 - 0.5 / s1;
  const double qb = m1 / s1 - m2 / s2;
  const double qc =
      0.5 * m2 * m2 / s2 - 0.5 * m1 * m1 / s1 + 0.5 * std::log(s2 / s1);
  const double disc = qb * qb - 4.0 * qa * qc;
  if (disc <= 0.0) return 0.0;  // densities never cross: identical measures
  const double root = std::sqrt(disc);
  double r1 = (-qb - root) / (2.0 * qa);
  double r2 = (-qb + root) / (2.0 * qa);
  if (r1 > r2) std::swap(r1, r2);
  const double d1 = cdf(r1, m1, s1) - cdf(r1, m2, s2);
  const double d2 = cdf(r2, m1, s1) - cdf(r2, m2, s2);
  return 0.5 * (std::abs(d1) + std::abs(d2 - d1) + std::abs(d2));
}

double gaussian_kl(const Eigen::VectorXd& m1, const Eigen::MatrixXd& s1,
                   const Eigen::VectorXd& m2, const Eigen::MatrixXd& s2) {
  const Eigen::Index d = m1.size();
  if (m2.size() != d || s1.rows() != d || s2.rows() != d)
    throw precondition_error("gaussian_kl: dimension mismatch");
  const Eigen::MatrixXd inv2 = spd_inverse(s2, "covariance");
  const Eigen::VectorXd dm = m2 - m1;
  const double logdet =
      std::log(spd_eigs(s2, "covariance").eigenvalues().prod() /
               spd_eigs(s1, "covariance").eigenvalues().prod());
  return 0.5 * ((inv2 * s1).trace() + dm.dot(inv2 * dm) -
                static_cast<double>(d) + logdet);
}

double gaussian_hellinger2(const Eigen::VectorXd& m1, const Eigen::MatrixXd& s1,
                           const Eigen::VectorXd& m2,
                           const Eigen::MatrixXd& s2) {
  const Eigen::Index d = m1.size();
  if (m2.size() != d || s1.rows() != d || s2.rows() != d)
    throw precondition_error("gaussian_hellinger2: dimension mismatch");
  const Eigen::MatrixXd mid = 0.5 * (s1 + s2);
  const Eigen::MatrixXd inv_mid = spd_inverse(mid, "covariance average");
  const double det1 = spd_eigs(s1, "covariance").eigenvalues().prod();
  const double det2 = spd_eigs(s2, "covariance").eigenvalues().prod();
  const double det_mid = spd_eigs(mid, "covariance average").eigenvalues().prod();
  const Eigen::VectorXd dm = m2 - m1;
  const double bc = std::pow(det1 * det2, 0.25) / std::sqrt(det_mid) *
                    std::exp(-0.125 * dm.dot(inv_mid * dm));
  // Matches the 1-homogeneous integrand (sqrt(u) - sqrt(v))^2.
  return 2.0 * (1.0 - bc);
}

}  // namespace sk
