#pragma once

#include <vector>

#include <Eigen/Dense>

#include "sk/model.hpp"

namespace sk {

// Multivariate Gaussian entropic transport problem. Marginals are
// N(m, sigma) on X and N(m_bar, sigma_bar) on Y; the reference kernel is
// the linear-Gaussian channel y | x ~ N(alpha + beta x, tau).
struct GaussianEOTModel {
  Eigen::VectorXd m, m_bar;
  Eigen::MatrixXd sigma, sigma_bar;
  Eigen::VectorXd alpha;
  Eigen::MatrixXd beta, tau;

  long dim() const { return m.size(); }
  void validate() const;  // throws precondition_error on shape/SPD failures
};

GaussianEOTModel scalar_gaussian_model(double m, double sigma, double m_bar,
                                       double sigma_bar, double alpha,
                                       double beta, double tau);

// Dimensionless coordinates gamma = sigma_bar^{1/2} tau^{-1} beta sigma^{1/2},
// varpi = (gamma gamma')^{-1}, varpi_bar = (gamma' gamma)^{-1}.
struct RiccatiCoordinates {
  Eigen::MatrixXd gamma, varpi, varpi_bar;
};

RiccatiCoordinates riccati_coordinates(const GaussianEOTModel& model);

// Ricc_varpi(v) = (I + (varpi + v)^{-1})^{-1}; increasing, output in (0, I).
Eigen::MatrixXd ricc_map(const Eigen::MatrixXd& varpi, const Eigen::MatrixXd& v);

// Bridge parameters at half-step k. Even k = 2n describes the Y-side
// channel (tau_2n = sigma_bar^{1/2} upsilon_2n sigma_bar^{1/2},
// beta_2n = tau_2n tau^{-1} beta, marginal pi_2n = N(mean, marginal_cov));
// odd k the X side (tau_{2n+1} = sigma^{1/2} upsilon_{2n+1} sigma^{1/2},
// beta_{2n+1} = tau_{2n+1} beta' tau^{-1}). upsilon alternates
// upsilon_{2n+1}^{-1} = I + gamma' upsilon_{2n} gamma,
// upsilon_{2(n+1)}^{-1} = I + gamma upsilon_{2n+1} gamma'.
struct RiccatiState {
  long k = 0;
  Eigen::MatrixXd upsilon;
  Eigen::MatrixXd prev_upsilon;  // upsilon_{k-1}; empty at k = 0
  Eigen::MatrixXd gain;          // beta_k
  Eigen::MatrixXd noise;         // tau_k
  Eigen::VectorXd mean;          // m_k
  Eigen::MatrixXd marginal_cov;  // sigma_k
};

RiccatiState riccati_init(const GaussianEOTModel& model);

// Advances one half-step. A step landing on an even index 2(n+1) is
// checked against Ricc_varpi(upsilon_2n) to 1e-12 in sup norm (throws
// numerical_error on violation, with the condition number of the
// offending inverse).
RiccatiState riccati_step(const GaussianEOTModel& model, const RiccatiState& s);

// States for half-steps 0..k_max inclusive.
std::vector<RiccatiState> sinkhorn_params(const GaussianEOTModel& model,
                                          long k_max);

// Gibbs loop parameters beta*_k = beta_k beta_{k-1},
// tau*_k = tau_k + beta_k tau_{k-1} beta_k' for k >= 1. Even k fixes
// nu_V (fixed point sigma_bar = beta* sigma_bar beta*' + tau*), odd k
// fixes lambda_U; fixed_point_residual is the sup-norm defect.
struct GibbsLoopParams {
  long k = 0;
  Eigen::MatrixXd gain;   // beta*_k
  Eigen::MatrixXd noise;  // tau*_k
  double fixed_point_residual = 0.0;
};

std::vector<GibbsLoopParams> gibbs_loop_params(const GaussianEOTModel& model,
                                               long k_max);

// Delta_varpi = varpi/2 + (varpi + (varpi/2)^2)^{1/2};
// rho = (1 + lambda_min(Delta_varpi))^{-1}, the per-cycle TV rate.
struct RateReport {
  Eigen::MatrixXd delta;
  double lambda_min = 0.0;
  double rho = 0.0;
};

RateReport theoretical_rate(const GaussianEOTModel& model);

// Integrability test: the admissible band exists iff
//   beta' tau^{-1} beta < (delta ^ (1-delta)) sigma^{-1}   and
//   tau^{-1} < (delta ^ (1-delta)) sigma_bar^{-1}
// in the Loewner order. Margins are the smallest eigenvalues of the
// differences (positive = satisfied with room).
struct CCReport {
  bool holds = false;
  double margin_x = 0.0;
  double margin_y = 0.0;
  double margin() const { return margin_x < margin_y ? margin_x : margin_y; }
};

CCReport check_cc(const GaussianEOTModel& model, double delta);

// Scalar-model discretization on midpoint grids covering +-k_sd standard
// deviations of each marginal (odd point counts). Tail masses are the
// marginal probabilities outside the windows.
struct DiscretizeResult {
  TransportModel model;
  double tail_mass_x = 0.0, tail_mass_y = 0.0;
  bool tail_warning = false;  // set when either tail exceeds 1e-8
};

DiscretizeResult discretize(const GaussianEOTModel& model, long n_points = 801,
                            double k_sd = 8.0);

// Exact closed forms for Gaussians (TV in 1-d via density crossing points).
double gaussian_tv_1d(double m1, double s1, double m2, double s2);
double gaussian_kl(const Eigen::VectorXd& m1, const Eigen::MatrixXd& s1,
                   const Eigen::VectorXd& m2, const Eigen::MatrixXd& s2);
double gaussian_hellinger2(const Eigen::VectorXd& m1, const Eigen::MatrixXd& s1,
                           const Eigen::VectorXd& m2,
                           const Eigen::MatrixXd& s2);

}  // namespace sk
