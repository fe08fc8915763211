#include "sk/sinkhorn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lse.hpp"
#include "sk/coefficients.hpp"
#include "sk/errors.hpp"

namespace sk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::ArrayXd log_weights(const SpacePtr& s) {
  Eigen::ArrayXd lw(static_cast<Eigen::Index>(s->size()));
  for (std::size_t i = 0; i < s->size(); ++i)
    lw(static_cast<Eigen::Index>(i)) = std::log(s->weights[i]);
  return lw;
}

// lse_i(-W_eff(i,j) - u(i) + log wx_i) per column j: the odd-update body,
// log R(e^{-u})(y_j) up to the V offset.
Eigen::ArrayXd column_lse(const TransportModel& m, const Eigen::ArrayXd& u) {
  const Eigen::Index nx = m.W().rows(), ny = m.W().cols();
  const Eigen::ArrayXd lwx = log_weights(m.X());
  Eigen::ArrayXd out(ny);
  Eigen::ArrayXd terms(nx);
  for (Eigen::Index j = 0; j < ny; ++j) {
    for (Eigen::Index i = 0; i < nx; ++i)
      terms(i) = m.masked(i, j) ? -kInf : -m.w_eff(i, j) - u(i) + lwx(i);
    out(j) = detail::logsumexp(terms);
    if (!std::isfinite(out(j)))
      throw numerical_error(
          "sinkhorn: update degenerated at y = " +
          std::to_string(m.Y()->points[static_cast<std::size_t>(j)]));
  }
  return out;
}

// lse_j(-W_eff(i,j) - v(j) + log wy_j) per row i: the even-update body,
// log Q(e^{-v})(x_i).
Eigen::ArrayXd row_lse(const TransportModel& m, const Eigen::ArrayXd& v) {
  const Eigen::Index nx = m.W().rows(), ny = m.W().cols();
  const Eigen::ArrayXd lwy = log_weights(m.Y());
  Eigen::ArrayXd out(nx);
  Eigen::ArrayXd terms(ny);
  for (Eigen::Index i = 0; i < nx; ++i) {
    for (Eigen::Index j = 0; j < ny; ++j)
      terms(j) = m.masked(i, j) ? -kInf : -m.w_eff(i, j) - v(j) + lwy(j);
    out(i) = detail::logsumexp(terms);
    if (!std::isfinite(out(i)))
      throw numerical_error(
          "sinkhorn: update degenerated at x = " +
          std::to_string(m.X()->points[static_cast<std::size_t>(i)]));
  }
  return out;
}

void recenter(const TransportModel& m, SinkhornState& s,
              const Eigen::ArrayXd& u_full, const Eigen::ArrayXd& v_full) {
  const Eigen::ArrayXd lu = m.lambda_U().density * m.lambda_U().weights();
  const Eigen::ArrayXd nv = m.nu_V().density * m.nu_V().weights();
  s.u_shift = (u_full * lu).sum();
  s.v_shift = (v_full * nv).sum();
  s.u_center = u_full - s.u_shift;
  s.v_center = v_full - s.v_shift;
}

}  // namespace

SinkhornState init_state(const TransportModel& model) {
  SinkhornState s;
  s.n = 0;
  recenter(model, s, model.U(),
           Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(model.Y()->size())));
  return s;
}

SinkhornState step(const TransportModel& model, const SinkhornState& s) {
  const Eigen::ArrayXd u = s.U();
  const Eigen::ArrayXd v_next = model.V() + column_lse(model, u);
  const Eigen::ArrayXd u_next = model.U() + row_lse(model, v_next);
  SinkhornState out;
  out.n = s.n + 1;
  out.prev_u = u;
  recenter(model, out, u_next, v_next);
  return out;
}

Kernel forward_transition(const TransportModel& model, const SinkhornState& s) {
  // Q(e^{-V_{2n}})(x) = e^{U_{2n}(x) - U(x)} by the even-update identity.
  const Eigen::ArrayXd u = s.U(), v = s.V();
  const Eigen::MatrixXd& w = model.W();
  Eigen::MatrixXd density(w.rows(), w.cols());
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    const double off = model.U()(i) - u(i);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      density(i, j) =
          model.masked(i, j) ? 0.0 : std::exp(-model.w_eff(i, j) - v(j) + off);
  }
  return make_kernel(model.X(), model.Y(), std::move(density),
                     /*require_markov=*/true, 1e-8);
}

Kernel backward_transition(const TransportModel& model, const SinkhornState& s) {
  // R(e^{-U_{2n+1}})(y) = e^{V_{2(n+1)}(y) - V(y)} with U_{2n+1} = U_{2n}.
  const Eigen::ArrayXd u = s.U();
  const Eigen::ArrayXd v_next = model.V() + column_lse(model, u);
  const Eigen::MatrixXd& w = model.W();
  Eigen::MatrixXd density(w.cols(), w.rows());
  for (Eigen::Index j = 0; j < w.cols(); ++j) {
    const double off = model.V()(j) - v_next(j);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      density(j, i) =
          model.masked(i, j) ? 0.0 : std::exp(-model.w_eff(i, j) - u(i) + off);
  }
  return make_kernel(model.Y(), model.X(), std::move(density),
                     /*require_markov=*/true, 1e-8);
}

Measure marginal_even(const TransportModel& model, const SinkhornState& s) {
  // log d(pi_2n)/d(nu) (j) = lse_i(-W_eff - U_2n(i) + log wx_i) - V_2n(j).
  const Eigen::ArrayXd col = column_lse(model, s.U());
  return make_measure(model.Y(), (col - s.V()).exp());
}

Measure marginal_odd(const TransportModel& model, const SinkhornState& s) {
  // log d(pi_2n+1)/d(lambda) (i) = lse_j(-W_eff - V_2(n+1)(j) + log wy_j)
  //                                - U_2n(i).
  const Eigen::ArrayXd u = s.U();
  const Eigen::ArrayXd v_next = model.V() + column_lse(model, u);
  const Eigen::ArrayXd row = row_lse(model, v_next);
  return make_measure(model.X(), (row - u).exp());
}

GibbsLoop gibbs_loop(const TransportModel& model, const SinkhornState& s) {
  const Kernel fwd = forward_transition(model, s);
  const Kernel bwd = backward_transition(model, s);
  const SinkhornState next = step(model, s);
  const Kernel fwd_next = forward_transition(model, next);
  GibbsLoop loop;
  loop.odd = kernel_compose(fwd, bwd);        // X -> X, fixes lambda_U
  loop.even = kernel_compose(bwd, fwd_next);  // Y -> Y, fixes nu_V
  return loop;
}

Eigen::MatrixXd bridge(const TransportModel& model, const SinkhornState& s) {
  const Eigen::ArrayXd u = s.U(), v = s.V();
  const Eigen::ArrayXd wx = model.lambda_U().weights();
  const Eigen::ArrayXd wy = model.nu_V().weights();
  const Eigen::MatrixXd& w = model.W();
  Eigen::MatrixXd p(w.rows(), w.cols());
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      p(i, j) = model.masked(i, j)
                    ? 0.0
                    : std::exp(-model.w_eff(i, j) - u(i) - v(j)) * wx(i) * wy(j);
  return p;
}

Eigen::MatrixXd bridge_odd(const TransportModel& model, const SinkhornState& s) {
  const Eigen::ArrayXd u = s.U();
  const Eigen::ArrayXd v_next = model.V() + column_lse(model, u);
  const Eigen::ArrayXd wx = model.lambda_U().weights();
  const Eigen::ArrayXd wy = model.nu_V().weights();
  const Eigen::MatrixXd& w = model.W();
  Eigen::MatrixXd p(w.rows(), w.cols());
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      p(i, j) = model.masked(i, j)
                    ? 0.0
                    : std::exp(-model.w_eff(i, j) - u(i) - v_next(j)) * wx(i) *
                          wy(j);
  return p;
}

double CommutationReport::max_residual() const {
  return std::max(std::max(r1, r2), std::max(r3, r4));
}

namespace {

// sup_i |sum_j K(i,j) g(j) w_j - rhs(i)|.
double kernel_apply_residual(const Kernel& k, const Eigen::ArrayXd& g,
                             const Eigen::ArrayXd& rhs) {
  const Eigen::ArrayXd wy =
      Eigen::Map<const Eigen::ArrayXd>(k.target->weights.data(),
                                       static_cast<Eigen::Index>(k.target->size()));
  const Eigen::VectorXd lump = (g * wy).matrix();
  const Eigen::ArrayXd lhs = (k.density * lump).array();
  return (lhs - rhs).abs().maxCoeff();
}

Eigen::ArrayXd guarded_ratio(const Eigen::ArrayXd& num,
                             const Eigen::ArrayXd& den) {
  Eigen::ArrayXd r(num.size());
  for (Eigen::Index i = 0; i < num.size(); ++i)
    r(i) = den(i) > 1e-300 ? num(i) / den(i) : 0.0;
  return r;
}

}  // namespace

CommutationReport check_commutation(const TransportModel& model,
                                    const SinkhornState& s) {
  if (!s.has_prev())
    throw precondition_error(
        "check_commutation: needs a state with history (n >= 1)");

  const Eigen::ArrayXd lam = model.lambda_U().density;
  const Eigen::ArrayXd nu = model.nu_V().density;
  const Eigen::ArrayXd pi_e = marginal_even(model, s).density;   // pi_2n
  const Eigen::ArrayXd pi_o = marginal_odd(model, s).density;    // pi_2n+1
  const SinkhornState next = step(model, s);

  CommutationReport rep;
  // r1: S_2n (d nu_V / d pi_2n) = d pi_2n+1 / d lambda_U.
  rep.r1 = kernel_apply_residual(forward_transition(model, s),
                                 guarded_ratio(nu, pi_e),
                                 guarded_ratio(pi_o, lam));
  // r2: S_2(n+1) (d pi_2n / d nu_V) = d lambda_U / d pi_2n+1.
  rep.r2 = kernel_apply_residual(forward_transition(model, next),
                                 guarded_ratio(pi_e, nu),
                                 guarded_ratio(lam, pi_o));

  // States one cycle back: S_2n-1 is the backward transition at n-1, and
  // pi_2n-1 the odd marginal there.
  SinkhornState prev;
  prev.n = s.n - 1;
  prev.u_center = s.prev_u;
  prev.u_shift = 0.0;
  prev.v_center = Eigen::ArrayXd::Zero(nu.size());  // unused by the Y->X side
  prev.v_shift = 0.0;
  const Eigen::ArrayXd pi_o_prev = marginal_odd(model, prev).density;
  const Kernel s_back_prev = backward_transition(model, prev);  // S_2n-1

  // r3: S_2n-1 (d lambda_U / d pi_2n-1) = d pi_2n / d nu_V.
  rep.r3 = kernel_apply_residual(s_back_prev, guarded_ratio(lam, pi_o_prev),
                                 guarded_ratio(pi_e, nu));
  // r4: S_2n+1 (d pi_2n-1 / d lambda_U) = d nu_V / d pi_2n.
  rep.r4 = kernel_apply_residual(backward_transition(model, s),
                                 guarded_ratio(pi_o_prev, lam),
                                 guarded_ratio(nu, pi_e));
  return rep;
}

RunResult run(const TransportModel& model, long maxiter, double stop_tol,
              const std::vector<PhiSpec>& divergences,
              const RunOptions& options) {
  if (maxiter < 1) throw precondition_error("run: maxiter must be >= 1");

  RunResult res;
  res.trace.model_id = model.label();
  const Measure lam = model.lambda_U();
  const Measure nu = model.nu_V();

  SinkhornState s = init_state(model);
  double chi_s = 0.0;
  for (long n = 0; n < maxiter; ++n) {
    const Measure pi_e = marginal_even(model, s);
    const Measure pi_o = marginal_odd(model, s);
    for (const PhiSpec& phi : divergences) {
      res.trace.add(n, "even", phi.name(), phi_entropy(phi, pi_e, nu));
      res.trace.add(n, "odd", phi.name(), phi_entropy(phi, lam, pi_o));
    }
    if (options.track_chi) {
      chi_s = std::max(chi_s,
                       dobrushin_coefficient(forward_transition(model, s)).chi);
      chi_s = std::max(chi_s,
                       dobrushin_coefficient(backward_transition(model, s)).chi);
    }
    res.cycles = n + 1;
    const double tv = total_variation(pi_e, nu);
    if (std::isfinite(stop_tol) && tv < stop_tol) {
      res.converged = true;
      break;
    }
    if (n + 1 < maxiter) s = step(model, s);
  }
  res.state = s;
  if (options.track_chi) res.trace.metadata["chi_S"] = chi_s;
  return res;
}

EntropyToBridge entropy_to_bridge(const TransportModel& model,
                                  const SinkhornState& s,
                                  const SinkhornState& limit, long max_terms) {
  if (total_variation(marginal_even(model, limit), model.nu_V()) >= 1e-12)
    throw precondition_error(
        "entropy_to_bridge: limit state is not converged (TV >= 1e-12)");

  const Measure lam = model.lambda_U();
  const Measure nu = model.nu_V();
  const Eigen::ArrayXd lw = lam.density * lam.weights();
  const Eigen::ArrayXd nw = nu.density * nu.weights();

  EntropyToBridge out;
  out.direct = ((s.U() - limit.U()) * lw).sum() + ((s.V() - limit.V()) * nw).sum();

  const PhiSpec kl = PhiSpec::kl();
  SinkhornState p = s;
  for (long t = 0; t < max_terms; ++t) {
    const double term_odd = phi_entropy(kl, lam, marginal_odd(model, p));
    const double term_even = phi_entropy(kl, nu, marginal_even(model, p));
    out.series += term_odd + term_even;
    out.terms += 2;
    out.last_term = std::max(term_odd, term_even);
    if (out.last_term < 1e-15) break;
    p = step(model, p);
  }
  return out;
}

}  // namespace sk
