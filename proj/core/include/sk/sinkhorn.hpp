#pragma once

#include <vector>

#include "sk/divergence.hpp"
#include "sk/model.hpp"
#include "sk/trace.hpp"

namespace sk {

// Dual potentials after n full even/odd cycles: u = U_{2n}, v = V_{2n},
// with (U_0, V_0) = (U, 0). Values are stored centered plus a running
// additive shift (u_shift = lambda_U-mean, v_shift = nu_V-mean) so the
// centered parts stay O(osc) along long runs; accessors recompose.
struct SinkhornState {
  long n = 0;
  Eigen::ArrayXd u_center, v_center;
  double u_shift = 0.0, v_shift = 0.0;
  Eigen::ArrayXd prev_u;  // U_{2(n-1)}, empty at n = 0

  Eigen::ArrayXd U() const { return u_center + u_shift; }
  Eigen::ArrayXd V() const { return v_center + v_shift; }
  bool has_prev() const { return prev_u.size() > 0; }
};

SinkhornState init_state(const TransportModel& model);

// One full cycle: V_{2(n+1)} = V + log R(e^{-U_{2n}}) first, then
// U_{2(n+1)} = U + log Q(e^{-V_{2(n+1)}}), both by shifted log-sum-exp.
SinkhornState step(const TransportModel& model, const SinkhornState& s);

// S_{2n}(x,dy) = Q(x,dy) e^{-V_{2n}(y)} / Q(e^{-V_{2n}})(x).
Kernel forward_transition(const TransportModel& model, const SinkhornState& s);
// S_{2n+1}(y,dx) = R(y,dx) e^{-U_{2n+1}(x)} / R(e^{-U_{2n+1}})(y), with
// U_{2n+1} = U_{2n}.
Kernel backward_transition(const TransportModel& model, const SinkhornState& s);

Measure marginal_even(const TransportModel& model, const SinkhornState& s);  // pi_2n
Measure marginal_odd(const TransportModel& model, const SinkhornState& s);   // pi_2n+1

struct GibbsLoop {
  Kernel odd;   // S*_{2n+1} = S_{2n} S_{2n+1}, fixes lambda_U
  Kernel even;  // S*_{2(n+1)} = S_{2n+1} S_{2(n+1)}, fixes nu_V
};

GibbsLoop gibbs_loop(const TransportModel& model, const SinkhornState& s);

// Joint probability table P_{2n}(i,j) = e^{-W_eff - U_{2n} - V_{2n}} w_i w_j;
// first marginal equals lambda_U by the even-update identity.
Eigen::MatrixXd bridge(const TransportModel& model, const SinkhornState& s);
// P_{2n+1}, using (U_{2n+1}, V_{2(n+1)}) = (U_{2n}, next odd update).
Eigen::MatrixXd bridge_odd(const TransportModel& model, const SinkhornState& s);

// Sup-norm residuals of the four transition/marginal commutation identities:
//   r1: S_{2n}(d nu_V / d pi_{2n})        = d pi_{2n+1} / d lambda_U
//   r2: S_{2(n+1)}(d pi_{2n} / d nu_V)    = d lambda_U / d pi_{2n+1}
//   r3: S_{2n-1}(d lambda_U / d pi_{2n-1}) = d pi_{2n} / d nu_V      (n >= 1)
//   r4: S_{2n+1}(d pi_{2n-1} / d lambda_U) = d nu_V / d pi_{2n}      (n >= 1)
struct CommutationReport {
  double r1 = 0, r2 = 0, r3 = 0, r4 = 0;
  double max_residual() const;
};

CommutationReport check_commutation(const TransportModel& model,
                                    const SinkhornState& s);

struct RunResult {
  SinkhornState state;
  DivergenceTrace trace;
  long cycles = 0;
  bool converged = false;
};

struct RunOptions {
  // Record the largest Dobrushin coefficient seen across transitions in
  // metadata["chi_S"]. Costs one O(P^2 N) pass per transition per cycle,
  // so large grids that do not need a sandwich audit switch it off.
  bool track_chi = true;
};

// Iterates up to maxiter cycles, recording each requested divergence for
// both sides per cycle; stops early when TV(pi_{2n}, nu_V) < stop_tol
// (a non-finite stop_tol disables early stopping).
RunResult run(const TransportModel& model, long maxiter, double stop_tol,
              const std::vector<PhiSpec>& divergences,
              const RunOptions& options = {});

struct EntropyToBridge {
  double direct = 0.0;   // lambda_U(U_{2n} - U_lim) + nu_V(V_{2n} - V_lim)
  double series = 0.0;   // sum_{p>=n} Ent(lambda_U|pi_{2p+1}) + Ent(nu_V|pi_{2p})
  long terms = 0;        // series terms accumulated before truncation
  double last_term = 0;  // magnitude of the final summand (truncation bound)
};

// Relative entropy of the limiting bridge w.r.t. the bridge at state s,
// by the potential-difference formula and by the marginal-entropy tail sum.
// `limit` must be converged: TV(pi_even(limit), nu_V) < 1e-12.
EntropyToBridge entropy_to_bridge(const TransportModel& model,
                                  const SinkhornState& s,
                                  const SinkhornState& limit,
                                  long max_terms = 10000);

}  // namespace sk
