#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sk/gaussian.hpp"
#include "sk/model.hpp"
#include "sk/sinkhorn.hpp"

namespace sk {

// Boundary arms where compactness of sub-level sets must be certified by
// growth: the open unit interval and the real line need both arms, the
// closed half-line [0, inf) only the right one, the open half-line
// (0, inf) both.
enum class DomainKind { interval01, half_line_closed, half_line_open, line };

struct ZooSpec {
  std::string name;
  DomainKind domain_x = DomainKind::line;
  DomainKind domain_y = DomainKind::line;
  std::function<double(double)> U, V;
  std::function<double(double, double)> W;  // may return +inf (masked)
  double x_lo = 0, x_hi = 1, y_lo = 0, y_hi = 1;
  long nx = 801, ny = 801;
  bool out_of_theory = false;  // built but outside the contraction theory
  std::string note;
};

struct ZooModel {
  TransportModel model;
  ZooSpec spec;
};

ZooModel build(const ZooSpec& spec);
// Named builders; unknown name -> domain_error, missing/invalid parameter
// -> precondition_error. See the README for each model's parameter list.
ZooModel build(const std::string& name,
               const std::map<std::string, double>& params);
ZooModel refined(const ZooModel& zm, double factor = 2.0);

// W_U(y) = int lambda_U(dx) W(x,y), W^V(x) = int nu_V(dy) W(x,y) by
// midpoint quadrature on the raw cost. Masked entries are excluded;
// coverage is the smallest unmasked marginal mass over rows/columns.
struct IntegratedCosts {
  Eigen::ArrayXd W_U;  // on Y
  Eigen::ArrayXd W_V;  // on X (the paper-style W^V)
  double coverage_x = 1.0, coverage_y = 1.0;
};

IntegratedCosts integrated_costs(const TransportModel& model);

struct GrowthFlag {
  bool growing = false;
  bool flat = false;
  double outer_to_interior = 0.0;  // worst required arm: outer mean / interior median
  bool monotone_arms = false;
  bool definite_fail = false;  // a required arm trends downward
};

struct LyapunovProfile {
  Eigen::ArrayXd profile_x;  // U_delta = delta*U - W^V on X
  Eigen::ArrayXd profile_y;  // V_delta = delta*V - W_U on Y
  GrowthFlag flag_x, flag_y;
};

// delta = 0 is allowed here (profiles only); growth flags use the
// outer-5%-vs-interior-median rule with the given factor.
LyapunovProfile lyapunov_profile(const ZooModel& zm, double delta,
                                 double growth_factor = 2.0);

enum class Verdict { satisfied, violated, inconclusive };

std::string to_string(Verdict v);

struct ConditionReport {
  double delta = 0.0;
  bool prime = false;  // true for the H'-variant integrals
  // lambda_{(1-d)U}(e^{W^V}) and nu_{(1-d)V}(e^{W_U}) with d = delta
  // (H' uses d = 2*delta and integrand 1).
  double integral_x = 0.0, integral_y = 0.0;
  double refine_change_x = 0.0, refine_change_y = 0.0;  // relative, 2x grid
  bool integrand_decays_x = false, integrand_decays_y = false;
  GrowthFlag growth_x, growth_y;
  Verdict verdict = Verdict::inconclusive;
  std::string note;
};

ConditionReport check_H_delta(const ZooModel& zm, double delta,
                              double growth_factor = 2.0);
ConditionReport check_H_prime(const ZooModel& zm, double delta,
                              double growth_factor = 2.0);

// Growth threshold for band sweeps over models with linearly growing
// profiles. The outer-slab mean of a linear profile never reaches twice
// the interior median on a finite truncation window (the ratio tops out
// near 1.95), so the default factor of 2 cannot certify linear growth;
// 1.3 can, while every rejection path ignores the ratio.
inline constexpr double kBandSweepGrowthFactor = 1.3;

// One mixture component: either a Gaussian block or a grid model. All
// components of one mixture share the reference kernel.
struct MixtureComponent {
  std::optional<GaussianEOTModel> gaussian;
  std::optional<ZooModel> generic;
};

// Pairwise condition over (X-side of component i, Y-side of component j):
// satisfied iff every ordered pair passes (check_cc for Gaussian pairs,
// check_H_delta otherwise); violated if any pair is; else inconclusive.
Verdict mixture_check(const std::vector<MixtureComponent>& components,
                      const std::vector<double>& weights, double delta);

// Gaussian KDE mixture: one component N(c, sigma) per center, heat-kernel
// channel y | x ~ N(x, t).
std::vector<MixtureComponent> kde_components(const std::vector<double>& centers,
                                             double sigma, double t);

struct DriftCurve {
  std::vector<double> eps;
  std::vector<double> c;  // c(eps) = max over points of (K f - eps g)_+
};

struct MinorizationPoint {
  double r = 0.0;
  // 1 - max pair total variation over transition rows restricted to the
  // sublevel sets {phi <= r} (even side) / {psi <= r} (odd side).
  double eps_even = 0.0, eps_odd = 0.0;
  long rows_even = 0, rows_odd = 0;
  bool skipped = false;
  std::string note;
};

struct DriftProbe {
  DriftCurve step_even;  // S_2n(psi)    vs eps*phi, on X
  DriftCurve step_odd;   // S_2n+1(phi)  vs eps*psi, on Y
  DriftCurve loop_even;  // S*_2(n+1)(psi) vs eps*psi, on Y
  DriftCurve loop_odd;   // S*_2n+1(phi)   vs eps*phi, on X
  std::vector<MinorizationPoint> minorization;
  // Set when a weight attains its minimum on the truncation boundary: the
  // grid minimum then understates the continuum infimum used for rescaling.
  std::string note;
};

// phi lives on X, psi on Y, both >= 1 (rescaled internally otherwise).
DriftProbe drift_minorization_probe(const TransportModel& model,
                                    const SinkhornState& state,
                                    const Eigen::ArrayXd& phi,
                                    const Eigen::ArrayXd& psi,
                                    const std::vector<double>& eps_grid,
                                    const std::vector<double>& r_grid);

}  // namespace sk
