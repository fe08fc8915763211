// Acceptance gate: one self-contained check per shipped guarantee, one
// PASS/FAIL line each. Run with no arguments for the full gate or with a
// single criterion number. Exit code is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sk/coefficients.hpp"
#include "sk/diagnostics.hpp"
#include "sk/divergence.hpp"
#include "sk/errors.hpp"
#include "sk/gaussian.hpp"
#include "sk/model.hpp"
#include "sk/sinkhorn.hpp"
#include "sk/space.hpp"
#include "sk/wasserstein.hpp"
#include "sk/zoo.hpp"

using namespace sk;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Rng = std::mt19937_64;

TransportModel random_model(Rng& rng, long nx, long ny, double cost_hi = 3.0) {
  std::uniform_real_distribution<double> pt(-2.0, 2.0), wt(0.5, 1.5),
      po(-1.0, 1.0), co(0.0, cost_hi);
  std::vector<double> xs(nx), wx(nx), ys(ny), wy(ny);
  for (long i = 0; i < nx; ++i) {
    xs[i] = pt(rng);
    wx[i] = wt(rng);
  }
  for (long j = 0; j < ny; ++j) {
    ys[j] = pt(rng);
    wy[j] = wt(rng);
  }
  Eigen::ArrayXd u(nx), v(ny);
  for (long i = 0; i < nx; ++i) u(i) = po(rng);
  for (long j = 0; j < ny; ++j) v(j) = po(rng);
  Eigen::MatrixXd w(nx, ny);
  for (long i = 0; i < nx; ++i)
    for (long j = 0; j < ny; ++j) w(i, j) = co(rng);
  return TransportModel(make_space(xs, wx), make_space(ys, wy), u, v, w,
                        "random");
}

Measure random_probability(Rng& rng, const SpacePtr& sp) {
  std::uniform_real_distribution<double> d(0.05, 1.0);
  Eigen::ArrayXd dens(sp->size());
  for (Eigen::Index i = 0; i < dens.size(); ++i) dens(i) = d(rng);
  return normalized(make_measure(sp, dens));
}

Eigen::MatrixXd random_spd(Rng& rng, long d) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd a(d, d);
  for (long i = 0; i < d; ++i)
    for (long j = 0; j < d; ++j) a(i, j) = g(rng);
  return a * a.transpose() + 0.4 * Eigen::MatrixXd::Identity(d, d);
}

std::pair<double, double> measure_moments(const Measure& mu) {
  const auto& xs = mu.space->points;
  const Eigen::ArrayXd mass = mu.density * mu.weights();
  double mean = 0.0;
  for (Eigen::Index j = 0; j < mass.size(); ++j) mean += mass(j) * xs[j];
  double var = 0.0;
  for (Eigen::Index j = 0; j < mass.size(); ++j)
    var += mass(j) * (xs[j] - mean) * (xs[j] - mean);
  return {mean, var};
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// 1. The transition cross-ratio never moves along a run.
Outcome criterion_hbar() {
  Rng rng(1101);
  double worst = 0.0;
  for (int m = 0; m < 20; ++m) {
    TransportModel model = random_model(rng, 15, 15);
    const double h0 = hbar(model.Q());
    SinkhornState s = init_state(model);
    for (int n = 1; n <= 40; ++n) {
      s = step(model, s);
      const double hf = hbar(forward_transition(model, s));
      const double hb = hbar(backward_transition(model, s));
      worst = std::max(worst, std::abs(hf - h0) / h0);
      worst = std::max(worst, std::abs(hb - h0) / h0);
    }
  }
  return {worst <= 1e-9, "worst relative drift " + fmt("%.3e", worst)};
}

// 2. Alternating divergence traces contract through chi(S) step by step.
Outcome criterion_sandwich() {
  auto tri = build("triangular", {});
  RunOptions opts;
  opts.track_chi = true;
  auto rr = run(tri.model, 50,
                -1.0,  // full 50 cycles; the audit needs the whole trace
                {PhiSpec::kl(), PhiSpec::tv(), PhiSpec::hellinger2()}, opts);
  auto audit = sandwich_audit(rr.trace);
  const bool pass = audit.violations == 0 && !audit.rows.empty();
  std::string detail = "max ratio " + fmt("%.10f", audit.max_ratio) + " over " +
                       std::to_string(audit.rows.size()) + " rows";
  if (!audit.worst.empty()) detail += "; worst " + audit.worst;
  return {pass, detail};
}

// 3. The Dobrushin coefficient bounds every implemented Phi-divergence.
Outcome criterion_dominance() {
  Rng rng(3303);
  std::uniform_int_distribution<long> size(2, 12);
  std::uniform_real_distribution<double> kd(0.05, 1.0);
  double worst_excess = -1e300;
  const auto specs = PhiSpec::all();
  for (int t = 0; t < 500; ++t) {
    const long nx = size(rng), ny = size(rng);
    auto sx = std::make_shared<DiscreteSpace>();
    // Random grids with unit weights keep the kernel rows easy to normalize.
    std::vector<double> xs(nx), ys(ny);
    std::uniform_real_distribution<double> pt(-3.0, 3.0);
    for (auto& x : xs) x = pt(rng);
    for (auto& y : ys) y = pt(rng);
    auto spx = make_space(xs, std::vector<double>(nx, 1.0));
    auto spy = make_space(ys, std::vector<double>(ny, 1.0));
    Eigen::MatrixXd dens(nx, ny);
    for (long i = 0; i < nx; ++i) {
      double mass = 0.0;
      for (long j = 0; j < ny; ++j) {
        dens(i, j) = kd(rng);
        mass += dens(i, j);
      }
      dens.row(i) /= mass;
    }
    Kernel k = make_kernel(spx, spy, dens);
    const double chi = dobrushin_coefficient(k).chi;
    Measure mu1 = random_probability(rng, spx);
    Measure mu2 = random_probability(rng, spx);
    Measure p1 = apply_kernel(mu1, k);
    Measure p2 = apply_kernel(mu2, k);
    for (const PhiSpec& spec : specs) {
      const double before = phi_entropy(spec, mu1, mu2);
      const double after = phi_entropy(spec, p1, p2);
      worst_excess = std::max(worst_excess, after - chi * before - 1e-12);
    }
  }
  return {worst_excess <= 0.0, "worst bound excess " + fmt("%.3e", worst_excess)};
}

// 4. A fine discretization reproduces the closed-form marginal flow.
Outcome criterion_gaussian_cross() {
  auto model = scalar_gaussian_model(0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 3.0);
  auto states = sinkhorn_params(model, 20);
  auto disc = discretize(model, 801, 8.0);
  SinkhornState s = init_state(disc.model);
  double worst = 0.0;
  for (int n = 1; n <= 10; ++n) {
    s = step(disc.model, s);
    const auto [mean, var] = measure_moments(marginal_even(disc.model, s));
    const auto& ref = states[static_cast<std::size_t>(2 * n)];
    worst = std::max(worst, std::abs(mean - ref.mean(0)));
    worst = std::max(worst, std::abs(var - ref.marginal_cov(0, 0)));
  }
  return {worst <= 1e-3, "worst moment error " + fmt("%.3e", worst)};
}

// 5. Fitted TV decay rates stay within 0.02 of the spectral prediction.
Outcome criterion_rates() {
  std::ostringstream detail;
  bool pass = true;
  const double taus[] = {1.0, 3.0, 10.0};
  const long cycles[] = {40, 16, 8};
  const long burn[] = {5, 4, 2};  // faster mixing hits the noise floor sooner
  for (int t = 0; t < 3; ++t) {
    auto model = scalar_gaussian_model(0.5, 1.0, 0.0, 1.0, 0.0, 1.0, taus[t]);
    const double rho = theoretical_rate(model).rho;
    auto states = sinkhorn_params(model, 2 * cycles[t]);
    std::vector<std::pair<long, double>> trace;
    for (long n = 0; n <= cycles[t]; ++n) {
      const auto& st = states[static_cast<std::size_t>(2 * n)];
      trace.emplace_back(
          n, gaussian_tv_1d(st.mean(0), st.marginal_cov(0, 0), 0.0, 1.0));
    }
    const double rho_hat = fit_rate(trace, burn[t]).rho;
    if (!(rho_hat <= rho + 0.02)) pass = false;
    if (taus[t] == 1.0 && std::abs(rho - 0.381966) > 1e-6) pass = false;
    detail << "tau=" << taus[t] << " rho_hat=" << fmt("%.6f", rho_hat)
           << " rho=" << fmt("%.6f", rho) << (t < 2 ? "; " : "");
  }
  return {pass, detail.str()};
}

// 6. The entropy-to-bridge functional equals its marginal-entropy tail sum.
Outcome criterion_entropy_series() {
  Rng rng(6606);
  TransportModel model = random_model(rng, 40, 40, 2.0);
  auto rr = run(model, 2000, 1e-13, {});
  if (!rr.converged) return {false, "reference run did not converge"};
  SinkhornState s = init_state(model);
  double worst = 0.0;
  for (int n = 1; n <= 10; ++n) {
    s = step(model, s);
    const auto eb = entropy_to_bridge(model, s, rr.state);
    const double rel = std::abs(eb.direct - eb.series) /
                       std::max(std::abs(eb.direct), 1e-300);
    worst = std::max(worst, rel);
  }
  return {worst <= 1e-6, "worst relative gap " + fmt("%.3e", worst)};
}

// 7. Transition/marginal commutation residuals vanish along random runs.
Outcome criterion_commutation() {
  Rng rng(7707);
  double worst = 0.0;
  for (int m = 0; m < 20; ++m) {
    TransportModel model = random_model(rng, 10, 10);
    SinkhornState s = init_state(model);
    for (int n = 1; n <= 20; ++n) {
      s = step(model, s);
      worst = std::max(worst, check_commutation(model, s).max_residual());
    }
  }
  return {worst <= 1e-10, "worst residual " + fmt("%.3e", worst)};
}

// 8. The covariance flow solves its Riccati recursion inside its envelopes.
Outcome criterion_riccati() {
  Rng rng(8808);
  std::uniform_int_distribution<long> dim(1, 5);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst_defect = 0.0, worst_eig = 1e300;
  for (int t = 0; t < 100; ++t) {
    const long d = dim(rng);
    GaussianEOTModel model;
    model.m = Eigen::VectorXd::Zero(d);
    model.m_bar = Eigen::VectorXd::Zero(d);
    for (long i = 0; i < d; ++i) {
      model.m(i) = g(rng);
      model.m_bar(i) = g(rng);
    }
    model.sigma = random_spd(rng, d);
    model.sigma_bar = random_spd(rng, d);
    model.tau = random_spd(rng, d);
    model.alpha = Eigen::VectorXd::Zero(d);
    model.beta = Eigen::MatrixXd::Identity(d, d) * 2.0;
    for (long i = 0; i < d; ++i)
      for (long j = 0; j < d; ++j) model.beta(i, j) += 0.4 * g(rng);

    const auto rc = riccati_coordinates(model);
    auto states = sinkhorn_params(model, 12);
    auto loops = gibbs_loop_params(model, 12);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(model.sigma_bar);
    const Eigen::MatrixXd sb_half = es.operatorSqrt();
    const Eigen::MatrixXd inner =
        (Eigen::MatrixXd::Identity(d, d) + rc.varpi.inverse()).inverse();
    const Eigen::MatrixXd lower = sb_half * inner * sb_half;

    for (std::size_t k = 2; k < states.size(); k += 2) {
      const Eigen::MatrixXd defect =
          states[k].upsilon - ricc_map(rc.varpi, states[k - 2].upsilon);
      worst_defect = std::max(worst_defect, defect.cwiseAbs().maxCoeff());
      for (const Eigen::MatrixXd& noise :
           {states[k].noise, loops[k].noise}) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> lo(noise - lower);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> hi(model.sigma_bar -
                                                          noise);
        worst_eig = std::min(worst_eig, lo.eigenvalues().minCoeff());
        worst_eig = std::min(worst_eig, hi.eigenvalues().minCoeff());
      }
    }
  }
  const bool pass = worst_defect <= 1e-12 && worst_eig >= -1e-10;
  return {pass, "worst defect " + fmt("%.3e", worst_defect) +
                    ", envelope slack " + fmt("%.3e", worst_eig)};
}

// 9. Numeric growth/integrability checks agree with the spectral margins.
Outcome criterion_cc_agreement() {
  const double taus[] = {1.1, 1.4, 1.8, 2.4, 3.2, 4.5, 6.5, 9.0, 14.0, 20.0};
  long checked = 0;
  std::string mismatch;
  for (double tau : taus) {
    auto analytic = scalar_gaussian_model(0.0, 1.0, 0.0, 1.0, 0.0, 1.0, tau);
    auto numeric = build("gaussian", {{"tau", tau}});
    for (int j = 0; j < 10; ++j) {
      const double delta = 0.05 + 0.1 * j;
      const auto cc = check_cc(analytic, delta);
      if (std::abs(cc.margin()) < 0.02) continue;
      ++checked;
      const Verdict v = check_H_delta(numeric, delta).verdict;
      const Verdict want = cc.holds ? Verdict::satisfied : Verdict::violated;
      if (v != want && mismatch.empty())
        mismatch = "tau=" + fmt("%.1f", tau) + " delta=" + fmt("%.2f", delta) +
                   " margin=" + fmt("%.3f", cc.margin()) + " got " +
                   to_string(v);
    }
  }
  std::string detail = std::to_string(checked) + " points checked";
  if (!mismatch.empty()) detail += "; first mismatch: " + mismatch;
  return {mismatch.empty() && checked >= 50, detail};
}

// 10. The band sweep recovers the admissible interval of the exponential
// model exactly, outside a 0.02 margin around both endpoints.
Outcome criterion_band() {
  auto ex = build("exponential",
                  {{"sigma", 0.2}, {"tau_u", 1.0}, {"tau_v", 1.0}});
  std::string mismatch;
  long checked = 0;
  for (int k = 1; k <= 21; ++k) {
    const double delta = static_cast<double>(k) / 22.0;
    if (std::abs(delta - 0.2) < 0.02 || std::abs(delta - 0.5) < 0.02) continue;
    ++checked;
    const bool inside = delta > 0.2 && delta < 0.5;
    const Verdict v = check_H_prime(ex, delta, kBandSweepGrowthFactor).verdict;
    const Verdict want = inside ? Verdict::satisfied : Verdict::violated;
    if (v != want && mismatch.empty())
      mismatch = "delta=" + fmt("%.4f", delta) + " got " + to_string(v);
  }
  std::string detail = std::to_string(checked) + " sweep points";
  if (!mismatch.empty()) detail += "; first mismatch: " + mismatch;
  return {mismatch.empty() && checked == 19, detail};
}

// 11. Exponentially weighted total variation decays geometrically and
// monotonically once the transient has passed.
Outcome criterion_weighted_decay() {
  auto semi = build("semicircle", {});
  const double delta = 0.4;
  if (check_H_prime(semi, delta).verdict != Verdict::satisfied)
    return {false, "admissibility check failed at delta=0.4"};

  const Eigen::ArrayXd psi = (delta * semi.model.V()).exp();
  const Measure nu = semi.model.nu_V();
  SinkhornState s = init_state(semi.model);
  std::vector<std::pair<long, double>> series;
  for (long n = 0; n <= 40; ++n) {
    series.emplace_back(
        n, weighted_tv(marginal_even(semi.model, s), nu, psi).value);
    s = step(semi.model, s);
  }
  bool monotone = true;
  for (std::size_t i = 5; i + 1 < series.size(); ++i) {
    if (series[i].second < 1e-13) break;
    if (series[i + 1].second > series[i].second * (1.0 + 1e-9))
      monotone = false;
  }
  const double rho_hat = fit_rate(series, 5).rho;
  const bool pass = monotone && rho_hat < 1.0;
  return {pass, "rho_hat " + fmt("%.6f", rho_hat) +
                    (monotone ? ", monotone beyond burn-in"
                              : ", NOT monotone beyond burn-in")};
}

// 12. The quantile coupling matches the exhaustive transport optimum.
Outcome criterion_wasserstein() {
  Rng rng(1212);
  std::uniform_int_distribution<long> size(2, 8);
  std::uniform_real_distribution<double> pt(-3.0, 3.0), wt(0.5, 1.5);
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const long nx = size(rng), ny = size(rng);
    std::vector<double> xs(nx), wx(nx), ys(ny), wy(ny);
    for (long i = 0; i < nx; ++i) {
      xs[i] = pt(rng);
      wx[i] = wt(rng);
    }
    for (long j = 0; j < ny; ++j) {
      ys[j] = pt(rng);
      wy[j] = wt(rng);
    }
    Measure mu1 = random_probability(rng, make_space(xs, wx));
    Measure mu2 = random_probability(rng, make_space(ys, wy));
    const double p = (t % 2 == 0) ? 1.0 : 2.0;
    Eigen::MatrixXd cost(nx, ny);
    for (long i = 0; i < nx; ++i)
      for (long j = 0; j < ny; ++j)
        cost(i, j) = std::pow(std::abs(xs[i] - ys[j]), p);
    const double quantile = std::pow(wasserstein_1d(mu1, mu2, p), p);
    const double oracle = transport_oracle(mu1, mu2, cost);
    worst = std::max(worst, std::abs(quantile - oracle));
  }
  return {worst <= 1e-9, "worst cost gap " + fmt("%.3e", worst)};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> check;
};

const Criterion kCriteria[] = {
    {1, "transition cross-ratio invariance", criterion_hbar},
    {2, "sandwich contraction audit", criterion_sandwich},
    {3, "universal divergence dominance", criterion_dominance},
    {4, "gaussian discretization cross-validation", criterion_gaussian_cross},
    {5, "closed-form decay rates", criterion_rates},
    {6, "entropy-to-bridge series identity", criterion_entropy_series},
    {7, "commutation residuals", criterion_commutation},
    {8, "riccati recursion and noise envelopes", criterion_riccati},
    {9, "growth checks match spectral margins", criterion_cc_agreement},
    {10, "admissible band sweep", criterion_band},
    {11, "weighted total-variation decay", criterion_weighted_decay},
    {12, "quantile transport optimality", criterion_wasserstein},
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  if (argc > 1) {
    only = std::atoi(argv[1]);
    if (only < 1 || only > 12) {
      std::fprintf(stderr, "usage: %s [criterion 1..12]\n", argv[0]);
      return 64;
    }
  }

  int failures = 0;
  for (const Criterion& c : kCriteria) {
    if (only != 0 && c.id != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.check();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    std::printf("criterion %2d: %s  %s (%s) [%.1fs]\n", c.id,
                out.pass ? "PASS" : "FAIL", c.name, out.detail.c_str(), sec);
    std::fflush(stdout);
    if (!out.pass) ++failures;
  }
  return failures;
}
