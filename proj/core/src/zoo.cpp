#include "sk/zoo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "lse.hpp"
#include "sk/coefficients.hpp"
#include "sk/divergence.hpp"
#include "sk/errors.hpp"

namespace sk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Parameter maps

class Params {
 public:
  Params(const std::string& model, const std::map<std::string, double>& p)
      : model_(model), p_(p) {}

  double get(const std::string& key, double fallback) {
    used_.insert(key);
    auto it = p_.find(key);
    return it == p_.end() ? fallback : it->second;
  }

  double require_positive(const std::string& key, double fallback) {
    const double v = get(key, fallback);
    if (!(v > 0.0))
      throw precondition_error(model_ + ": parameter '" + key +
                               "' must be positive");
    return v;
  }

  long grid(const std::string& key, long fallback) {
    const double v = get(key, static_cast<double>(fallback));
    if (!(v >= 8.0) || v != std::floor(v))
      throw precondition_error(model_ + ": parameter '" + key +
                               "' must be an integer >= 8");
    return static_cast<long>(v);
  }

  void finish() const {
    for (const auto& [key, value] : p_)
      if (!used_.count(key))
        throw precondition_error(model_ + ": unknown parameter '" + key + "'");
  }

 private:
  std::string model_;
  std::map<std::string, double> p_;
  std::set<std::string> used_;
};

// ---------------------------------------------------------------------------
// Quantile truncation windows

struct Window {
  double lo = 0.0, hi = 1.0;
};

// Mass of e^{-U} on [lo, hi] by midpoint quadrature in log space.
double log_mass(const std::function<double(double)>& u, double lo, double hi,
                long n) {
  const double h = (hi - lo) / static_cast<double>(n);
  Eigen::ArrayXd terms(n);
  for (long k = 0; k < n; ++k)
    terms(k) = -u(lo + (static_cast<double>(k) + 0.5) * h) + std::log(h);
  return detail::logsumexp(terms);
}

// Window whose complement carries at most `tail` of the e^{-U} mass.
// The reference bracket doubles until the added shells stop contributing;
// the edges come from a cumulative pass, rounded outward by one cell.
Window quantile_window(const std::function<double(double)>& u, DomainKind kind,
                       double tail = 1e-10) {
  const bool two_sided = kind == DomainKind::line;
  double r = 1.0;
  double prev = -kInf;
  for (int iter = 0; iter < 60; ++iter) {
    const double cur = log_mass(u, two_sided ? -r : 0.0, r, 1 << 14);
    if (std::isfinite(cur) && std::isfinite(prev)) {
      const double gain = cur - prev;
      if (gain < 1e-13 && iter > 2) break;
    }
    prev = cur;
    r *= 2.0;
  }

  const long n = 1 << 17;
  const double lo_ref = two_sided ? -r : 0.0;
  const double h = (r - lo_ref) / static_cast<double>(n);
  Eigen::ArrayXd cell(n);
  for (long k = 0; k < n; ++k)
    cell(k) = -u(lo_ref + (static_cast<double>(k) + 0.5) * h) + std::log(h);
  const double log_total = detail::logsumexp(cell);
  if (!std::isfinite(log_total))
    throw numerical_error("quantile_window: marginal mass degenerated");

  Window w;
  const double lo_target = (two_sided || kind == DomainKind::half_line_open)
                               ? 0.5 * tail
                               : 0.0;
  const double hi_target = 1.0 - 0.5 * tail;
  double acc = 0.0;
  long lo_cell = 0, hi_cell = n - 1;
  bool lo_found = lo_target == 0.0;
  for (long k = 0; k < n; ++k) {
    acc += std::exp(cell(k) - log_total);
    if (!lo_found && acc > lo_target) {
      lo_cell = k;
      lo_found = true;
    }
    if (acc >= hi_target) {
      hi_cell = k;
      break;
    }
  }
  // Outward rounding keeps the discarded mass below the target.
  w.lo = lo_ref + static_cast<double>(lo_cell) * h;
  w.hi = lo_ref + static_cast<double>(hi_cell + 1) * h;
  if (!two_sided) w.lo = std::max(w.lo, 0.0);
  return w;
}

// ---------------------------------------------------------------------------
// Named specs

ZooSpec triangular_spec(Params& p) {
  const double au = p.require_positive("a_u", 2.0);
  const double bu = p.require_positive("b_u", 2.0);
  const double av = p.require_positive("a_v", 2.0);
  const double bv = p.require_positive("b_v", 2.0);
  const long n = p.grid("n", 64);
  ZooSpec s;
  s.name = "triangular";
  s.domain_x = s.domain_y = DomainKind::interval01;
  s.x_lo = s.y_lo = 0.0;
  s.x_hi = s.y_hi = 1.0;
  s.nx = s.ny = n;
  s.U = [au, bu](double x) { return -au * std::log(x) - bu * std::log(1 - x); };
  s.V = [av, bv](double y) { return -av * std::log(y) - bv * std::log(1 - y); };
  // Normalizer of 1 - |x-y| on (0,1); the stated [1/4,1/2] bound belongs to
  // the |x-y| barrier kernel, so the bounds here are [1/2, 3/4].
  s.W = [](double x, double y) {
    return -std::log(1.0 - std::abs(x - y)) +
           std::log(0.5 + x * (1.0 - x));
  };
  return s;
}

ZooSpec barrier_spec(Params& p) {
  const double au = p.require_positive("a_u", 2.0);
  const double bu = p.require_positive("b_u", 2.0);
  const double av = p.require_positive("a_v", 2.0);
  const double bv = p.require_positive("b_v", 2.0);
  const long n = p.grid("n", 64);
  ZooSpec s;
  s.name = "barrier";
  s.domain_x = s.domain_y = DomainKind::interval01;
  s.x_lo = s.y_lo = 0.0;
  s.x_hi = s.y_hi = 1.0;
  s.nx = s.ny = n;
  s.U = [au, bu](double x) { return -au * std::log(x) - bu * std::log(1 - x); };
  s.V = [av, bv](double y) { return -av * std::log(y) - bv * std::log(1 - y); };
  s.W = [](double x, double y) {
    if (x == y) return kInf;
    return -std::log(std::abs(x - y)) + std::log(0.5 - x * (1.0 - x));
  };
  s.out_of_theory = true;
  s.note = "energy barrier on the diagonal; stability outside the theory";
  return s;
}

ZooSpec semicircle_spec(Params& p) {
  const double au = p.require_positive("a_u", 2.0);
  const double bu = p.require_positive("b_u", 2.0);
  const double av = p.require_positive("a_v", 2.0);
  const double bv = p.require_positive("b_v", 2.0);
  const long n = p.grid("n", 128);
  ZooSpec s;
  s.name = "semicircle";
  s.domain_x = s.domain_y = DomainKind::interval01;
  s.x_lo = s.y_lo = 0.0;
  s.x_hi = s.y_hi = 1.0;
  s.nx = s.ny = n;
  s.U = [au, bu](double x) { return -au * std::log(x) - bu * std::log(1 - x); };
  s.V = [av, bv](double y) { return -av * std::log(y) - bv * std::log(1 - y); };
  // q(x) has no closed form; a cached fine quadrature serves row-major scans.
  auto q_of = [](double x) {
    const long m = 1 << 13;
    const double h = 1.0 / static_cast<double>(m);
    double acc = 0.0;
    for (long k = 0; k < m; ++k) {
      const double y = (static_cast<double>(k) + 0.5) * h;
      const double d = 1.0 - (x - y) * (x - y);
      if (d > 0.0) acc += std::sqrt(d) * h;
    }
    return acc;
  };
  auto cache = std::make_shared<std::pair<double, double>>(
      std::numeric_limits<double>::quiet_NaN(), 0.0);
  s.W = [q_of, cache](double x, double y) {
    const double d = 1.0 - (x - y) * (x - y);
    if (d <= 0.0) return kInf;
    if (!(cache->first == x)) *cache = {x, q_of(x)};
    return -0.5 * std::log(d) + std::log(cache->second);
  };
  return s;
}

// Bi-Laplace kernel restricted to the closed half-line, exponential marginals.
ZooSpec exponential_spec(Params& p) {
  const double tu = p.require_positive("tau_u", 1.0);
  const double tv = p.require_positive("tau_v", 1.0);
  const double sg = p.require_positive("sigma", 0.2);
  const long n = p.grid("n", 401);
  ZooSpec s;
  s.name = "exponential";
  s.domain_x = s.domain_y = DomainKind::half_line_closed;
  s.nx = s.ny = n;
  s.U = [tu](double x) { return tu * x - std::log(tu); };
  s.V = [tv](double y) { return tv * y - std::log(tv); };
  // Row normalizer of e^{-sigma |x-y|} on [0, inf) is (2 - e^{-sigma x})/sigma.
  s.W = [sg](double x, double y) {
    return sg * std::abs(x - y) + std::log(2.0 - std::exp(-sg * x)) -
           std::log(sg);
  };
  const Window wx = quantile_window(s.U, s.domain_x);
  const Window wy = quantile_window(s.V, s.domain_y);
  s.x_lo = wx.lo;
  s.x_hi = wx.hi;
  s.y_lo = wy.lo;
  s.y_hi = wy.hi;
  return s;
}

ZooSpec weibull_spec(Params& p) {
  const double au = p.get("a_u", 1.0);
  const double bu = p.require_positive("b_u", 1.0);
  const double av = p.get("a_v", 1.0);
  const double bv = p.require_positive("b_v", 1.0);
  const double sg = p.require_positive("sigma", 0.2);
  const long n = p.grid("n", 401);
  if (!(au > -1.0) || !(av > -1.0))
    throw precondition_error("weibull: exponents must exceed -1");
  ZooSpec s;
  s.name = "weibull";
  s.domain_x = au > 0.0 ? DomainKind::half_line_open : DomainKind::half_line_closed;
  s.domain_y = av > 0.0 ? DomainKind::half_line_open : DomainKind::half_line_closed;
  s.nx = s.ny = n;
  s.U = [au, bu](double x) {
    return std::pow(x / bu, au + 1.0) - au * std::log(x);
  };
  s.V = [av, bv](double y) {
    return std::pow(y / bv, av + 1.0) - av * std::log(y);
  };
  s.W = [sg](double x, double y) {
    return sg * std::abs(x - y) + std::log(2.0 - std::exp(-sg * x)) -
           std::log(sg);
  };
  if (au < 0.0 || av < 0.0) {
    s.out_of_theory = true;
    s.note = "shape below one: sub-level sets are not compact";
  }
  const Window wx = quantile_window(s.U, s.domain_x);
  const Window wy = quantile_window(s.V, s.domain_y);
  s.x_lo = wx.lo;
  s.x_hi = wx.hi;
  s.y_lo = wy.lo;
  s.y_hi = wy.hi;
  return s;
}

ZooSpec cauchy_spec(Params& p) {
  const double a = p.require_positive("a", 1.0);
  const double tu = p.require_positive("tau_u", 1.0);
  const double pu = p.require_positive("p_u", 6.0);
  const double tv = p.require_positive("tau_v", 1.0);
  const double pv = p.require_positive("p_v", 6.0);
  const long n = p.grid("n", 401);
  if (!(pu > 1.0) || !(pv > 1.0))
    throw precondition_error("cauchy: tail exponents must exceed 1");
  ZooSpec s;
  s.name = "cauchy";
  s.domain_x = s.domain_y = DomainKind::line;
  s.nx = s.ny = n;
  s.U = [tu, pu](double x) {
    return std::log1p(tu * std::pow(std::abs(x), pu));
  };
  s.V = [tv, pv](double y) {
    return std::log1p(tv * std::pow(std::abs(y), pv));
  };
  s.W = [a](double x, double y) {
    const double z = (x - y) / a;
    return std::log(a * M_PI) + std::log1p(z * z);
  };
  const Window wx = quantile_window(s.U, s.domain_x);
  const Window wy = quantile_window(s.V, s.domain_y);
  s.x_lo = wx.lo;
  s.x_hi = wx.hi;
  s.y_lo = wy.lo;
  s.y_hi = wy.hi;
  return s;
}

// Polynomial-growth marginals with the bi-Laplace kernel on the line.
ZooSpec bilaplace_spec(Params& p) {
  const double tu = p.require_positive("tau_u", 1.0);
  const double pu = p.require_positive("p_u", 1.0);
  const double tv = p.require_positive("tau_v", 1.0);
  const double pv = p.require_positive("p_v", 1.0);
  const double sg = p.require_positive("sigma", 0.2);
  const long n = p.grid("n", 401);
  ZooSpec s;
  s.name = "bilaplace";
  s.domain_x = s.domain_y = DomainKind::line;
  s.nx = s.ny = n;
  s.U = [tu, pu](double x) { return tu * std::pow(std::abs(x), pu); };
  s.V = [tv, pv](double y) { return tv * std::pow(std::abs(y), pv); };
  s.W = [sg](double x, double y) {
    return sg * std::abs(x - y) + std::log(2.0 / sg);
  };
  const Window wx = quantile_window(s.U, s.domain_x);
  const Window wy = quantile_window(s.V, s.domain_y);
  s.x_lo = wx.lo;
  s.x_hi = wx.hi;
  s.y_lo = wy.lo;
  s.y_hi = wy.hi;
  return s;
}

ZooSpec gaussian_spec(Params& p) {
  const double m = p.get("m", 0.0);
  const double sig = p.require_positive("sigma", 1.0);
  const double mb = p.get("m_bar", 0.0);
  const double sb = p.require_positive("sigma_bar", 1.0);
  const double al = p.get("alpha", 0.0);
  const double be = p.get("beta", 1.0);
  const double ta = p.require_positive("tau", 1.0);
  const long n = p.grid("n", 401);
  if (be == 0.0) throw precondition_error("gaussian: beta must be nonzero");
  ZooSpec s;
  s.name = "gaussian";
  s.domain_x = s.domain_y = DomainKind::line;
  s.nx = s.ny = n;
  s.U = [m, sig](double x) {
    return 0.5 * (x - m) * (x - m) / sig + 0.5 * std::log(2.0 * M_PI * sig);
  };
  s.V = [mb, sb](double y) {
    return 0.5 * (y - mb) * (y - mb) / sb + 0.5 * std::log(2.0 * M_PI * sb);
  };
  s.W = [al, be, ta](double x, double y) {
    const double r = y - al - be * x;
    return 0.5 * r * r / ta + 0.5 * std::log(2.0 * M_PI * ta);
  };
  const Window wx = quantile_window(s.U, s.domain_x);
  const Window wy = quantile_window(s.V, s.domain_y);
  s.x_lo = wx.lo;
  s.x_hi = wx.hi;
  s.y_lo = wy.lo;
  s.y_hi = wy.hi;
  return s;
}

// ---------------------------------------------------------------------------
// Growth flags

enum class Trend { up, down, flat };

struct ArmView {
  Eigen::ArrayXd toward_boundary;  // slab values ordered inward -> outward
};

std::vector<ArmView> required_arms(const Eigen::ArrayXd& values,
                                   DomainKind kind) {
  const Eigen::Index n = values.size();
  const Eigen::Index k = std::max<Eigen::Index>(1, n / 20);
  std::vector<ArmView> arms;
  const bool left = kind != DomainKind::half_line_closed;
  if (left) {
    Eigen::ArrayXd slab(k);
    for (Eigen::Index t = 0; t < k; ++t) slab(t) = values(k - 1 - t);
    arms.push_back({std::move(slab)});
  }
  {
    Eigen::ArrayXd slab(k);
    for (Eigen::Index t = 0; t < k; ++t) slab(t) = values(n - k + t);
    arms.push_back({std::move(slab)});
  }
  return arms;
}

Trend arm_trend(const Eigen::ArrayXd& slab, double jitter) {
  const double inner = slab(0);
  const double outer = slab(slab.size() - 1);
  if (outer > inner + jitter) return Trend::up;
  if (outer < inner - jitter) return Trend::down;
  return Trend::flat;
}

bool arm_monotone_up(const Eigen::ArrayXd& slab, double jitter) {
  for (Eigen::Index t = 0; t + 1 < slab.size(); ++t)
    if (slab(t + 1) < slab(t) - jitter) return false;
  return true;
}

double interior_median(const Eigen::ArrayXd& values) {
  const Eigen::Index n = values.size();
  const Eigen::Index k = std::max<Eigen::Index>(1, n / 20);
  std::vector<double> v(values.data() + k, values.data() + (n - k));
  if (v.empty()) return 0.0;
  std::nth_element(v.begin(), v.begin() + static_cast<long>(v.size() / 2),
                   v.end());
  return v[v.size() / 2];
}

GrowthFlag growth_flag(const Eigen::ArrayXd& profile, DomainKind kind,
                       double factor) {
  GrowthFlag g;
  const double lo = profile.minCoeff();
  const double hi = profile.maxCoeff();
  const double osc = hi - lo;
  if (osc <= 1e-9 * (std::abs(hi) + std::abs(lo) + 1.0)) {
    g.flat = true;
    return g;
  }
  const Eigen::ArrayXd shifted = profile - lo;
  const double jitter = 1e-9 * osc;
  const double med = interior_median(shifted);
  const auto arms = required_arms(shifted, kind);

  g.growing = true;
  g.monotone_arms = true;
  g.outer_to_interior = kInf;
  for (const ArmView& arm : arms) {
    const double mean = arm.toward_boundary.mean();
    const double ratio = med > 0.0 ? mean / med : (mean > 0.0 ? kInf : 0.0);
    g.outer_to_interior = std::min(g.outer_to_interior, ratio);
    const bool mono = arm_monotone_up(arm.toward_boundary, jitter);
    if (!mono) g.monotone_arms = false;
    if (!(mono && ratio >= factor)) g.growing = false;
    const Trend t = arm_trend(arm.toward_boundary, jitter);
    const double outer = arm.toward_boundary(arm.toward_boundary.size() - 1);
    if (t == Trend::down || outer <= med + jitter) g.definite_fail = true;
  }
  return g;
}

}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::satisfied: return "satisfied";
    case Verdict::violated: return "violated";
    default: return "inconclusive";
  }
}

ZooModel build(const ZooSpec& spec) {
  if (spec.nx < 8 || spec.ny < 8)
    throw precondition_error("build: grids need at least 8 points");
  if (!(spec.x_hi > spec.x_lo) || !(spec.y_hi > spec.y_lo))
    throw precondition_error("build: empty truncation window");
  if (!spec.U || !spec.V || !spec.W)
    throw precondition_error("build: missing evaluator");

  const auto gx = midpoint_grid(spec.x_lo, spec.x_hi,
                                static_cast<std::size_t>(spec.nx), "x");
  const auto gy = midpoint_grid(spec.y_lo, spec.y_hi,
                                static_cast<std::size_t>(spec.ny), "y");
  Eigen::ArrayXd u(spec.nx), v(spec.ny);
  for (long i = 0; i < spec.nx; ++i) {
    u(i) = spec.U(gx->points[static_cast<std::size_t>(i)]);
    if (!std::isfinite(u(i)))
      throw precondition_error("build: U not finite inside the window");
  }
  for (long j = 0; j < spec.ny; ++j) {
    v(j) = spec.V(gy->points[static_cast<std::size_t>(j)]);
    if (!std::isfinite(v(j)))
      throw precondition_error("build: V not finite inside the window");
  }
  Eigen::MatrixXd w(spec.nx, spec.ny);
  for (long i = 0; i < spec.nx; ++i) {
    const double xi = gx->points[static_cast<std::size_t>(i)];
    for (long j = 0; j < spec.ny; ++j)
      w(i, j) = spec.W(xi, gy->points[static_cast<std::size_t>(j)]);
  }
  return ZooModel{TransportModel(gx, gy, std::move(u), std::move(v),
                                 std::move(w), spec.name),
                  spec};
}

ZooModel build(const std::string& name,
               const std::map<std::string, double>& params) {
  Params p(name, params);
  ZooSpec spec;
  if (name == "triangular")
    spec = triangular_spec(p);
  else if (name == "barrier")
    spec = barrier_spec(p);
  else if (name == "semicircle")
    spec = semicircle_spec(p);
  else if (name == "exponential")
    spec = exponential_spec(p);
  else if (name == "weibull")
    spec = weibull_spec(p);
  else if (name == "cauchy")
    spec = cauchy_spec(p);
  else if (name == "bilaplace")
    spec = bilaplace_spec(p);
  else if (name == "gaussian")
    spec = gaussian_spec(p);
  else
    throw domain_error("build: unknown model '" + name + "'");
  p.finish();
  return build(spec);
}

ZooModel refined(const ZooModel& zm, double factor) {
  if (!(factor > 1.0)) throw precondition_error("refined: factor must exceed 1");
  ZooSpec spec = zm.spec;
  spec.nx = static_cast<long>(std::lround(static_cast<double>(spec.nx) * factor));
  spec.ny = static_cast<long>(std::lround(static_cast<double>(spec.ny) * factor));
  return build(spec);
}

IntegratedCosts integrated_costs(const TransportModel& model) {
  const Eigen::ArrayXd lam =
      model.lambda_U().density * model.lambda_U().weights();
  const Eigen::ArrayXd nu = model.nu_V().density * model.nu_V().weights();
  const Eigen::Index nx = model.W().rows(), ny = model.W().cols();

  IntegratedCosts out;
  out.W_U = Eigen::ArrayXd::Zero(ny);
  out.W_V = Eigen::ArrayXd::Zero(nx);
  Eigen::ArrayXd cov_col = Eigen::ArrayXd::Zero(ny);
  Eigen::ArrayXd cov_row = Eigen::ArrayXd::Zero(nx);
  for (Eigen::Index i = 0; i < nx; ++i)
    for (Eigen::Index j = 0; j < ny; ++j) {
      if (model.masked(i, j)) continue;
      const double wij = model.W()(i, j);
      out.W_U(j) += lam(i) * wij;
      out.W_V(i) += nu(j) * wij;
      cov_col(j) += lam(i);
      cov_row(i) += nu(j);
    }
  out.coverage_x = cov_row.minCoeff();
  out.coverage_y = cov_col.minCoeff();
  return out;
}

LyapunovProfile lyapunov_profile(const ZooModel& zm, double delta,
                                 double growth_factor) {
  if (!(delta >= 0.0 && delta < 1.0))
    throw domain_error("lyapunov_profile: delta must lie in [0, 1)");
  const IntegratedCosts ic = integrated_costs(zm.model);
  LyapunovProfile lp;
  lp.profile_x = delta * zm.model.U() - ic.W_V;
  lp.profile_y = delta * zm.model.V() - ic.W_U;
  lp.flag_x = growth_flag(lp.profile_x, zm.spec.domain_x, growth_factor);
  lp.flag_y = growth_flag(lp.profile_y, zm.spec.domain_y, growth_factor);
  return lp;
}

namespace {

struct SideIntegrals {
  double log_integral = 0.0;
  bool decays = false;  // integrand trends down on every required arm
  bool diverges = false;  // integrand trends up on a required arm
};

SideIntegrals side_integrals(const Eigen::ArrayXd& log_integrand,
                             const Eigen::ArrayXd& weights, DomainKind kind) {
  SideIntegrals si;
  si.log_integral = detail::logsumexp(log_integrand + weights.log());
  const double lo = log_integrand.minCoeff();
  const double hi = log_integrand.maxCoeff();
  const double jitter = 1e-9 * (hi - lo) + 1e-12;
  si.decays = true;
  for (const ArmView& arm : required_arms(log_integrand, kind)) {
    const Trend t = arm_trend(arm.toward_boundary, jitter);
    if (t == Trend::up) si.diverges = true;
    if (t != Trend::down) si.decays = false;
  }
  return si;
}

ConditionReport condition_check(const ZooModel& zm, double delta, bool prime,
                                double growth_factor) {
  ConditionReport rep;
  rep.delta = delta;
  rep.prime = prime;

  if (prime && delta >= 0.5) {
    rep.verdict = Verdict::violated;
    rep.note = "delta outside (0, 1/2): no admissible band";
    return rep;
  }

  auto evaluate = [&](const ZooModel& m, ConditionReport& r, bool flags) {
    const IntegratedCosts ic = integrated_costs(m.model);
    const double d = prime ? 2.0 * delta : delta;
    Eigen::ArrayXd log_ix = -(1.0 - d) * m.model.U();
    Eigen::ArrayXd log_iy = -(1.0 - d) * m.model.V();
    if (!prime) {
      log_ix += ic.W_V;
      log_iy += ic.W_U;
    }
    const SideIntegrals sx = side_integrals(
        log_ix, m.model.lambda_U().weights(), m.spec.domain_x);
    const SideIntegrals sy =
        side_integrals(log_iy, m.model.nu_V().weights(), m.spec.domain_y);
    if (flags) {
      r.integral_x = std::exp(sx.log_integral);
      r.integral_y = std::exp(sy.log_integral);
      r.integrand_decays_x = sx.decays;
      r.integrand_decays_y = sy.decays;
      const LyapunovProfile lp = lyapunov_profile(m, delta, growth_factor);
      r.growth_x = lp.flag_x;
      r.growth_y = lp.flag_y;
    }
    return std::make_pair(sx, sy);
  };

  const auto [sx, sy] = evaluate(zm, rep, true);
  const auto [rx, ry] = evaluate(refined(zm), rep, false);
  rep.refine_change_x = std::abs(std::expm1(rx.log_integral - sx.log_integral));
  rep.refine_change_y = std::abs(std::expm1(ry.log_integral - sy.log_integral));

  if (zm.spec.out_of_theory) {
    rep.verdict = Verdict::violated;
    rep.note = zm.spec.note.empty() ? "out-of-theory regime" : zm.spec.note;
    return rep;
  }

  const bool hard_fail = rep.growth_x.definite_fail ||
                         rep.growth_y.definite_fail || sx.diverges ||
                         sy.diverges;
  if (hard_fail) {
    rep.verdict = Verdict::violated;
    rep.note = "sub-level compactness or integrability fails at a boundary";
    return rep;
  }
  const bool stable = rep.refine_change_x <= 0.01 && rep.refine_change_y <= 0.01 &&
                      std::isfinite(rep.integral_x) &&
                      std::isfinite(rep.integral_y);
  if (rep.growth_x.growing && rep.growth_y.growing && rep.integrand_decays_x &&
      rep.integrand_decays_y && stable) {
    rep.verdict = Verdict::satisfied;
    return rep;
  }
  rep.verdict = Verdict::inconclusive;
  rep.note = "signals mixed: growth/decay flags or refinement stability";
  return rep;
}

}  // namespace

ConditionReport check_H_delta(const ZooModel& zm, double delta,
                              double growth_factor) {
  if (!(delta > 0.0 && delta < 1.0))
    throw domain_error("check_H_delta: delta must lie in (0, 1)");
  return condition_check(zm, delta, /*prime=*/false, growth_factor);
}

ConditionReport check_H_prime(const ZooModel& zm, double delta,
                              double growth_factor) {
  if (!(delta > 0.0 && delta < 1.0))
    throw domain_error("check_H_prime: delta must lie in (0, 1)");
  return condition_check(zm, delta, /*prime=*/true, growth_factor);
}

Verdict mixture_check(const std::vector<MixtureComponent>& components,
                      const std::vector<double>& weights, double delta) {
  if (components.empty())
    throw domain_error("mixture_check: no components");
  if (weights.size() != components.size())
    throw precondition_error("mixture_check: weight count mismatch");
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0))
      throw precondition_error("mixture_check: weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw precondition_error("mixture_check: weights must sum to 1");

  bool any_gaussian = false, any_generic = false;
  for (const MixtureComponent& c : components) {
    if (c.gaussian.has_value() == c.generic.has_value())
      throw precondition_error(
          "mixture_check: each component needs exactly one block");
    (c.gaussian ? any_gaussian : any_generic) = true;
  }
  if (any_gaussian && any_generic)
    throw precondition_error(
        "mixture_check: components must share a kernel; Gaussian and grid "
        "blocks cannot mix");

  if (any_gaussian) {
    const GaussianEOTModel& ref = *components.front().gaussian;
    for (const MixtureComponent& c : components) {
      const GaussianEOTModel& g = *c.gaussian;
      if ((g.alpha - ref.alpha).cwiseAbs().maxCoeff() > 1e-12 ||
          (g.beta - ref.beta).cwiseAbs().maxCoeff() > 1e-12 ||
          (g.tau - ref.tau).cwiseAbs().maxCoeff() > 1e-12)
        throw precondition_error(
            "mixture_check: Gaussian components must share (alpha, beta, tau)");
    }
    for (const MixtureComponent& ci : components)
      for (const MixtureComponent& cj : components) {
        GaussianEOTModel cross = *ci.gaussian;
        cross.m_bar = cj.gaussian->m_bar;
        cross.sigma_bar = cj.gaussian->sigma_bar;
        if (!check_cc(cross, delta).holds) return Verdict::violated;
      }
    return Verdict::satisfied;
  }

  bool all_satisfied = true;
  for (const MixtureComponent& ci : components)
    for (const MixtureComponent& cj : components) {
      ZooSpec cross = ci.generic->spec;
      cross.name = ci.generic->spec.name + "*" + cj.generic->spec.name;
      cross.V = cj.generic->spec.V;
      cross.domain_y = cj.generic->spec.domain_y;
      cross.y_lo = cj.generic->spec.y_lo;
      cross.y_hi = cj.generic->spec.y_hi;
      cross.ny = cj.generic->spec.ny;
      const ConditionReport r = check_H_delta(build(cross), delta);
      if (r.verdict == Verdict::violated) return Verdict::violated;
      if (r.verdict != Verdict::satisfied) all_satisfied = false;
    }
  return all_satisfied ? Verdict::satisfied : Verdict::inconclusive;
}

std::vector<MixtureComponent> kde_components(const std::vector<double>& centers,
                                             double sigma, double t) {
  if (centers.empty()) throw domain_error("kde_components: no centers");
  if (!(sigma > 0.0) || !(t > 0.0))
    throw precondition_error("kde_components: sigma and t must be positive");
  std::vector<MixtureComponent> comps;
  comps.reserve(centers.size());
  for (double c : centers) {
    MixtureComponent mc;
    mc.gaussian = scalar_gaussian_model(c, sigma, c, sigma, 0.0, 1.0, t);
    comps.push_back(std::move(mc));
  }
  return comps;
}

DriftProbe drift_minorization_probe(const TransportModel& model,
                                    const SinkhornState& state,
                                    const Eigen::ArrayXd& phi,
                                    const Eigen::ArrayXd& psi,
                                    const std::vector<double>& eps_grid,
                                    const std::vector<double>& r_grid) {
  const Eigen::Index nx = static_cast<Eigen::Index>(model.X()->size());
  const Eigen::Index ny = static_cast<Eigen::Index>(model.Y()->size());
  if (phi.size() != nx || psi.size() != ny)
    throw precondition_error("drift_minorization_probe: weight sizes mismatch");
  if ((phi <= 0).any() || (psi <= 0).any())
    throw precondition_error("drift_minorization_probe: weights must be positive");

  Eigen::ArrayXd ph = phi, ps = psi;
  if (ph.minCoeff() < 1.0) ph *= 1.0 / ph.minCoeff();
  if (ps.minCoeff() < 1.0) ps *= 1.0 / ps.minCoeff();

  DriftProbe probe;
  Eigen::Index at = 0;
  ph.minCoeff(&at);
  if (at == 0 || at == nx - 1)
    probe.note = "phi attains its minimum on the truncation boundary";
  ps.minCoeff(&at);
  if (at == 0 || at == ny - 1) {
    if (!probe.note.empty()) probe.note += "; ";
    probe.note += "psi attains its minimum on the truncation boundary";
  }

  const Kernel s_even = forward_transition(model, state);
  const Kernel s_odd = backward_transition(model, state);
  const GibbsLoop loops = gibbs_loop(model, state);

  auto apply = [](const Kernel& k, const Eigen::ArrayXd& f) {
    const Eigen::ArrayXd wt = Eigen::Map<const Eigen::ArrayXd>(
        k.target->weights.data(), static_cast<Eigen::Index>(k.target->size()));
    return Eigen::ArrayXd((k.density * (f * wt).matrix()).array());
  };
  auto curve = [&eps_grid](const Eigen::ArrayXd& kf, const Eigen::ArrayXd& g) {
    DriftCurve c;
    c.eps = eps_grid;
    c.c.reserve(eps_grid.size());
    for (double e : eps_grid)
      c.c.push_back(std::max(0.0, (kf - e * g).maxCoeff()));
    return c;
  };

  probe.step_even = curve(apply(s_even, ps), ph);   // on X
  probe.step_odd = curve(apply(s_odd, ph), ps);     // on Y
  probe.loop_even = curve(apply(loops.even, ps), ps);  // on Y
  probe.loop_odd = curve(apply(loops.odd, ph), ph);    // on X

  auto restricted_eps = [](const Kernel& k, const std::vector<Eigen::Index>& rows) {
    if (rows.size() < 2) return 1.0;
    const Eigen::ArrayXd wt = Eigen::Map<const Eigen::ArrayXd>(
        k.target->weights.data(), static_cast<Eigen::Index>(k.target->size()));
    double chi = 0.0;
    for (std::size_t a = 0; a + 1 < rows.size(); ++a)
      for (std::size_t b = a + 1; b < rows.size(); ++b) {
        const double tv = 0.5 * ((k.density.row(rows[a]) - k.density.row(rows[b]))
                                     .transpose()
                                     .array()
                                     .abs() *
                                 wt)
                                    .sum();
        chi = std::max(chi, tv);
      }
    return 1.0 - chi;
  };

  for (double r : r_grid) {
    MinorizationPoint pt;
    pt.r = r;
    std::vector<Eigen::Index> rows_x, rows_y;
    for (Eigen::Index i = 0; i < nx; ++i)
      if (ph(i) <= r) rows_x.push_back(i);
    for (Eigen::Index j = 0; j < ny; ++j)
      if (ps(j) <= r) rows_y.push_back(j);
    pt.rows_even = static_cast<long>(rows_x.size());
    pt.rows_odd = static_cast<long>(rows_y.size());
    if (rows_x.empty() && rows_y.empty()) {
      pt.skipped = true;
      pt.note = "empty sublevel sets at this radius";
    } else {
      if (rows_x.empty() || rows_y.empty()) {
        pt.skipped = true;
        pt.note = rows_x.empty() ? "empty X-side sublevel set"
                                 : "empty Y-side sublevel set";
      }
      if (!rows_x.empty()) pt.eps_even = restricted_eps(s_even, rows_x);
      if (!rows_y.empty()) pt.eps_odd = restricted_eps(s_odd, rows_y);
    }
    probe.minorization.push_back(std::move(pt));
  }
  return probe;
}

}  // namespace sk
