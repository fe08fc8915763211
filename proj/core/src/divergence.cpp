#include "sk/divergence.hpp"

#include <cmath>
#include <limits>

namespace sk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Densities below this are exact zeros for absolute-continuity purposes.
constexpr double kZeroTol = 1e-300;

bool zero(double x) { return x < kZeroTol; }

double xlogy(double x, double y) { return x == 0.0 ? 0.0 : x * std::log(y); }

void require_same_space(const Measure& a, const Measure& b) {
  if (!same_space(a.space, b.space))
    throw domain_error("measures live on different spaces");
}

}  // namespace

double PhiSpec::operator()(double u, double v) const {
  switch (family) {
    case Family::TV:
      return 0.5 * std::abs(u - v);
    case Family::KL:
      // u log(u/v) - u + v: pointwise nonnegative, sums to KL for
      // equal-mass measures. At u=0 the log term closes to 0, the +v stays.
      if (zero(u)) return v;
      if (zero(v)) return kInf;
      return u * std::log(u / v) - u + v;
    case Family::Hellinger2: {
      const double d = std::sqrt(u) - std::sqrt(v);
      return d * d;
    }
    case Family::AlphaDiv: {
      if (zero(u) && zero(v)) return 0.0;
      const double a = alpha;
      double pow_term;
      if (zero(v))
        pow_term = a > 1.0 ? kInf : 0.0;
      else if (zero(u))
        pow_term = a < 0.0 ? kInf : 0.0;
      else
        pow_term = std::pow(u, a) * std::pow(v, 1.0 - a);
      if (pow_term == kInf) return kInf;
      return (pow_term - a * u + (a - 1.0) * v) / (a * (a - 1.0));
    }
    case Family::JensenShannon: {
      if (zero(u) && zero(v)) return 0.0;
      const double m = 0.5 * (u + v);
      return 0.5 * xlogy(u, u / m) + 0.5 * xlogy(v, v / m);
    }
    case Family::Jeffreys:
      if (zero(u) && zero(v)) return 0.0;
      if (zero(u) || zero(v)) return kInf;
      return (u - v) * std::log(u / v);
  }
  throw domain_error("unknown PhiSpec family");
}

std::string PhiSpec::name() const {
  switch (family) {
    case Family::TV: return "TV";
    case Family::KL: return "KL";
    case Family::Hellinger2: return "Hellinger2";
    case Family::AlphaDiv: return "AlphaDiv(" + std::to_string(alpha) + ")";
    case Family::JensenShannon: return "JensenShannon";
    case Family::Jeffreys: return "Jeffreys";
  }
  return "?";
}

PhiSpec PhiSpec::tv() { return {Family::TV, 0.0}; }
PhiSpec PhiSpec::kl() { return {Family::KL, 0.0}; }
PhiSpec PhiSpec::hellinger2() { return {Family::Hellinger2, 0.0}; }
PhiSpec PhiSpec::alpha_div(double alpha) {
  if (alpha == 0.0 || alpha == 1.0)
    throw domain_error("alpha divergence needs alpha outside {0,1}");
  return {Family::AlphaDiv, alpha};
}
PhiSpec PhiSpec::jensen_shannon() { return {Family::JensenShannon, 0.0}; }
PhiSpec PhiSpec::jeffreys() { return {Family::Jeffreys, 0.0}; }

std::vector<PhiSpec> PhiSpec::all(double alpha) {
  return {tv(), kl(), hellinger2(), alpha_div(alpha), jensen_shannon(),
          jeffreys()};
}

double total_variation(const Measure& mu1, const Measure& mu2) {
  require_same_space(mu1, mu2);
  const Eigen::ArrayXd w = mu1.weights();
  return 0.5 * ((mu1.density - mu2.density).abs() * w).sum();
}

double phi_entropy(const PhiSpec& spec, const Measure& mu1, const Measure& mu2) {
  require_same_space(mu1, mu2);
  const Eigen::ArrayXd w = mu1.weights();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double term = spec(mu1.density(i), mu2.density(i));
    if (term == kInf) return kInf;
    acc += term * w(i);
  }
  return acc;
}

double renyi_divergence(double alpha, const Measure& mu1, const Measure& mu2) {
  if (!(alpha > 0.0) || alpha == 1.0)
    throw domain_error("Renyi divergence needs alpha > 0, alpha != 1");
  require_same_space(mu1, mu2);
  const Eigen::ArrayXd w = mu1.weights();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double u = mu1.density(i), v = mu2.density(i);
    if (zero(u) && zero(v)) continue;
    if (zero(v)) {
      if (alpha > 1.0) return kInf;
      continue;
    }
    if (zero(u)) continue;
    acc += std::pow(u, alpha) * std::pow(v, 1.0 - alpha) * w(i);
  }
  if (acc == 0.0) return alpha < 1.0 ? kInf : -kInf;
  return std::log(acc) / (alpha - 1.0);
}

double hilbert_metric(const Measure& mu1, const Measure& mu2) {
  require_same_space(mu1, mu2);
  double max_r = 0.0, max_inv = 0.0;
  for (Eigen::Index i = 0; i < mu1.density.size(); ++i) {
    const double u = mu1.density(i), v = mu2.density(i);
    const bool zu = zero(u), zv = zero(v);
    if (zu && zv) continue;
    if (zu != zv) return kInf;
    max_r = std::max(max_r, u / v);
    max_inv = std::max(max_inv, v / u);
  }
  if (max_r == 0.0) return 0.0;  // both measures vanish everywhere
  return std::log(max_r * max_inv);
}

WeightedTvResult weighted_tv(const Measure& mu1, const Measure& mu2,
                             const Eigen::ArrayXd& phi) {
  require_same_space(mu1, mu2);
  if (phi.size() != mu1.density.size())
    throw domain_error("weighted_tv: phi size mismatch");
  if ((phi <= 0.0).any())
    throw domain_error("weighted_tv: phi must be positive");
  WeightedTvResult r;
  Eigen::ArrayXd use = phi;
  const double lo = phi.minCoeff();
  if (lo < 0.5) {
    r.rescaled = true;
    r.factor = 0.5 / lo;
    use *= r.factor;
  }
  const Eigen::ArrayXd w = mu1.weights();
  r.value = ((mu1.density - mu2.density).abs() * use * w).sum();
  return r;
}

}  // namespace sk
