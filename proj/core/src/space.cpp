#include "sk/space.hpp"

#include <cmath>
#include <set>
#include <utility>

namespace sk {

SpacePtr make_space(std::vector<double> points, std::vector<double> weights,
                    std::string label) {
  if (points.empty()) throw domain_error("space needs at least one point");
  if (points.size() != weights.size())
    throw domain_error("points/weights size mismatch");
  for (double w : weights)
    if (!(w > 0.0) || !std::isfinite(w))
      throw domain_error("base weights must be positive and finite");
  std::set<double> distinct(points.begin(), points.end());
  if (distinct.size() != points.size())
    throw domain_error("points must be pairwise distinct");
  auto sp = std::make_shared<DiscreteSpace>();
  sp->points = std::move(points);
  sp->weights = std::move(weights);
  sp->label = std::move(label);
  return sp;
}

SpacePtr midpoint_grid(double lo, double hi, std::size_t n, std::string label) {
  if (!(lo < hi)) throw domain_error("midpoint_grid needs lo < hi");
  if (n == 0) throw domain_error("midpoint_grid needs n >= 1");
  const double h = (hi - lo) / static_cast<double>(n);
  std::vector<double> pts(n), wts(n, h);
  for (std::size_t i = 0; i < n; ++i)
    pts[i] = lo + h * (static_cast<double>(i) + 0.5);
  return make_space(std::move(pts), std::move(wts), std::move(label));
}

bool same_space(const DiscreteSpace& a, const DiscreteSpace& b) {
  if (&a == &b) return true;
  return a.points == b.points && a.weights == b.weights;
}

bool same_space(const SpacePtr& a, const SpacePtr& b) {
  if (!a || !b) return false;
  return same_space(*a, *b);
}

double Measure::mass() const {
  double m = 0.0;
  for (Eigen::Index i = 0; i < density.size(); ++i)
    m += density(i) * space->weights[static_cast<std::size_t>(i)];
  return m;
}

bool Measure::is_probability(double tol) const {
  return std::abs(mass() - 1.0) <= tol;
}

Eigen::ArrayXd Measure::weights() const {
  return Eigen::Map<const Eigen::ArrayXd>(space->weights.data(),
                                          static_cast<Eigen::Index>(space->weights.size()));
}

Measure make_measure(SpacePtr space, Eigen::ArrayXd density) {
  if (!space) throw domain_error("measure needs a space");
  if (static_cast<std::size_t>(density.size()) != space->size())
    throw domain_error("density size does not match space");
  if ((density < 0.0).any())
    throw domain_error("measure density must be nonnegative");
  return Measure{std::move(space), std::move(density)};
}

Measure normalized(const Measure& mu) {
  const double m = mu.mass();
  if (!(m > 0.0) || !std::isfinite(m))
    throw numerical_error("cannot normalize measure with mass " +
                          std::to_string(m));
  return Measure{mu.space, mu.density / m};
}

Eigen::ArrayXd Kernel::row_integrals() const {
  const Eigen::ArrayXd wy = Eigen::Map<const Eigen::ArrayXd>(
      target->weights.data(), static_cast<Eigen::Index>(target->weights.size()));
  return (density.array().rowwise() * wy.transpose()).rowwise().sum();
}

double Kernel::markov_defect() const {
  return (row_integrals() - 1.0).abs().maxCoeff();
}

Measure Kernel::row(Eigen::Index i) const {
  return Measure{target, density.row(i).transpose().array()};
}

Kernel make_kernel(SpacePtr source, SpacePtr target, Eigen::MatrixXd density,
                   bool require_markov, double tol) {
  if (!source || !target) throw domain_error("kernel needs source and target");
  if (static_cast<std::size_t>(density.rows()) != source->size() ||
      static_cast<std::size_t>(density.cols()) != target->size())
    throw domain_error("kernel table shape does not match spaces");
  if ((density.array() < 0.0).any())
    throw domain_error("kernel density must be nonnegative");
  Kernel k{std::move(source), std::move(target), std::move(density)};
  if (require_markov && k.markov_defect() > tol)
    throw domain_error("kernel rows do not integrate to 1 (defect " +
                       std::to_string(k.markov_defect()) + ")");
  return k;
}

Measure apply_kernel(const Measure& mu, const Kernel& k) {
  if (!same_space(mu.space, k.source))
    throw domain_error("apply_kernel: measure lives on a different space");
  const Eigen::ArrayXd wx = mu.weights();
  Eigen::VectorXd lumped = (mu.density * wx).matrix();
  Eigen::ArrayXd out = (k.density.transpose() * lumped).array();
  return Measure{k.target, std::move(out)};
}

Kernel kernel_compose(const Kernel& k1, const Kernel& k2) {
  if (!same_space(k1.target, k2.source))
    throw domain_error("kernel_compose: middle spaces differ");
  const Eigen::ArrayXd wm = Eigen::Map<const Eigen::ArrayXd>(
      k1.target->weights.data(),
      static_cast<Eigen::Index>(k1.target->weights.size()));
  Eigen::MatrixXd lumped = k1.density.array().rowwise() * wm.transpose();
  return Kernel{k1.source, k2.target, lumped.matrix() * k2.density};
}

}  // namespace sk
