#include "sk/coefficients.hpp"

#include <cmath>
#include <random>

#include "doctest.h"
#include "sk/divergence.hpp"
#include "sk/errors.hpp"

using namespace sk;

namespace {

SpacePtr unit_points(std::size_t n) {
  std::vector<double> pts(n), wts(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) pts[i] = static_cast<double>(i);
  return make_space(std::move(pts), std::move(wts));
}

Kernel table(SpacePtr src, SpacePtr tgt, Eigen::MatrixXd d) {
  return make_kernel(std::move(src), std::move(tgt), std::move(d));
}

Kernel k2() {
  Eigen::MatrixXd d(2, 2);
  d << 0.9, 0.1, 0.2, 0.8;
  const auto sp = unit_points(2);
  return table(sp, sp, d);
}

Kernel random_markov(std::mt19937_64& rng, SpacePtr src, SpacePtr tgt,
                     double floor = 0.02) {
  std::uniform_real_distribution<double> unif(floor, 1.0);
  Eigen::MatrixXd d(static_cast<Eigen::Index>(src->size()),
                    static_cast<Eigen::Index>(tgt->size()));
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < d.cols(); ++j) {
      d(i, j) = unif(rng);
      row += d(i, j) * tgt->weights[static_cast<std::size_t>(j)];
    }
    d.row(i) /= row;
  }
  return table(src, tgt, std::move(d));
}

Measure random_probability(std::mt19937_64& rng, SpacePtr sp) {
  std::uniform_real_distribution<double> unif(0.05, 1.0);
  Eigen::ArrayXd d(static_cast<Eigen::Index>(sp->size()));
  for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = unif(rng);
  return normalized(make_measure(sp, d));
}

// Measures on two points with unit weights have one projective coordinate
// r = log(mu_1 / mu_2), and the image coordinate under the kernel is
// s(r) = log((d00 e^r + d10) / (d01 e^r + d11)). The Hilbert-metric
// contraction coefficient is sup_r |s'(r)|; grid scan plus golden-section.
double two_point_contraction(const Eigen::MatrixXd& d) {
  const auto slope = [&](double r) {
    const double e = std::exp(r);
    return std::abs(d(0, 0) * e / (d(0, 0) * e + d(1, 0)) -
                    d(0, 1) * e / (d(0, 1) * e + d(1, 1)));
  };
  double best = 0.0, arg = 0.0;
  for (int i = -800; i <= 800; ++i) {
    const double r = 0.05 * i;
    const double v = slope(r);
    if (v > best) {
      best = v;
      arg = r;
    }
  }
  double lo = arg - 0.05, hi = arg + 0.05;
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
  double f1 = slope(x1), f2 = slope(x2);
  for (int it = 0; it < 120; ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = slope(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = slope(x1);
    }
  }
  return std::max(f1, f2);
}

}  // namespace

TEST_CASE("two-state kernel closed forms") {
  const auto k = k2();
  CHECK(jmath(k) == doctest::Approx(0.125).epsilon(1e-14));
  CHECK(hbar(k) == doctest::Approx(1.0 / 36.0).epsilon(1e-14));
  CHECK(birkhoff_coefficient(k) == doctest::Approx(5.0 / 7.0).epsilon(1e-14));
  const auto d = dobrushin_coefficient(k);
  CHECK(d.chi == doctest::Approx(0.7).epsilon(1e-14));
  CHECK(d.epsilon == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(d.epsilon >= jmath(k));
}

TEST_CASE("identical rows are maximally contractive") {
  const auto sp = unit_points(3);
  Eigen::MatrixXd d(3, 3);
  for (int i = 0; i < 3; ++i) d.row(i) << 0.5, 0.3, 0.2;
  const auto k = table(sp, sp, d);
  CHECK(jmath(k) == 1.0);
  CHECK(hbar(k) == 1.0);
  CHECK(birkhoff_coefficient(k) == 0.0);
  CHECK(dobrushin_coefficient(k).chi == 0.0);
}

TEST_CASE("birkhoff arithmetic at hbar = 1/9") {
  Eigen::MatrixXd d(2, 2);
  d << 0.75, 0.25, 0.25, 0.75;
  const auto sp = unit_points(2);
  const auto k = table(sp, sp, d);
  CHECK(hbar(k) == doctest::Approx(1.0 / 9.0).epsilon(1e-14));
  CHECK(birkhoff_coefficient(k) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("support mismatch collapses the ratio coefficients") {
  const auto sp = unit_points(2);
  Eigen::MatrixXd d(2, 2);
  d << 1.0, 0.0, 0.5, 0.5;
  const auto k = table(sp, sp, d);
  CHECK(jmath(k) == 0.0);
  CHECK(hbar(k) == 0.0);
  CHECK(birkhoff_coefficient(k) == 1.0);
}

TEST_CASE("coefficient chain on random kernels") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 500; ++trial) {
    const auto m = 2 + static_cast<std::size_t>(rng() % 5);
    const auto n = 2 + static_cast<std::size_t>(rng() % 5);
    const auto k = random_markov(rng, unit_points(m), unit_points(n));
    const double j = jmath(k);
    const double h = hbar(k);
    const double eps = dobrushin_coefficient(k).epsilon;
    CHECK(j >= 0.0);
    CHECK(j <= 1.0 + 1e-12);
    CHECK(eps >= j - 1e-12);
    CHECK(j >= h - 1e-12);
    CHECK(h >= j * j - 1e-12);
  }
}

TEST_CASE("dirac pair TV is bounded by the Dobrushin coefficient") {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 200; ++trial) {
    const auto m = 2 + static_cast<std::size_t>(rng() % 6);
    const auto sp = unit_points(m);
    const auto tgt = unit_points(2 + static_cast<std::size_t>(rng() % 6));
    const auto k = random_markov(rng, sp, tgt);
    const double chi = dobrushin_coefficient(k).chi;
    const Eigen::Index i1 = static_cast<Eigen::Index>(rng() % m);
    const Eigen::Index i2 = static_cast<Eigen::Index>(rng() % m);
    Eigen::ArrayXd e1 = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(m));
    Eigen::ArrayXd e2 = e1;
    e1(i1) = 1.0;
    e2(i2) = 1.0;
    const auto p1 = apply_kernel(make_measure(sp, e1), k);
    const auto p2 = apply_kernel(make_measure(sp, e2), k);
    CHECK(total_variation(p1, p2) <= chi + 1e-12);
  }
}

TEST_CASE("weighted Dobrushin reduces to the plain coefficient") {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 50; ++trial) {
    const auto m = 2 + static_cast<std::size_t>(rng() % 5);
    const auto n = 2 + static_cast<std::size_t>(rng() % 5);
    const auto k = random_markov(rng, unit_points(m), unit_points(n));
    const auto w = dobrushin_weighted(
        k, Eigen::ArrayXd::Ones(static_cast<Eigen::Index>(m)),
        Eigen::ArrayXd::Ones(static_cast<Eigen::Index>(n)));
    CHECK(!w.rescaled);
    CHECK(w.value ==
          doctest::Approx(dobrushin_coefficient(k).chi).epsilon(1e-12));
  }
  CHECK(std::string(WeightedDobrushinResult{}.estimator) ==
        "Dirac-pair estimator");
}

TEST_CASE("weighted Dobrushin rescales sub-unit weights") {
  const auto k = k2();
  Eigen::ArrayXd half = Eigen::ArrayXd::Constant(2, 0.5);
  Eigen::ArrayXd ones = Eigen::ArrayXd::Ones(2);
  const auto w = dobrushin_weighted(k, half, ones);
  CHECK(w.rescaled);
  // Constant weights rescale to 1, so the plain coefficient comes back.
  CHECK(w.value == doctest::Approx(0.7).epsilon(1e-12));

  // Genuinely uneven phi: pair (0,1) normalizer is 1 + 2, TV sum is 1.4.
  Eigen::ArrayXd uneven(2);
  uneven << 1.0, 2.0;
  const auto wu = dobrushin_weighted(k, uneven, ones);
  CHECK(!wu.rescaled);
  CHECK(wu.value == doctest::Approx(1.4 / 3.0).epsilon(1e-12));

  const auto kid = [] {
    const auto sp = unit_points(2);
    Eigen::MatrixXd d(2, 2);
    d << 0.6, 0.4, 0.6, 0.4;
    return table(sp, sp, d);
  }();
  Eigen::ArrayXd heavy(2);
  heavy << 3.0, 7.0;
  CHECK(dobrushin_weighted(kid, heavy, heavy).value == 0.0);
}

TEST_CASE("weighted Dobrushin is submultiplicative under composition") {
  std::mt19937_64 rng(34);
  std::uniform_real_distribution<double> wdist(1.0, 4.0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto nx = 2 + static_cast<std::size_t>(rng() % 4);
    const auto ny = 2 + static_cast<std::size_t>(rng() % 4);
    const auto nz = 2 + static_cast<std::size_t>(rng() % 4);
    const auto sx = unit_points(nx);
    const auto sy = unit_points(ny);
    const auto sz = unit_points(nz);
    const auto k1 = random_markov(rng, sx, sy);
    const auto k2v = random_markov(rng, sy, sz);
    Eigen::ArrayXd ph(static_cast<Eigen::Index>(nx));
    Eigen::ArrayXd ps(static_cast<Eigen::Index>(ny));
    Eigen::ArrayXd pz(static_cast<Eigen::Index>(nz));
    for (Eigen::Index i = 0; i < ph.size(); ++i) ph(i) = wdist(rng);
    for (Eigen::Index i = 0; i < ps.size(); ++i) ps(i) = wdist(rng);
    for (Eigen::Index i = 0; i < pz.size(); ++i) pz(i) = wdist(rng);
    const double lhs = dobrushin_weighted(kernel_compose(k1, k2v), ph, pz).value;
    const double rhs = dobrushin_weighted(k1, ph, ps).value *
                       dobrushin_weighted(k2v, ps, pz).value;
    CHECK(lhs <= rhs + 1e-12);
  }
}

TEST_CASE("Hilbert metric contracts at the Birkhoff rate") {
  std::mt19937_64 rng(35);
  for (int trial = 0; trial < 200; ++trial) {
    const auto m = 2 + static_cast<std::size_t>(rng() % 4);
    const auto n = 2 + static_cast<std::size_t>(rng() % 4);
    const auto sp = unit_points(m);
    const auto tgt = unit_points(n);
    const auto k = random_markov(rng, sp, tgt);
    const double rate = birkhoff_coefficient(k);
    const auto a = random_probability(rng, sp);
    const auto b = random_probability(rng, sp);
    const double before = hilbert_metric(a, b);
    const double after = hilbert_metric(apply_kernel(a, k), apply_kernel(b, k));
    CHECK(after <= rate * before + 1e-10);
  }
}

TEST_CASE("Birkhoff rate equals the sharpest two-point contraction") {
  // On two points the contraction coefficient is computable directly, so
  // the rate must match it, not just bound it.
  {
    Eigen::MatrixXd d(2, 2);
    d << 0.9, 0.1, 0.2, 0.8;
    CHECK(two_point_contraction(d) ==
          doctest::Approx(5.0 / 7.0).epsilon(1e-9));
  }
  std::mt19937_64 rng(36);
  std::uniform_real_distribution<double> unif(0.02, 1.0);
  for (int kernel_trial = 0; kernel_trial < 40; ++kernel_trial) {
    const auto sp = unit_points(2);
    Eigen::MatrixXd d(2, 2);
    for (Eigen::Index i = 0; i < 2; ++i) {
      const double a = unif(rng), b = unif(rng);
      d(i, 0) = a / (a + b);
      d(i, 1) = b / (a + b);
    }
    const double rate = birkhoff_coefficient(table(sp, sp, d));
    CHECK(two_point_contraction(d) == doctest::Approx(rate).epsilon(1e-7));
  }
}

TEST_CASE("no sampled pair contracts slower than the Birkhoff rate") {
  std::mt19937_64 rng(37);
  for (int kernel_trial = 0; kernel_trial < 5; ++kernel_trial) {
    const std::size_t m = 4;
    const auto sp = unit_points(m);
    const auto k = random_markov(rng, sp, unit_points(4), 0.01);
    const double rate = birkhoff_coefficient(k);
    REQUIRE(hbar(k) > 0.0);

    std::uniform_real_distribution<double> sign(-1.0, 1.0);
    for (int pair_trial = 0; pair_trial < 2000; ++pair_trial) {
      const auto base = random_probability(rng, sp);
      Eigen::ArrayXd g(static_cast<Eigen::Index>(m));
      for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = sign(rng);
      Eigen::ArrayXd d2 = base.density * (1.0 + 1e-3 * g);
      const auto mu2 = make_measure(sp, d2);
      const double h0 = hilbert_metric(base, mu2);
      const double h1 =
          hilbert_metric(apply_kernel(base, k), apply_kernel(mu2, k));
      if (h0 > 0.0) CHECK(h1 <= rate * h0 + 1e-10);
    }
  }
}
