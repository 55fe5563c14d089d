#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "pfc/grid.hpp"

using namespace pfc;

namespace {

Field random_field(const Grid& g, std::mt19937_64& rng, bool zero_mean) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Field f(g.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = dist(rng);
  if (zero_mean) f.array() -= mean(g, f);
  return f;
}

}  // namespace

TEST_CASE("grid geometry") {
  const Grid g = Grid::box(4, 5, 2.0, 3.0);
  CHECK(g.size() == 20);
  CHECK(g.spacing(0) == doctest::Approx(0.5));
  CHECK(g.cell_measure() == doctest::Approx(0.5 * 0.6));
  CHECK(g.measure() == doctest::Approx(6.0));
  CHECK(g.center(0)(0) == doctest::Approx(0.25));
  CHECK(g.center(0)(1) == doctest::Approx(0.3));
  CHECK(g.center(5)(1) == doctest::Approx(0.9));

  CHECK_THROWS_AS(Grid::line(1), ConfigError);
  CHECK_THROWS_AS(Grid::line(8, -1.0), ConfigError);
  CHECK_THROWS_AS(Grid(3, {4, 4}, {1.0, 1.0}), ConfigError);
  CHECK(Grid::line(8) == Grid::line(8));
  CHECK_FALSE(Grid::line(8) == Grid::line(16));

  const TimeGrid t{1.0, 4};
  CHECK(t.dt() == 0.25);
  CHECK(t.time(4) == 1.0);
}

TEST_CASE("laplacian of a constant vanishes") {
  for (const Grid& g : {Grid::line(7), Grid::box(5, 6, 1.0, 2.0)}) {
    const Field f = Field::Constant(g.size(), 3.25);
    CHECK(laplacian_neumann(g, f).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("laplacian hand stencil with h = 1") {
  const Grid g = Grid::line(3, 3.0);
  Field f(3);
  f << 0.0, 1.0, 0.0;
  const Field l = laplacian_neumann(g, f);
  CHECK(l(0) == 1.0);
  CHECK(l(1) == -2.0);
  CHECK(l(2) == 1.0);
}

TEST_CASE("laplacian of cos(pi x) converges at second order") {
  using std::numbers::pi;
  auto error = [](int n) {
    const Grid g = Grid::line(n);
    const Field f = sample(g, [](double x, double) { return std::cos(pi * x); });
    const Field exact = sample(g, [](double x, double) { return -pi * pi * std::cos(pi * x); });
    return (laplacian_neumann(g, f) - exact).cwiseAbs().maxCoeff();
  };
  const double e64 = error(64);
  const double e128 = error(128);
  const double e256 = error(256);
  CHECK(e128 < 1e-2);
  CHECK(e64 / e128 == doctest::Approx(4.0).epsilon(0.1));
  CHECK(e128 / e256 == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("laplacian is conservative and self-adjoint") {
  std::mt19937_64 rng(5);
  for (const Grid& g : {Grid::line(33), Grid::box(9, 7, 1.0, 0.5)}) {
    for (int s = 0; s < 5; ++s) {
      const Field u = random_field(g, rng, false);
      const Field v = random_field(g, rng, false);
      const Field lu = laplacian_neumann(g, u);
      CHECK(std::abs(mean(g, lu)) <= 1e-13 * lu.cwiseAbs().maxCoeff());
      const double a = inner(g, lu, v);
      const double b = inner(g, u, laplacian_neumann(g, v));
      CHECK(std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)));
      // The assembled stiffness is the negated operator.
      CHECK((g.stiffness() * u + lu).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
}

TEST_CASE("mean") {
  CHECK(mean(Grid::line(5), Field::Constant(5, 3.0)) == doctest::Approx(3.0));
  Field two(2);
  two << 1.0, 3.0;
  CHECK(mean(Grid::line(2), two) == 2.0);
}

TEST_CASE("mean is templated on the scalar type") {
  const Grid g = Grid::line(4);
  Eigen::VectorXf f(4);
  f << 1.0f, 2.0f, 3.0f, 4.0f;
  const float m = mean(g, f);
  CHECK(m == doctest::Approx(2.5));
  const Eigen::VectorXf lf = laplacian_neumann(g, f);
  CHECK(lf.sum() == doctest::Approx(0.0));
}

TEST_CASE("inverse Neumann operator") {
  std::mt19937_64 rng(11);
  for (const Grid& g : {Grid::line(32), Grid::box(8, 6, 2.0, 1.0)}) {
    CHECK(inverse_neumann(g, Field::Zero(g.size())).cwiseAbs().maxCoeff() == 0.0);
    const NeumannInverse n_op(g);
    for (int s = 0; s < 5; ++s) {
      const Field u = random_field(g, rng, true);
      const Field v = random_field(g, rng, true);
      const Field nu = n_op.apply(u);
      CHECK(std::abs(mean(g, nu)) <= 1e-15);
      CHECK((g.stiffness() * nu - u).norm() <= 1e-10 * u.norm());
      CHECK((n_op.apply(g.stiffness() * u) - u).norm() <= 1e-10 * u.norm());
      const double a = inner(g, u, n_op.apply(v));
      const double b = inner(g, v, nu);
      CHECK(std::abs(a - b) <= 1e-12 * std::abs(a));
    }
  }
}

TEST_CASE("inverse Neumann rejects data with nonzero mean") {
  const Grid g = Grid::line(16);
  CHECK_THROWS_AS(inverse_neumann(g, Field::Constant(16, 1.0)), NonZeroMean);
  CHECK_THROWS_AS(dual_norm_star(g, Field::Constant(16, 1e-3)), NonZeroMean);
}

TEST_CASE("dual norm") {
  std::mt19937_64 rng(2);
  const Grid g = Grid::line(40);
  CHECK(dual_norm_star(g, Field::Zero(40)) == 0.0);
  const Field f = random_field(g, rng, true);
  const double d = dual_norm_star(g, f);
  CHECK(d > 0.0);
  CHECK(dual_norm_star(g, -3.0 * f) == doctest::Approx(3.0 * d).epsilon(1e-12));
  const Field nf = inverse_neumann(g, f);
  CHECK(d * d == doctest::Approx(gradient_norm_squared(g, nf)).epsilon(1e-12));
}

TEST_CASE("norm equivalence constant between the star and V' norms is grid-stable") {
  std::mt19937_64 rng(4);
  auto ratio_range = [&](int n) {
    const Grid g = Grid::line(n);
    double lo = 1e300, hi = 0.0;
    for (int s = 0; s < 10; ++s) {
      const Field f = random_field(g, rng, true);
      const double r = std::pow(dual_norm_star(g, f) / dual_norm_vprime(g, f), 2);
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    return std::max(hi, 1.0 / lo);
  };
  const double m32 = ratio_range(32);
  const double m128 = ratio_range(128);
  CHECK(m32 >= 1.0);
  // Bounded by 1 + 1/lambda_1 with lambda_1 close to pi^2.
  CHECK(m32 < 1.2);
  CHECK(m128 < 1.2);
}

TEST_CASE("norms") {
  const Grid g = Grid::line(10);
  const auto n1 = norms(g, Field::Constant(10, 1.0));
  CHECK(n1.h == doctest::Approx(1.0));
  CHECK(n1.v == doctest::Approx(1.0));
  CHECK(n1.inf == 1.0);

  std::mt19937_64 rng(9);
  const Field f = random_field(g, rng, false);
  const auto nf = norms(g, f);
  CHECK(nf.h <= std::sqrt(g.measure()) * nf.inf + 1e-15);
  CHECK(nf.v * nf.v == doctest::Approx(nf.h * nf.h + gradient_norm_squared(g, f)));
}

TEST_CASE("Poincare constant stays bounded under refinement") {
  std::mt19937_64 rng(21);
  auto worst = [&](int n) {
    const Grid g = Grid::line(n);
    double m = 1.0;
    for (int s = 0; s < 10; ++s) {
      // Smooth random fields: a few low cosine modes.
      Field f = Field::Constant(n, std::uniform_real_distribution<double>(-1, 1)(rng));
      for (int k = 1; k <= 3; ++k) {
        const double a = std::uniform_real_distribution<double>(-1, 1)(rng);
        f += sample(g, [&](double x, double) { return a * std::cos(k * std::numbers::pi * x); });
      }
      const auto nf = norms(g, f);
      const double rhs = std::sqrt(gradient_norm_squared(g, f)) + std::abs(mean(g, f));
      m = std::max(m, nf.v * nf.v / (rhs * rhs));
    }
    return m;
  };
  const double m1 = worst(32);
  const double m2 = worst(64);
  CHECK(m1 >= 1.0);
  CHECK(m1 < 10.0);
  CHECK(m2 < 10.0);
}
