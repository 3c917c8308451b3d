#include <random>

#include "doctest.h"
#include "implab/lavaurs.hpp"
#include "oracle_1d.hpp"

using namespace implab;

namespace {

std::shared_ptr<const FatouEngine> model_engine() {
  // the model is entire, so a wide bidisk is legitimate; Psi^o orbits wander past 0.5
  FatouPolicy pol;
  pol.domain_radius = 4.0;
  static const auto e = std::make_shared<const FatouEngine>(GermFamily::model(), pol);
  return e;
}

std::vector<Point> basin_samples(int count, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<Point> K;
  for (int i = 0; i < count; ++i)
    K.emplace_back(Complex(-0.04 + 0.01 * u(rng), (i % 2 ? 1 : -1) * (0.03 + 0.01 * u(rng))),
                   Complex(u(rng), u(rng)) * 5e-7);
  return K;
}

}  // namespace

TEST_CASE("Lavaurs map keeps the invariant line") {
  const LavaursMap L{0.0, 0.0, model_engine()};
  for (Complex x : {Complex(-0.06, 0.015), Complex(-0.03, 0.02)}) CHECK(lavaurs_eval(L, Point(x, 0.0))(1) == Complex(0.0));
}

TEST_CASE("Lavaurs map on y = 0 is the 1-D Lavaurs map") {
  for (Complex sigma : {Complex(0.0), Complex(0.3, -0.4), Complex(-2.0, 1.0)}) {
    const LavaursMap L{sigma, 0.0, model_engine()};
    // real x is not used: real Lavaurs images run off to +infinity
    for (Complex x : {Complex(-0.05, 0.01), Complex(-0.03, 0.02), Complex(-0.1, -0.05)}) {
      const Complex ours = lavaurs_eval(L, Point(x, 0.0))(0);
      CHECK(std::abs(ours - oracle::lavaurs(x, sigma)) < 1e-6);
    }
  }
}

TEST_CASE("sigma shift and commutation on 50 basin samples") {
  const LavaursMap L{Complex(0.2, 0.1), Complex(0.3, 0.1), model_engine()};
  // off the real axis: near-real Lavaurs images run away to infinity
  const auto K = basin_samples(50, 9);
  const auto rep = lavaurs_functional_check(L, K, 2);
  CHECK(rep.failures.empty());
  CHECK(rep.sup_commutation <= 1e-6);
  CHECK(rep.sup_phase <= 1e-7);

  const LavaursMap L0{0.0, 0.0, model_engine()};
  std::vector<Point> line;
  for (size_t i = 0; i < 20; ++i) line.emplace_back(K[i](0), 0.0);
  const auto r0 = lavaurs_functional_check(L0, line);
  // same residual as the 1-D functional equation; where we escape, so does the oracle
  int compared = 0;
  for (size_t i = 0; i < line.size(); ++i) {
    const Complex x = line[i](0);
    const Complex Lx = oracle::lavaurs(x, 0.0);
    if (!r0.points[i].failure.empty()) {
      CHECK_FALSE(std::abs(Lx) < 4.0);
      continue;
    }
    const double ref = std::abs(Lx + Lx * Lx - oracle::lavaurs(x + x * x, 0.0));
    CHECK(std::abs(r0.points[i].commutation - ref) < 1e-6);
    ++compared;
  }
  CHECK(compared >= 5);

  CHECK(lavaurs_functional_check(L, std::span<const Point>()).empty());
}

TEST_CASE("Y-twist: t-coordinate is linear in y deep in the petal") {
  const auto e = model_engine();
  const Complex lam = std::polar(1.0, 0.7);
  for (double depth : {100.0, 400.0}) {
    const Complex x = -1.0 / depth;
    const Complex y = 0.5 * std::pow(-x, 4.0);
    const Complex t1 = e->incoming(Point(x, y))(1), t2 = e->incoming(Point(x, lam * y))(1);
    CHECK(std::abs(t2 / t1 - lam) < 1e-3);
  }
}

TEST_CASE("failures are reported per point") {
  const LavaursMap L{0.0, 0.0, model_engine()};
  const std::vector<Point> pts{Point(Complex(-0.05, 0.01), 0.0), Point(0.45, 0.0)};
  const auto rep = lavaurs_functional_check(L, pts);
  REQUIRE(rep.failures.size() == 1);
  CHECK(rep.failures[0] == 1);
  CHECK_FALSE(rep.points[1].failure.empty());
  CHECK_THROWS_AS(lavaurs_eval(LavaursMap{}, Point(-0.05, 0.0)), InvalidInput);
}
