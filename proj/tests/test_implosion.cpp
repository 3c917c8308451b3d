#include <random>

#include "doctest.h"
#include "implab/implosion.hpp"
#include "oracle_1d.hpp"

using namespace implab;

namespace {

const FatouEngine& model_engine() {
  static const FatouEngine e(GermFamily::model());
  return e;
}

double slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = double(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) sx += xs[i], sy += ys[i], sxx += xs[i] * xs[i], sxy += xs[i] * ys[i];
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::vector<Point> ring(Complex c, double r, int k, Complex y) {
  std::vector<Point> K;
  for (int i = 0; i < k; ++i) K.emplace_back(c + std::polar(r, 2 * kPi * i / k), y * std::polar(1.0, 0.3 * i));
  return K;
}

}  // namespace

TEST_CASE("approximate coordinates: examples") {
  const ApproxCoords ac(0.1, 4.0, 0.0);
  CHECK(std::abs(ac.w(0.0) - 13.4053781) < 1e-7);
  CHECK(std::abs(ac.t(0.0, 1e-4) - 1.0) < 1e-12);
  const Point o = approx_fatou(ac, Point(0.0, 1e-4), Orientation::outgoing);
  CHECK(std::abs(o(0) - (13.4053781 - 10 * kPi)) < 1e-7);
  CHECK_THROWS_AS(ac.w(Complex(0, 0.2)), BranchCutError);
  // w' matches a centred difference
  const Complex x(0.03, 0.02), h = 1e-6;
  CHECK(std::abs((ac.w(x + h) - ac.w(x - h)) / (2.0 * h) - ac.dw(x)) < 1e-6 * std::abs(ac.dw(x)));
}

TEST_CASE("eggbeater region") {
  const EggbeaterRegion reg(1000, 2.0, 0.6);
  CHECK(reg.k_n == 63);
  const Complex eps = kPi / 1000.0;
  const ApproxCoords ac(eps, 4.0, 0.0);
  const Point mid = inverse_approx_fatou(ac, reg, Point(kPi / (2.0 * eps), 1.0));
  CHECK(region_contains(reg, ac, mid));
  const Point far = inverse_approx_fatou(ac, reg, Point(kPi / (2.0 * eps), 3.0));
  CHECK_FALSE(region_contains(reg, ac, far));
  const Point early = inverse_approx_fatou(ac, reg, Point(1.0 / eps * 0.01, 1.0));
  CHECK_FALSE(region_contains(reg, ac, early));
}

TEST_CASE("error terms decay faster than 1/n") {
  const GermFamily f = GermFamily::model(Complex(0.3, 0.1));
  double prevA = 0, prevB = 0;
  for (long n : {1000L, 10000L}) {
    const Complex eps = epsilon_sequence(0.0, 0.0, n);
    const ApproxCoords ac(eps, f);
    const EggbeaterRegion reg(n, 2.0, f.gamma);
    double mA = 0, mB = 0;
    for (const Point& z : region_samples(ac, reg, 25, 42)) {
      const auto t = error_terms(f, eps, z);
      mA = std::max(mA, double(n) * std::abs(t.A));
      mB = std::max(mB, double(n) * std::abs(t.B - f.q * eps));
    }
    if (n == 1000) {
      CHECK(mA <= 0.5);
      prevA = mA, prevB = mB;
    } else {
      CHECK(mA <= 0.6 * prevA);
      CHECK(mB <= 0.6 * prevB);
    }
  }
  const Complex eps = 0.01;
  CHECK_THROWS_AS(error_terms(f, eps, Point(Complex(0, 0.02), 1e-9)), BranchCutError);
  CHECK_THROWS_AS(error_terms(f, eps, Point(-0.01, 0.0)), ZeroTangentialCoordinate);
}

TEST_CASE("inverse approximate coordinate") {
  const long n = 2000;
  const Complex eps = epsilon_sequence(0.0, 0.0, n);
  const EggbeaterRegion reg(n, 2.0, 0.6);
  const ApproxCoords ac(eps, 4.0, 0.0);
  double worst = 0;
  for (const Point& z : region_samples(ac, reg, 100, 7)) {
    CHECK(region_contains(reg, ac, z));
    const Point XY = approx_fatou(ac, z, Orientation::incoming);
    worst = std::max(worst, (approx_fatou(ac, inverse_approx_fatou(ac, reg, XY), Orientation::incoming) - XY).norm());
  }
  CHECK(worst <= 1e-9);

  const ApproxCoords a1(eps, 4.0, 1.0);  // no log term: the cot seed is exact
  int its = -1;
  const Point p = inverse_approx_fatou(a1, reg, Point(Complex(300.0, 0.2), Complex(0.5, 0.5)), &its);
  CHECK(its <= 1);
  CHECK((approx_fatou(a1, p, Orientation::incoming) - Point(Complex(300.0, 0.2), Complex(0.5, 0.5))).norm() < 1e-9);
  CHECK(inverse_approx_fatou(ac, reg, Point(300.0, 0.0))(1) == Complex(0.0));
}

TEST_CASE("inverse coordinate is -eps cot(eps X) + O(log n / n^{2 gamma})") {
  const double gamma = 0.6;
  std::vector<double> lx, ly;
  for (long n : {1000L, 3000L, 10000L}) {
    const Complex eps = epsilon_sequence(0.0, 0.0, n);
    const EggbeaterRegion reg(n, 2.0, gamma);
    const ApproxCoords ac(eps, 4.0, 0.0);
    double worst = 0;
    for (const Point& z : region_samples(ac, reg, 50, 1)) {
      const Complex X = ac.w(z(0));
      worst = std::max(worst, std::abs(z(0) + eps * std::cos(eps * X) / std::sin(eps * X)));
    }
    lx.push_back(std::log(double(n)));
    ly.push_back(std::log(worst / std::log(double(n))));
  }
  CHECK(-slope(lx, ly) >= 2 * gamma - 0.1);
}

TEST_CASE("orbit trace of the model") {
  const auto& e = model_engine();
  const GermFamily& f = e.germ();
  HarnessParams hp;
  // the real Lavaurs image of -0.05 runs off after ~19 more steps; stop N = 22 early
  hp.N = 22;

  // y = 0 has t = 0, outside 1/C < |t| < C at every step
  const auto flat = orbit_trace(e, f, hp, 400, Point(-0.05, 0.0));
  CHECK(flat.k_n == 36);
  CHECK(flat.points.size() == 379);
  CHECK_FALSE(flat.region_at_kn);
  CHECK(flat.phase_of(10) == Phase::approach);
  CHECK(flat.phase_of(200) == Phase::eggbeater);
  CHECK(flat.phase_of(390) == Phase::exit);

  // pick y so the incoming t-coordinate is 1
  const double y1 = 1.0 / e.incoming(Point(-0.05, 1.0e-6))(1).real() * 1e-6;
  const Point z(-0.05, y1);
  const auto tr = orbit_trace(e, f, hp, 400, z);
  CHECK(tr.region_at_kn);
  CHECK(tr.region_at_n_minus_kn);

  std::vector<double> approach, coord, transit;
  for (long n : {200L, 400L, 800L}) {
    const auto t = orbit_trace(e, f, hp, n, z);
    approach.push_back(t.residual("approach"));
    coord.push_back(t.residual("coordinate"));
    transit.push_back(t.residual("transit"));
  }
  CHECK(approach[2] < approach[0]);
  CHECK(transit[2] < transit[0]);
  CHECK(std::isfinite(tr.residual("exit")));
  CHECK(coord[1] < coord[0]);
  CHECK(coord[2] < coord[1]);

  CHECK_THROWS_AS(orbit_trace(e, f, hp, 400, Point(0.45, 0.0)), DomainEscape);
  HarnessParams big = hp;
  big.N = 380;
  CHECK_THROWS_AS(orbit_trace(e, f, big, 400, z), InvalidInput);
}

TEST_CASE("convergence on y = 0 equals the 1-D Lavaurs error") {
  const auto& e = model_engine();
  HarnessParams hp;
  const auto K = ring(Complex(-0.05, 0.03), 0.004, 6, 0.0);
  for (long n : {100L, 400L}) {
    const auto r = convergence_error(e, e.germ(), hp, n, K);
    REQUIRE(r.flagged.empty());
    const Complex eps = epsilon_sequence(0.0, 0.0, n);
    for (size_t i = 0; i < K.size(); ++i) {
      const Complex x = K[i](0);
      const double ref = std::abs(oracle::iterate(x, eps, n) - oracle::lavaurs(x, 0.0));
      CHECK(std::abs(r.per_point[i] - ref) < 1e-8);
    }
  }
}

TEST_CASE("convergence ladder and N-shift consistency") {
  const auto& e = model_engine();
  HarnessParams hp;
  hp.q = Complex(0.3, 0.1);
  const auto K = ring(Complex(-0.05, 0.03), 0.004, 20, 5e-7);
  const auto targets = lavaurs_targets(e, hp, K);
  std::vector<double> E;
  for (long n : {50L, 200L, 800L}) {
    const auto r = convergence_error(e, e.germ(), hp, n, K, 1, &targets);
    CHECK(r.flagged.size() <= 2);
    E.push_back(r.sup);
  }
  CHECK(E[1] < E[0]);
  CHECK(E[2] < E[1]);

  HarnessParams h1 = hp;
  h1.N = 1;
  const auto t1 = lavaurs_targets(e, h1, K);
  double worst = 0;
  for (size_t i = 0; i < K.size(); ++i) worst = std::max(worst, (e.step(t1[i]) - targets[i]).norm());
  CHECK(worst <= 1e-6);
}
