#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "implab/fatou.hpp"

namespace implab {

// L_{sigma,q} = Psi^o o A_{sigma,q} o Phi^iota,  A(X,Y) = (X + sigma, e^{pi q} Y)
struct LavaursMap {
  Complex sigma{0.0, 0.0};
  Complex q{0.0, 0.0};
  std::shared_ptr<const FatouEngine> engine;

  Point twist(const Point& XY) const { return Point(XY(0) + sigma, std::exp(kPi * q) * XY(1)); }
  LavaursMap shifted(Complex ds) const { return {sigma + ds, q, engine}; }
};

Point lavaurs_eval(const LavaursMap& L, const Point& z);

struct FunctionalCheckPoint {
  size_t index;
  Point image = Point::Constant(Complex(std::nan(""), std::nan("")));  // L z
  double commutation = 0;  // |g(L z) - L(g z)|
  double phase = 0;        // |g(L_sigma z) - L_{sigma+1} z|
  std::string failure;     // empty unless an evaluation threw
};

struct FunctionalCheckReport {
  double sup_commutation = 0;
  double sup_phase = 0;
  std::vector<FunctionalCheckPoint> points;
  std::vector<size_t> failures;
  bool empty() const { return points.empty(); }
};

FunctionalCheckReport lavaurs_functional_check(const LavaursMap& L, std::span<const Point> sample,
                                               int threads = 1);

}  // namespace implab
