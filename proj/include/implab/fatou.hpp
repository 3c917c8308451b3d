#pragma once

#include <optional>
#include <variant>

#include "implab/family.hpp"

namespace implab {

enum class Orientation { incoming, outgoing };

struct PetalSpec {
  Orientation orientation = Orientation::incoming;
  double r = 0.1;
  double C = 2.0;
};

// incoming {|x+r|<r, |y/(-x)^eta|<C},  outgoing {|x-r|<r, |y/x^eta|<C}
bool petal_contains(const PetalSpec& p, Complex eta, const Point& z);

struct FatouPolicy {
  double tail_tol = 1e-12;      // stop when consecutive extrapolants agree to tol*(1+|v|)
  double accept_tol = 1e-9;     // accepted at the doubling cap if the last change is below this
  double start_radius = 64.0;   // first checkpoint |X| (or |X_0| if larger)
  int max_doublings = 18;       // checkpoints at R0 * 2^k, k <= max_doublings
  int window = 6;               // Neville points
  long entry_budget = 100000;   // steps allowed to reach a petal
  double domain_radius = 0.5;   // bidisk |x|,|y| <= this
  double C = 2.0;               // petal level
  int newton_max = 50;
  double newton_tol = 1e-12;
};

struct BasinInside {
  long n0;
  double C;
};
struct BasinEscaped {
  long n;
};
struct BasinUnknown {};
using BasinOutcome = std::variant<BasinInside, BasinEscaped, BasinUnknown>;

// Fatou coordinates of g = g_0.  Immutable after construction; no caches.
class FatouEngine {
 public:
  explicit FatouEngine(const GermFamily& germ, FatouPolicy policy = {});

  const GermFamily& germ() const { return germ_; }
  const FatouPolicy& policy() const { return policy_; }
  const PetalSpec& incoming_petal() const { return in_; }
  const PetalSpec& outgoing_petal() const { return out_; }
  const BoundMap& map() const { return g_; }

  Point step(const Point& z) const { return g_(z); }
  Point inverse_step(const Point& z) const;  // local inverse near the origin
  bool in_domain(const Point& z) const;

  Point incoming(const Point& z) const;   // Phi^iota, extended along forward orbits
  Point outgoing(const Point& z) const;   // Phi^o, extended along backward orbits
  Point outgoing_inverse(const Point& XY) const;  // (Phi^o)^{-1} on the petal image
  Point psi_o(const Point& XY) const;     // entire extension g^n (Phi^o)^{-1}(X-n, Y)
  BasinOutcome basin(const Point& z, long budget) const;

  // P(r(C), C) with r(C) = r (C0/C)^{1/(rho-2)}; the basin is the union over C
  PetalSpec petal_at_level(Orientation o, double level) const;
  std::optional<PetalSpec> entry_petal(const Point& w, Orientation o) const;

  // in-petal limit without any entry loop
  Point petal_limit(const Point& z, Orientation o) const;

 private:
  double adapt_radius(Orientation o) const;

  GermFamily germ_;
  FatouPolicy policy_;
  BoundMap g_;
  Poly2 am1_;  // a_0(x) - 1 without its constant term
  Complex one_minus_a_;
  PetalSpec in_, out_;
};

inline Point incoming_fatou(const FatouEngine& e, const Point& z) { return e.incoming(z); }
inline Point outgoing_fatou(const FatouEngine& e, const Point& z) { return e.outgoing(z); }
inline Point psi_o_extended(const FatouEngine& e, const Point& XY) { return e.psi_o(XY); }
inline BasinOutcome basin_membership(const FatouEngine& e, const Point& z, long budget) {
  return e.basin(z, budget);
}

// small-argument helpers shared with the implosion code
Complex log1p_c(Complex u);
Complex expm1_c(Complex z);

}  // namespace implab
