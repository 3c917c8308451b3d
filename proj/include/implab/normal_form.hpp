#pragma once

#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "implab/family.hpp"
#include "implab/rational.hpp"

namespace implab {

// full components of a map germ (or family) as jets in (x, y, eps)
template <class S>
struct MapJet {
  Jet3<S> x, y;
  int order() const { return x.order(); }
};
using GermJets = MapJet<Complex>;

GermJets germ_from_json(const nlohmann::json& j, bool germ_only);
nlohmann::json germ_to_json(const GermJets& g);
GermJets family_jets(const GermFamily& f);
Point evaluate(const GermJets& g, Complex eps, const Point& z);

// P2 coefficients: (x^2, xy, y^2) of the first then the second component
struct HomogeneousQuadratic {
  std::array<Complex, 6> c{};
  Eigen::Vector2cd operator()(const Eigen::Vector2cd& v) const;
  static HomogeneousQuadratic of(const GermJets& g);
};

struct CharacteristicDirection {
  Eigen::Vector2cd v;
  Complex lambda;
  std::optional<Complex> alpha;  // director, when nondegenerate
  bool nondegenerate = false;
  bool dicritical = false;  // every direction is characteristic; axes reported
};

std::vector<CharacteristicDirection> characteristic_directions(const HomogeneousQuadratic& P2);

template <class S>
struct CurveSolution {
  Jet1<S> zeta, h;
};

// v = (1,0) already; zeta in t^2 C[t], h in t C[t], f(t, zeta) = (h, zeta(h)) mod t^{order+1}
template <class S>
CurveSolution<S> formal_invariant_curve(const MapJet<S>& f, int order);

CurveSolution<QComplex> formal_invariant_curve_exact(const GermJets& f, int order);
CurveSolution<Complex> formal_invariant_curve(const GermJets& f, const CharacteristicDirection& dir, int order);

// f o gamma - gamma o h, gamma(t) = (t, zeta(t))
template <class S>
std::pair<Jet1<S>, Jet1<S>> curve_residual(const MapJet<S>& f, const CurveSolution<S>& sol);

// ---------------------------------------------------------------- transform record
struct LinearChange {
  Matrix2 T;  // new = T^{-1} old
};
struct Rescale {
  Complex lambda;  // new x = lambda x
};
struct CurveFlatten {
  Jet1<Complex> zeta;  // new y = y - zeta(x)
};
struct AffineN {
  Jet1<Complex> s, wplus;  // new x = s(eps)(x - w+(eps)) + i eps
};
struct PolyPsi {
  Complex kappa;
  int m;  // new y = y - kappa x^{m-1} (x^2 + eps^2)
};
struct ParamRescale {
  Complex mu;  // new eps = mu eps
};
using TransformStep = std::variant<LinearChange, Rescale, CurveFlatten, AffineN, PolyPsi, ParamRescale>;

struct TransformRecord {
  std::vector<TransformStep> steps;
  bool identity() const { return steps.empty(); }
  std::pair<Point, Complex> forward(Point z, Complex eps) const;
  std::pair<Point, Complex> backward(Point z, Complex eps) const;
};

// conjugate by T = [v, w] so the direction becomes (1,0); T is returned through *T_out
GermJets align_direction(const GermJets& f, const CharacteristicDirection& dir, Matrix2* T_out = nullptr);

std::pair<GermFamily, TransformRecord> straighten(const GermJets& f, const CharacteristicDirection& dir);
std::pair<GermFamily, TransformRecord> normalize_family(const GermJets& raw);

// a, b, c, d from full components; throws if (x^2+eps^2) does not divide
GermFamily family_from_components(const GermJets& g, int order);

}  // namespace implab
