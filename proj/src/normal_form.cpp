#include "implab/normal_form.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace implab {

namespace {

Series var(int which, int order) {
  return Series::monomial(which == 0, which == 1, which == 2, 1.0, order);
}

// polynomial in x with eps-series coefficients from a Jet1 in eps times x^i
Series eps_series(const Jet1<Complex>& s, int x_power, int order) {
  Series r(order);
  for (int l = 0; l <= s.order(); ++l) r.add(x_power, 0, l, s[l]);
  return r;
}

Series x_series(const Jet1<Complex>& z, int order) {
  Series r(order);
  for (int k = 0; k <= z.order(); ++k) r.add(k, 0, 0, z[k]);
  return r;
}

Series slice_y0(const Series& s) {
  Series r(s.order());
  for (const auto& [m, v] : s.terms())
    if (m[1] == 0) r.add(m[0], 0, m[2], v);
  return r;
}

// (s - s(y=0)) / y
Series divide_y(const Series& s) {
  Series r(s.order());
  for (const auto& [m, v] : s.terms())
    if (m[1] > 0) r.add(m[0], m[1] - 1, m[2], v);
  return r;
}

}  // namespace

// ------------------------------------------------------------ io

GermJets germ_from_json(const nlohmann::json& j, bool germ_only) {
  if (!j.is_object() || !j.contains("x_series") || !j.contains("y_series"))
    throw InvalidInput("germ needs x_series and y_series");
  int order = j.value("order", 0);
  for (const char* key : {"x_series", "y_series"})
    for (const auto& t : j[key]) {
      const int k = t.at("k").get<int>();
      if (germ_only && k != 0) throw InvalidInput("raw germs may only contain eps-degree 0 entries");
      order = std::max(order, t.at("i").get<int>() + t.at("j").get<int>() + k);
    }
  GermJets g{series_from_json(j["x_series"], order), series_from_json(j["y_series"], order)};
  return g;
}

nlohmann::json germ_to_json(const GermJets& g) {
  return {{"order", g.order()}, {"x_series", series_to_json(g.x)}, {"y_series", series_to_json(g.y)}};
}

GermJets family_jets(const GermFamily& f) {
  const int n = f.order() + 2;
  const Series x = var(0, n), y = var(1, n), e = var(2, n);
  GermJets g{x + (x * x + e * e) * f.a.with_order(n) + y * f.b.with_order(n), y + y * f.c.with_order(n) + f.d.with_order(n)};
  return g;
}

Point evaluate(const GermJets& g, Complex eps, const Point& z) {
  return Point(evaluate(g.x, z(0), z(1), eps), evaluate(g.y, z(0), z(1), eps));
}

// ------------------------------------------------------------ P2

Eigen::Vector2cd HomogeneousQuadratic::operator()(const Eigen::Vector2cd& v) const {
  const Complex x = v(0), y = v(1);
  return {c[0] * x * x + c[1] * x * y + c[2] * y * y, c[3] * x * x + c[4] * x * y + c[5] * y * y};
}

HomogeneousQuadratic HomogeneousQuadratic::of(const GermJets& g) {
  HomogeneousQuadratic P;
  P.c = {g.x.coeff(2, 0, 0), g.x.coeff(1, 1, 0), g.x.coeff(0, 2, 0),
         g.y.coeff(2, 0, 0), g.y.coeff(1, 1, 0), g.y.coeff(0, 2, 0)};
  return P;
}

namespace {

CharacteristicDirection describe(const HomogeneousQuadratic& P, Eigen::Vector2cd v) {
  const int idx = std::abs(v(0)) >= std::abs(v(1)) ? 0 : 1;
  v /= v(idx);
  CharacteristicDirection d;
  d.v = v;
  d.lambda = P(v)(idx);
  d.nondegenerate = std::abs(d.lambda) > 1e-10;
  if (d.nondegenerate) {
    // conjugate by T = [v, w] and read the xy-coefficient of the second component
    Matrix2 T;
    T.col(0) = v;
    T.col(1) = idx == 0 ? Eigen::Vector2cd(0, 1) : Eigen::Vector2cd(1, 0);
    const Matrix2 Ti = T.inverse();
    auto Pt = [&](Complex x, Complex y) { return Eigen::Vector2cd(Ti * P(T * Eigen::Vector2cd(x, y))); };
    const Complex eta = (Pt(1.0, 1.0)(1) - Pt(1.0, -1.0)(1)) / 2.0;
    d.alpha = eta / d.lambda - 1.0;
  }
  return d;
}

}  // namespace

std::vector<CharacteristicDirection> characteristic_directions(const HomogeneousQuadratic& P) {
  const auto& c = P.c;
  double scale = 0;
  for (const auto& v : c) scale = std::max(scale, std::abs(v));
  if (scale == 0) throw InvalidInput("P2 vanishes identically");
  // h(1,s) = Q(1,s) - s P(1,s), a cubic in s
  std::array<Complex, 4> h{c[3], c[4] - c[0], c[5] - c[1], -c[2]};
  const double tiny = 1e-14 * scale;
  int deg = 3;
  while (deg >= 0 && std::abs(h[deg]) <= tiny) --deg;

  std::vector<CharacteristicDirection> out;
  if (deg < 0) {
    for (auto v : {Eigen::Vector2cd(1, 0), Eigen::Vector2cd(0, 1)}) {
      auto d = describe(P, v);
      d.dicritical = true;
      out.push_back(d);
    }
    return out;
  }
  std::vector<Complex> roots;
  if (deg >= 1) {
    Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(deg, deg);
    for (int i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
    for (int i = 0; i < deg; ++i) comp(i, deg - 1) = -h[i] / h[deg];
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp);
    for (int i = 0; i < deg; ++i) {
      Complex s = es.eigenvalues()(i);
      for (int it = 0; it < 3; ++it) {  // polish
        Complex p = 0, dp = 0;
        for (int k = deg; k >= 0; --k) dp = dp * s + p, p = p * s + h[k];
        if (std::abs(dp) > tiny) s -= p / dp;
      }
      bool dup = false;
      for (const auto& r : roots) dup = dup || std::abs(r - s) <= 1e-8 * (1 + std::abs(s));
      if (!dup) roots.push_back(s);
    }
  }
  for (const auto& s : roots) out.push_back(describe(P, Eigen::Vector2cd(1.0, s)));
  if (deg < 3) out.push_back(describe(P, Eigen::Vector2cd(0, 1)));
  return out;
}

// ------------------------------------------------------------ formal curve

template <class S>
std::pair<Jet1<S>, Jet1<S>> curve_residual(const MapJet<S>& f, const CurveSolution<S>& sol) {
  const Jet1<S> h = substitute_curve(f.x, sol.zeta);
  Jet1<S> r1 = h - sol.h;
  Jet1<S> r2 = substitute_curve(f.y, sol.zeta) - compose(sol.zeta, h);
  return {r1, r2};
}

template <class S>
CurveSolution<S> formal_invariant_curve(const MapJet<S>& f, int order) {
  if (order < 1) throw InvalidInput("curve order must be at least 1");
  if (!scalar_is_zero(f.y.coeff(2, 0, 0))) throw InvalidInput("(1,0) is not a characteristic direction");
  CurveSolution<S> sol{Jet1<S>(order), Jet1<S>(order)};
  auto residual_at = [&](int deg) {
    const Jet1<S> h = substitute_curve(f.x, sol.zeta);
    return (substitute_curve(f.y, sol.zeta) - compose(sol.zeta, h))[deg];
  };
  // zeta_k first shows up at degree k+1 with coefficient (eta - k lambda)
  for (int k = 2; k + 1 <= order; ++k) {
    sol.zeta[k] = S(0);
    const S r0 = residual_at(k + 1);
    sol.zeta[k] = S(1);
    const S mu = residual_at(k + 1) - r0;
    if (scalar_is_zero(mu)) {
      if (!scalar_is_zero(r0)) throw ResonanceObstruction(k);
      sol.zeta[k] = S(0);
    } else {
      sol.zeta[k] = -r0 / mu;
    }
  }
  sol.h = substitute_curve(f.x, sol.zeta);
  return sol;
}

template CurveSolution<Complex> formal_invariant_curve(const MapJet<Complex>&, int);
template CurveSolution<QComplex> formal_invariant_curve(const MapJet<QComplex>&, int);
template std::pair<Jet1<Complex>, Jet1<Complex>> curve_residual(const MapJet<Complex>&, const CurveSolution<Complex>&);
template std::pair<Jet1<QComplex>, Jet1<QComplex>> curve_residual(const MapJet<QComplex>&, const CurveSolution<QComplex>&);

CurveSolution<QComplex> formal_invariant_curve_exact(const GermJets& f, int order) {
  auto q = [](const Complex& c) { return QComplex(c); };
  const MapJet<QComplex> fq{f.x.map(q), f.y.map(q)};
  return formal_invariant_curve(fq, order);
}

CurveSolution<Complex> formal_invariant_curve(const GermJets& f, const CharacteristicDirection& dir, int order) {
  if (!dir.nondegenerate) throw InvalidInput("formal curve needs a nondegenerate direction");
  if (std::abs(dir.v(1)) != 0.0 || dir.v(0) != Complex(1.0))
    throw InvalidInput("rotate coordinates so that v = (1,0) first");
  const auto ex = formal_invariant_curve_exact(f, order);
  CurveSolution<Complex> out{Jet1<Complex>(order), Jet1<Complex>(order)};
  for (int k = 0; k <= order; ++k) {
    out.zeta[k] = ex.zeta[k].to_complex();
    out.h[k] = ex.h[k].to_complex();
  }
  return out;
}

// ------------------------------------------------------------ transforms

std::pair<Point, Complex> TransformRecord::forward(Point z, Complex eps) const {
  for (const auto& st : steps) {
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, LinearChange>) {
            z = s.T.inverse() * z;
          } else if constexpr (std::is_same_v<T, Rescale>) {
            z(0) *= s.lambda;
          } else if constexpr (std::is_same_v<T, CurveFlatten>) {
            z(1) -= evaluate(s.zeta, z(0));
          } else if constexpr (std::is_same_v<T, AffineN>) {
            z(0) = evaluate(s.s, eps) * (z(0) - evaluate(s.wplus, eps)) + kI * eps;
          } else if constexpr (std::is_same_v<T, PolyPsi>) {
            z(1) -= s.kappa * std::pow(z(0), s.m - 1) * (z(0) * z(0) + eps * eps);
          } else {
            eps *= s.mu;
          }
        },
        st);
  }
  return {z, eps};
}

std::pair<Point, Complex> TransformRecord::backward(Point z, Complex eps) const {
  for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, LinearChange>) {
            z = s.T * z;
          } else if constexpr (std::is_same_v<T, Rescale>) {
            z(0) /= s.lambda;
          } else if constexpr (std::is_same_v<T, CurveFlatten>) {
            z(1) += evaluate(s.zeta, z(0));
          } else if constexpr (std::is_same_v<T, AffineN>) {
            z(0) = (z(0) - kI * eps) / evaluate(s.s, eps) + evaluate(s.wplus, eps);
          } else if constexpr (std::is_same_v<T, PolyPsi>) {
            z(1) += s.kappa * std::pow(z(0), s.m - 1) * (z(0) * z(0) + eps * eps);
          } else {
            eps /= s.mu;
          }
        },
        *it);
  }
  return {z, eps};
}

GermFamily family_from_components(const GermJets& g, int order) {
  const Series gx0 = slice_y0(g.x), gy0 = slice_y0(g.y);
  // Q = g_x(x,0,eps) - x, divided by x^2 + eps^2
  std::map<std::array<int, 2>, Complex> Q;
  for (const auto& [m, v] : gx0.terms()) Q[{m[0], m[2]}] += v;
  Q[{1, 0}] -= 1.0;
  // a germ (no eps anywhere) only needs x^2 | Q; it is then read as (x^2+eps^2) a
  bool has_eps = false;
  for (const auto* s : {&g.x, &g.y})
    for (const auto& [m, v] : s->terms()) has_eps = has_eps || m[2] > 0;
  Series a(order);
  int top = 0;
  for (const auto& [ik, v] : Q) top = std::max(top, ik[0]);
  double scale = 0;
  for (const auto& [ik, v] : Q) scale = std::max(scale, std::abs(v));
  for (int i = top; i >= 2; --i) {
    for (auto it = Q.begin(); it != Q.end();) {
      if (it->first[0] != i) {
        ++it;
        continue;
      }
      const int k = it->first[1];
      const Complex v = it->second;
      a.add(i - 2, 0, k, v);
      if (has_eps && i + k <= g.order()) Q[{i - 2, k + 2}] -= v;
      it = Q.erase(it);
    }
  }
  for (const auto& [ik, v] : Q)
    if (std::abs(v) > 1e-10 * (1.0 + scale))
      throw InvalidInput("x^2+eps^2 does not divide the first component (fixed points are not at +-i eps)");

  GermFamily f;
  f.a = a;
  f.b = divide_y(g.x).with_order(order);
  Series yc = g.y - var(1, g.order());
  f.c = divide_y(yc).with_order(order);
  f.d = gy0.with_order(order);
  f.eta = f.c.coeff(1, 0, 0);
  f.q = f.c.coeff(0, 0, 1);
  f.gamma = default_gamma(f.eta.real());
  return f;
}

namespace {

GermJets linear_conjugate(const GermJets& F, const Matrix2& T) {
  const int n = F.order();
  const Series x = var(0, n), y = var(1, n), e = var(2, n);
  const Series X = x * T(0, 0) + y * T(0, 1), Y = x * T(1, 0) + y * T(1, 1);
  const Series fx = compose(F.x, X, Y, e), fy = compose(F.y, X, Y, e);
  const Matrix2 Ti = T.inverse();
  return {fx * Ti(0, 0) + fy * Ti(0, 1), fx * Ti(1, 0) + fy * Ti(1, 1)};
}

GermJets rescale_conjugate(const GermJets& F, Complex lambda) {
  const int n = F.order();
  const Series X = var(0, n) * (1.0 / lambda), y = var(1, n), e = var(2, n);
  return {compose(F.x, X, y, e) * lambda, compose(F.y, X, y, e)};
}

// new = (x, y - U(x, eps)),  g = Psi o F o Psi^{-1}
GermJets shear_conjugate(const GermJets& F, const Series& U) {
  const int n = F.order();
  const Series x = var(0, n), y = var(1, n), e = var(2, n);
  const Series Y = y + U;
  GermJets G{compose(F.x, x, Y, e), Series(n)};
  G.y = compose(F.y, x, Y, e) - compose(U, G.x, y, e);
  return G;
}

// d-terms the construction killed; real leftovers stay for validate_family to report
void flush_low_d(GermFamily& f) {
  const int m = f.m();
  double scale = 1;
  for (const auto& [mi, v] : f.d.terms()) scale = std::max(scale, std::abs(v));
  std::vector<MultiIndex> kill;
  for (const auto& [mi, v] : f.d.terms()) {
    const bool low = mi[1] == 0 && (mi[2] == 0 ? mi[0] < m + 3 : mi[0] + mi[2] < m + 2);
    if (!low) continue;
    if (std::abs(v) <= 1e-12 * scale) kill.push_back(mi);
  }
  for (const auto& mi : kill) f.d.set(mi[0], mi[1], mi[2], 0.0);
}

}  // namespace

GermJets align_direction(const GermJets& f, const CharacteristicDirection& dir, Matrix2* T_out) {
  Matrix2 T;
  T.col(0) = dir.v;
  T.col(1) = std::abs(dir.v(0)) >= std::abs(dir.v(1)) ? Eigen::Vector2cd(0, 1) : Eigen::Vector2cd(1, 0);
  if (T_out) *T_out = T;
  GermJets g = linear_conjugate(f, T);
  // P2(v) = lambda v puts nothing on x^2 of the second component; drop the roundoff
  g.y.set(2, 0, 0, 0.0);
  return g;
}

std::pair<GermFamily, TransformRecord> straighten(const GermJets& f0, const CharacteristicDirection& dir) {
  if (!dir.nondegenerate) throw InvalidInput("straighten needs a nondegenerate characteristic direction");
  const Complex alpha = *dir.alpha;
  const int m_pre = static_cast<int>(std::floor(alpha.real())) + 1;
  const int n = std::max(f0.order(), m_pre + 3) + 2;
  GermJets F{f0.x.with_order(n), f0.y.with_order(n)};
  TransformRecord rec;

  if (dir.v != Eigen::Vector2cd(1, 0)) {
    Matrix2 T;
    F = align_direction(F, dir, &T);
    rec.steps.push_back(LinearChange{T});
  }
  const Complex lambda = F.x.coeff(2, 0, 0);
  if (lambda != Complex(1.0)) {
    F = rescale_conjugate(F, lambda);
    rec.steps.push_back(Rescale{lambda});
  }
  // drop roundoff on coefficients that must vanish
  F.y.set(2, 0, 0, 0.0);
  const Complex eta = F.y.coeff(1, 1, 0);
  const int m = static_cast<int>(std::floor(eta.real()));
  if (std::abs(eta - (alpha + 1.0)) > 1e-10 * (1 + std::abs(eta)) || m != m_pre)
    throw Error("director and eta disagree (eta must equal alpha + 1)");

  const auto sol = formal_invariant_curve(F, CharacteristicDirection{Eigen::Vector2cd(1, 0), 1.0, alpha, true}, m + 2);
  bool flat = true;
  for (int k = 0; k <= sol.zeta.order(); ++k) flat = flat && sol.zeta[k] == Complex(0);
  if (!flat) {
    F = shear_conjugate(F, x_series(sol.zeta, n));
    rec.steps.push_back(CurveFlatten{sol.zeta});
  }
  GermFamily out = family_from_components(F, n - 2);
  flush_low_d(out);
  return {out, rec};
}

std::pair<GermFamily, TransformRecord> normalize_family(const GermJets& raw) {
  const int n0 = raw.order();
  GermJets F = raw;
  TransformRecord rec;
  const Complex lambda = F.x.coeff(2, 0, 0);
  if (lambda == Complex(0)) throw InvalidInput("first component has no x^2 term");
  if (lambda != Complex(1.0)) {
    F = rescale_conjugate(F, lambda);
    rec.steps.push_back(Rescale{lambda});
  }
  if (F.x.coeff(1, 0, 0) != Complex(1.0) || F.x.coeff(0, 0, 1) != Complex(0.0))
    throw InvalidInput("p_eps must be x + O(2) with no first-order eps drift");

  Complex c11 = F.x.coeff(1, 0, 1), c02 = F.x.coeff(0, 0, 2);
  const Complex split = std::sqrt(c11 * c11 - 4.0 * c02);  // w+' - w-'
  if (std::abs(split) < 1e-10) throw DegenerateSplitting("w+'(0) = w-'(0): fixed points do not split linearly");
  const Complex mu = split / (2.0 * kI);
  if (std::abs(mu - 1.0) > 1e-14) {
    // eps = eps_new / mu
    Series x(n0), y(n0);
    for (const auto& [m, v] : F.x.terms()) x.add(m[0], m[1], m[2], v * std::pow(mu, -m[2]));
    for (const auto& [m, v] : F.y.terms()) y.add(m[0], m[1], m[2], v * std::pow(mu, -m[2]));
    F = {x, y};
    rec.steps.push_back(ParamRescale{mu});
    c11 = F.x.coeff(1, 0, 1);
    c02 = F.x.coeff(0, 0, 2);
  }

  // w+-(eps) as series: P(w(eps), eps) = 0 with P = p_eps(x) - x
  const int L = n0;
  Series P = slice_y0(F.x) - var(0, n0);
  auto root = [&](Complex w1) {
    Jet1<Complex> w(L);
    w[1] = w1;
    auto res = [&](int deg) {
      Jet1<Complex> e(L);
      e[1] = 1.0;
      Jet1<Complex> acc(L);
      for (const auto& [m, v] : P.terms()) {
        Jet1<Complex> term({v}, L);
        for (int i = 0; i < m[0]; ++i) term = term * w;
        for (int k = 0; k < m[2]; ++k) term = term * e;
        acc += term;
      }
      return acc.coeff(deg);
    };
    const Complex slope = 2.0 * w1 + c11;
    for (int l = 2; l < L; ++l) {
      w[l] = 0.0;
      w[l] = -res(l + 1) / slope;
    }
    return w;
  };
  const Jet1<Complex> wp = root((-c11 + 2.0 * kI) / 2.0), wm = root((-c11 - 2.0 * kI) / 2.0);

  // s = 2i eps / (w+ - w-)
  Jet1<Complex> D(L - 1);
  for (int l = 0; l < L; ++l) D[l] = wp.coeff(l + 1) - wm.coeff(l + 1);
  const Jet1<Complex> s = reciprocal(D) * Complex(2.0 * kI);
  const Jet1<Complex> r = D * Complex(1.0 / (2.0 * kI));

  bool trivial = std::abs(s[0] - 1.0) < 1e-15 && std::abs(wp[1] - kI) < 1e-15;
  for (int l = 1; l < s.order() && trivial; ++l) trivial = std::abs(s[l]) < 1e-15;
  for (int l = 2; l <= wp.order() && trivial; ++l) trivial = std::abs(wp[l]) < 1e-15;
  if (!trivial) {
    const Series x = var(0, n0), y = var(1, n0), e = var(2, n0);
    Series Ninv = eps_series(r, 1, n0) + eps_series(wp, 0, n0);
    for (int l = 0; l <= r.order(); ++l) Ninv.add(0, 0, l + 1, -kI * r[l]);
    const Series Sx = eps_series(s, 0, n0), W = eps_series(wp, 0, n0);
    GermJets G{compose(F.x, Ninv, y, e), compose(F.y, Ninv, y, e)};
    G.x = Sx * (G.x - W) + Series::monomial(0, 0, 1, kI, n0);
    F = G;
    rec.steps.push_back(AffineN{s, wp});
  }

  GermFamily f = family_from_components(F, n0);
  const int m = f.m();
  const Complex dcoef = f.d.coeff(m + 2, 0, 0);
  if (dcoef != Complex(0)) {
    const Complex kappa = dcoef / (double(m + 1) - f.eta);
    Series U = Series::monomial(m + 1, 0, 0, kappa, n0);
    U.add(m - 1, 0, 2, kappa);
    F = shear_conjugate(F, U);
    rec.steps.push_back(PolyPsi{kappa, m});
    f = family_from_components(F, n0);
  }
  flush_low_d(f);
  return {f, rec};
}

}  // namespace implab
