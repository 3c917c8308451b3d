#include "implab/fatou.hpp"

#include <cmath>
#include <vector>

namespace implab {

Complex log1p_c(Complex u) {
  if (std::abs(u) < 1e-4) {
    // five terms are plenty below 1e-4
    return u * (1.0 + u * (-0.5 + u * (1.0 / 3 + u * (-0.25 + u * 0.2))));
  }
  return std::log(1.0 + u);
}

Complex expm1_c(Complex z) {
  if (std::abs(z) < 1e-4) return z * (1.0 + z * (0.5 + z * (1.0 / 6 + z * (1.0 / 24 + z / 120.0))));
  return std::exp(z) - 1.0;
}

bool petal_contains(const PetalSpec& p, Complex eta, const Point& z) {
  const Complex x = z(0), y = z(1);
  if (p.orientation == Orientation::incoming) {
    if (!(std::abs(x + p.r) < p.r)) return false;
    return std::abs(y / pow_eta(-x, eta)) < p.C;
  }
  if (!(std::abs(x - p.r) < p.r)) return false;
  return std::abs(y / pow_eta(x, eta)) < p.C;
}

namespace {

// compensated complex accumulator (Neumaier, per component)
struct CSum {
  double s[2] = {0, 0}, c[2] = {0, 0};
  void add(Complex v) {
    const double in[2] = {v.real(), v.imag()};
    for (int k = 0; k < 2; ++k) {
      const double t = s[k] + in[k];
      if (std::abs(s[k]) >= std::abs(in[k]))
        c[k] += (s[k] - t) + in[k];
      else
        c[k] += (in[k] - t) + s[k];
      s[k] = t;
    }
  }
  Complex value() const { return {s[0] + c[0], s[1] + c[1]}; }
};

// Neville at h = 0 through the given nodes
Complex neville0(const std::vector<Complex>& h, const std::vector<Complex>& v) {
  std::vector<Complex> P(v);
  const size_t n = v.size();
  for (size_t k = 1; k < n; ++k)
    for (size_t i = n - 1; i >= k; --i) {
      P[i] = (-h[i - k] * P[i] + h[i] * P[i - 1]) / (h[i] - h[i - k]);
      if (i == k) break;
    }
  return P[n - 1];
}

}  // namespace

FatouEngine::FatouEngine(const GermFamily& germ, FatouPolicy policy)
    : germ_(germ), policy_(policy), g_(germ, 0.0) {
  Series am1 = germ.a;
  am1.set(0, 0, 0, 0.0);
  am1_ = Poly2(am1, 0.0);
  one_minus_a_ = 1.0 - germ.a_coef();
  in_ = {Orientation::incoming, adapt_radius(Orientation::incoming), policy_.C};
  out_ = {Orientation::outgoing, adapt_radius(Orientation::outgoing), policy_.C};
}

bool FatouEngine::in_domain(const Point& z) const {
  const double R = policy_.domain_radius;
  return z.allFinite() && std::abs(z(0)) <= R && std::abs(z(1)) <= R;
}

Point FatouEngine::inverse_step(const Point& z) const {
  // Newton on g(w) = z from w = z - (g(z) - z)
  Point w = z - g_.displacement(z);
  for (int it = 0; it < 60; ++it) {
    const Point F = g_(w) - z;
    const Matrix2 J = g_.jacobian(w);
    const Point dw = J.partialPivLu().solve(F);
    if (!dw.allFinite()) break;
    w -= dw;
    if (dw.norm() <= 1e-16 * std::max(w.norm(), 1e-300)) break;
  }
  const double scale = std::max(z.norm(), 1e-300);
  if (!w.allFinite() || (g_(w) - z).norm() > 1e-13 * scale || (w - z).norm() > 0.5 * std::abs(z(0)) + 1e-300)
    throw InverseBranchLost("local inverse of g left its contraction region");
  return w;
}

double FatouEngine::adapt_radius(Orientation o) const {
  const Complex eta = germ_.eta;
  const double C = policy_.C;
  double r = std::min(0.25, policy_.domain_radius / 2);
  for (int tries = 0; tries < 40; ++tries, r *= 0.5) {
    const PetalSpec inner{o, r, C}, outer{o, r, C + 1};
    bool good = true;
    for (int k = 0; k < 200 && good; ++k) {
      // boundary torus, slightly inside, avoiding the tip x = 0
      const double th = 0.05 + (2 * kPi - 0.1) * (k + 0.5) / 200.0;
      const double ph = 2 * kPi * std::fmod(k * 0.6180339887498949, 1.0);
      const double sgn = o == Orientation::incoming ? -1.0 : 1.0;
      const Complex x = sgn * r + 0.999 * r * std::exp(kI * th) * sgn;
      const Complex base = o == Orientation::incoming ? -x : x;
      const Complex y = 0.999 * C * std::exp(kI * ph) * pow_eta(base, eta);
      const Point z(x, y);
      if (!petal_contains(inner, eta, z)) continue;
      try {
        const Point w = o == Orientation::incoming ? g_(z) : inverse_step(z);
        good = in_domain(w) && petal_contains(outer, eta, w);
      } catch (const Error&) {
        good = false;
      }
    }
    if (good) return r;
  }
  throw Error("could not find an invariant petal radius");
}

// ------------------------------------------------------------ limits

Point FatouEngine::petal_limit(const Point& z, Orientation o) const {
  const bool inc = o == Orientation::incoming;
  const Complex eta = germ_.eta;
  const Complex x0 = z(0);
  if (x0 == Complex(0)) throw InvalidInput("Fatou coordinate undefined at x = 0");
  const Complex X0 = -1.0 / x0;
  const Complex Y0 = z(1) / pow_eta(inc ? -x0 : x0, eta);

  // X = X0 +- n + D,  Y = Y0 + DY
  CSum D, DY;
  long n = 0;
  auto X_of = [&] { return X0 + (inc ? double(n) : -double(n)) + D.value(); };
  auto Y_of = [&] { return Y0 + DY.value(); };

  // increments (e, dY) of one forward step taken from (X, Y)
  auto increments = [&](Complex X, Complex Y, Complex& e, Complex& dY) {
    const Complex x = -1.0 / X;
    const Complex base = inc ? -x : x;
    const Complex y = Y == Complex(0) ? Complex(0) : Y * pow_eta(base, eta);
    const Complex am1 = am1_(x, 0.0);
    const Complex b0 = g_.b(x, y);
    const Complex delta = x * x * (1.0 + am1) + y * b0;
    const Complex x1 = x + delta;
    e = (x * x * am1 + y * b0 - x * delta) / (x * x1);
    const Complex c0 = g_.c(x, y), d0 = g_.d(x);
    const Complex logF = log1p_c(c0) - eta * log1p_c(delta / x);
    dY = Y * expm1_c(logF);
    if (d0 != Complex(0)) dY += d0 / pow_eta(inc ? -x1 : x1, eta);
  };

  auto phi_value = [&] {
    const Complex X = X_of();
    return X0 + D.value() - one_minus_a_ * principal_log(inc ? X : -X);
  };

  const double R0 = std::max(std::abs(X0), policy_.start_radius);
  double next = R0;
  int doublings = 0;
  std::vector<Complex> hs, ps, ys;
  std::vector<Complex> est_p, est_y;
  Complex e_prev = 0.0, dy_prev = 0.0;

  const long hard_cap = static_cast<long>(R0 * std::ldexp(1.0, policy_.max_doublings + 1)) + 1000;
  for (;;) {
    const Complex X = X_of();
    if (!std::isfinite(X.real()) || !std::isfinite(X.imag()))
      throw TailNotConverged("petal iteration produced a non-finite value");
    if (std::abs(X) >= next) {
      hs.push_back(1.0 / X);
      ps.push_back(phi_value());
      ys.push_back(Y_of());
      const size_t w = std::min<size_t>(policy_.window, hs.size());
      const std::vector<Complex> hh(hs.end() - w, hs.end()), pp(ps.end() - w, ps.end()), yy(ys.end() - w, ys.end());
      est_p.push_back(neville0(hh, pp));
      est_y.push_back(neville0(hh, yy));
      const size_t k = est_p.size();
      auto settled = [&](const std::vector<Complex>& v, double tol, int need) {
        if (static_cast<int>(v.size()) < need + 1 || hs.size() < 3) return false;
        for (int i = 0; i < need; ++i)
          if (std::abs(v[k - 1 - i] - v[k - 2 - i]) > tol * (1.0 + std::abs(v[k - 1]))) return false;
        return true;
      };
      if (settled(est_p, policy_.tail_tol, 2) && settled(est_y, policy_.tail_tol, 2)) break;
      if (doublings >= policy_.max_doublings) {
        if (settled(est_p, policy_.accept_tol, 1) && settled(est_y, policy_.accept_tol, 1)) break;
        throw TailNotConverged("Fatou limit did not settle before the doubling cap");
      }
      ++doublings;
      next *= 2.0;
    }
    if (n > hard_cap) throw TailNotConverged("petal orbit does not grow in |X|");

    Complex e, dY;
    if (inc) {
      increments(X, Y_of(), e, dY);
      D.add(e);
      DY.add(dY);
    } else {
      // backward step: solve X_prev = X - 1 - e(X_prev, Y_prev)
      const Complex X1 = X, Y1 = Y_of();
      Complex Xp = X1 - 1.0 - e_prev, Yp = Y1 - dy_prev;
      for (int it = 0; it < 40; ++it) {
        increments(Xp, Yp, e, dY);
        const Complex Xn = X1 - 1.0 - e, Yn = Y1 - dY;
        const bool done = std::abs(Xn - Xp) <= 1e-16 * std::abs(Xn) && std::abs(Yn - Yp) <= 1e-16 * std::abs(Yn);
        Xp = Xn;
        Yp = Yn;
        if (done) break;
      }
      D.add(-e);
      DY.add(-dY);
      e_prev = e;
      dy_prev = dY;
    }
    ++n;
  }
  return Point(est_p.back(), est_y.back());
}

PetalSpec FatouEngine::petal_at_level(Orientation o, double level) const {
  const PetalSpec& base = o == Orientation::incoming ? in_ : out_;
  if (!(level > base.C)) return base;
  // keep |Y| |x|^(rho-2), the size of the y-coupling relative to x^2, at the validated value
  const double rho = germ_.rho();
  return {o, base.r * std::pow(base.C / level, 1.0 / (rho - 2.0)), level};
}

// petal containing w at the smallest usable level, if any
std::optional<PetalSpec> FatouEngine::entry_petal(const Point& w, Orientation o) const {
  const PetalSpec& base = o == Orientation::incoming ? in_ : out_;
  const Complex x = o == Orientation::incoming ? -w(0) : w(0);
  if (!(std::abs(x - base.r) < base.r)) return std::nullopt;
  const double Y = std::abs(w(1) / pow_eta(x, germ_.eta));
  const PetalSpec p = petal_at_level(o, std::max(base.C, 2.0 * Y));
  if (petal_contains(p, germ_.eta, w)) return p;
  return std::nullopt;
}

Point FatouEngine::incoming(const Point& z) const {
  Point w = z;
  for (long n = 0; n <= policy_.entry_budget; ++n) {
    if (!in_domain(w)) throw NotInBasin(n, "orbit left the germ domain before reaching the incoming petal");
    if (entry_petal(w, Orientation::incoming)) {
      Point v = petal_limit(w, Orientation::incoming);
      v(0) -= double(n);
      return v;
    }
    w = g_(w);
  }
  throw NotInBasin(policy_.entry_budget);
}

Point FatouEngine::outgoing(const Point& z) const {
  Point w = z;
  for (long n = 0; n <= policy_.entry_budget; ++n) {
    if (!in_domain(w)) throw NotInBasin(n, "backward orbit left the germ domain");
    if (entry_petal(w, Orientation::outgoing)) {
      Point v = petal_limit(w, Orientation::outgoing);
      v(0) += double(n);
      return v;
    }
    w = inverse_step(w);
  }
  throw NotInBasin(policy_.entry_budget);
}

// ------------------------------------------------------------ inverse and extension

Point FatouEngine::outgoing_inverse(const Point& XY) const {
  const Complex W = XY(0), Yt = XY(1), eta = germ_.eta;
  const double rho = germ_.rho();
  // Phi^o_X ~ X - (1-a) log(-X) with X = -1/x
  Complex x = -1.0 / (W + one_minus_a_ * principal_log(-W));
  Complex y = Yt * pow_eta(x, eta);
  const Point seed(x, y);
  double prev_res = INFINITY;
  // chord Newton: the FD Jacobian is refreshed only when the residual stalls
  Complex a11 = 0, a12 = 0, a21 = 0, a22 = 0;
  bool have_jac = false;
  for (int it = 0; it < policy_.newton_max; ++it) {
    const Point F0 = petal_limit(Point(x, y), Orientation::outgoing);
    const Point r = F0 - XY;
    const double res = r.norm();
    const double floor_tol = 1e-9 * (1.0 + XY.norm());
    if (res <= policy_.newton_tol * (1.0 + XY.norm())) return Point(x, y);
    if (it >= 1 && res > 0.1 * prev_res && res <= floor_tol) return Point(x, y);  // noise floor
    if (!have_jac || res > 0.1 * prev_res) {
      const Complex hx = 1e-6 * x;
      const Complex hy = 1e-6 * std::pow(std::abs(x), rho) * std::max(1.0, std::abs(Yt));
      const Point Fx = petal_limit(Point(x + hx, y), Orientation::outgoing);
      const Point Fy = petal_limit(Point(x, y + hy), Orientation::outgoing);
      a11 = (Fx(0) - F0(0)) / hx, a21 = (Fx(1) - F0(1)) / hx;
      a12 = (Fy(0) - F0(0)) / hy, a22 = (Fy(1) - F0(1)) / hy;
      have_jac = true;
    }
    prev_res = res;
    const Complex det = a11 * a22 - a12 * a21;
    // Cramer keeps y exactly zero on the invariant line
    const Complex dx = (a22 * r(0) - a12 * r(1)) / det;
    const Complex dy = (a11 * r(1) - a21 * r(0)) / det;
    x -= dx;
    y -= dy;
    if (!std::isfinite(std::abs(x)) || !std::isfinite(std::abs(y)) || !petal_contains(petal_at_level(Orientation::outgoing, std::max(out_.C, 2.0 * std::abs(Yt)) + 1), eta, Point(x, y)))
      throw NewtonDivergence("outgoing inverse left the petal", seed(0), seed(1), x, y);
  }
  throw NewtonDivergence("outgoing inverse did not converge", seed(0), seed(1), x, y);
}

Point FatouEngine::psi_o(const Point& XY) const {
  const Complex W = XY(0);
  const double r = petal_at_level(Orientation::outgoing, std::max(out_.C, 2.0 * std::abs(XY(1))) + 1).r;
  const double T = std::max(2.0 / r, policy_.start_radius);
  // smallest n with Re(W - n) < -T and |Im W| < 2 |Re(W - n)|
  double need = W.real() + std::max(T, 0.5 * std::abs(W.imag()));
  long n = std::max(0L, static_cast<long>(std::floor(need)) + 1);
  for (int attempt = 0; attempt < 4; ++attempt) {
    try {
      Point z = outgoing_inverse(Point(W - double(n), XY(1)));
      for (long k = 0; k < n; ++k) {
        z = g_(z);
        if (!in_domain(z)) throw DomainEscape(k + 1);
      }
      return z;
    } catch (const NewtonDivergence&) {
      if (attempt == 3) throw;
      n = 2 * n + 64;  // deeper, where the seed is better
    }
  }
  throw Error("unreachable");
}

BasinOutcome FatouEngine::basin(const Point& z, long budget) const {
  Point w = z;
  for (long n = 0; n <= budget; ++n) {
    if (!in_domain(w)) return BasinEscaped{n};
    if (const auto p = entry_petal(w, Orientation::incoming)) return BasinInside{n, p->C};
    w = g_(w);
  }
  return BasinUnknown{};
}

}  // namespace implab
