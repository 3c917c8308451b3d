#pragma once

#include <array>
#include <complex>
#include <map>
#include <vector>

#include "implab/errors.hpp"

namespace implab {

template <class S>
inline bool scalar_is_zero(const S& s) {
  return s == S(0);
}

// ---------------------------------------------------------------- Jet1
// truncated series in one variable t, coefficients c[0..order]
template <class S>
class Jet1 {
 public:
  explicit Jet1(int order = 0) : c_(static_cast<size_t>(order) + 1, S(0)) {}
  Jet1(std::initializer_list<S> c, int order) : Jet1(order) {
    int i = 0;
    for (const S& v : c) {
      if (i > order) break;
      c_[i++] = v;
    }
  }

  int order() const { return static_cast<int>(c_.size()) - 1; }
  const S& operator[](int i) const { return c_[i]; }
  S& operator[](int i) { return c_[i]; }
  // zero beyond the order instead of UB
  S coeff(int i) const { return (i >= 0 && i <= order()) ? c_[i] : S(0); }
  const std::vector<S>& coeffs() const { return c_; }

  Jet1& operator+=(const Jet1& o) {
    check(o);
    for (int i = 0; i <= order(); ++i) c_[i] += o.c_[i];
    return *this;
  }
  Jet1& operator-=(const Jet1& o) {
    check(o);
    for (int i = 0; i <= order(); ++i) c_[i] -= o.c_[i];
    return *this;
  }
  Jet1& operator*=(const S& s) {
    for (auto& v : c_) v *= s;
    return *this;
  }
  friend Jet1 operator+(Jet1 a, const Jet1& b) { return a += b; }
  friend Jet1 operator-(Jet1 a, const Jet1& b) { return a -= b; }
  friend Jet1 operator*(Jet1 a, const S& s) { return a *= s; }
  friend Jet1 operator*(const S& s, Jet1 a) { return a *= s; }
  friend Jet1 operator*(const Jet1& a, const Jet1& b) { return mul(a, b); }
  friend bool operator==(const Jet1& a, const Jet1& b) { return a.c_ == b.c_; }

  static Jet1 mul(const Jet1& a, const Jet1& b) {
    a.check(b);
    const int n = a.order();
    Jet1 r(n);
    for (int i = 0; i <= n; ++i) {
      if (scalar_is_zero(a.c_[i])) continue;
      for (int j = 0; i + j <= n; ++j) r.c_[i + j] += a.c_[i] * b.c_[j];
    }
    return r;
  }

 private:
  void check(const Jet1& o) const {
    if (o.order() != order()) throw OrderMismatch(order(), o.order());
  }
  std::vector<S> c_;
};

template <class S>
Jet1<S> truncate(const Jet1<S>& a, int order) {
  Jet1<S> r(order);
  for (int i = 0; i <= order; ++i) r[i] = a.coeff(i);
  return r;
}

// outer(inner(t)); inner must vanish at 0
template <class S>
Jet1<S> compose(const Jet1<S>& outer, const Jet1<S>& inner) {
  if (outer.order() != inner.order()) throw OrderMismatch(outer.order(), inner.order());
  if (!scalar_is_zero(inner[0])) throw InvalidInput("compose: inner jet has a constant term");
  const int n = outer.order();
  // Horner in jet arithmetic
  Jet1<S> r(n);
  for (int i = n; i >= 0; --i) {
    r = r * inner;
    r[0] += outer[i];
  }
  return r;
}

// compositional inverse of a jet with a[0]=0, a[1]!=0
template <class S>
Jet1<S> invert_linear(const Jet1<S>& a) {
  const int n = a.order();
  if (!scalar_is_zero(a[0])) throw NonInvertibleJet("invert_linear: constant term is nonzero");
  if (n >= 1 && scalar_is_zero(a[1])) throw NonInvertibleJet("invert_linear: linear coefficient vanishes");
  Jet1<S> b(n);
  if (n == 0) return b;
  b[1] = S(1) / a[1];
  // fix one coefficient at a time: a(b(t)) = t mod t^{k+1}
  for (int k = 2; k <= n; ++k) {
    Jet1<S> c = compose(a, b);
    b[k] = -c[k] / a[1];
  }
  return b;
}

template <class S>
Jet1<S> reciprocal(const Jet1<S>& a) {
  if (scalar_is_zero(a[0])) throw NonInvertibleJet("reciprocal: constant term vanishes");
  const int n = a.order();
  Jet1<S> r(n);
  r[0] = S(1) / a[0];
  for (int k = 1; k <= n; ++k) {
    S s(0);
    for (int j = 1; j <= k; ++j) s += a[j] * r[k - j];
    r[k] = -s / a[0];
  }
  return r;
}

template <class S, class T>
T evaluate(const Jet1<S>& a, T t) {
  T r(0);
  for (int i = a.order(); i >= 0; --i) r = r * t + T(a[i]);
  return r;
}

// ---------------------------------------------------------------- Jet3
// sparse truncated polynomial in (x, y, eps); every key has i+j+k <= order
using MultiIndex = std::array<int, 3>;

template <class S>
class Jet3 {
 public:
  using Map = std::map<MultiIndex, S>;

  explicit Jet3(int order = 0) : order_(order) {}

  int order() const { return order_; }
  const Map& terms() const { return t_; }
  bool empty() const { return t_.empty(); }

  S coeff(int i, int j, int k) const {
    auto it = t_.find({i, j, k});
    return it == t_.end() ? S(0) : it->second;
  }
  // accumulate, dropping anything above the cap
  void add(int i, int j, int k, const S& v) {
    if (i + j + k > order_ || scalar_is_zero(v)) return;
    auto [it, fresh] = t_.try_emplace(MultiIndex{i, j, k}, v);
    if (!fresh) {
      it->second += v;
      if (scalar_is_zero(it->second)) t_.erase(it);
    }
  }
  void set(int i, int j, int k, const S& v) {
    if (i + j + k > order_) throw InvalidInput("Jet3::set beyond truncation order");
    if (scalar_is_zero(v))
      t_.erase({i, j, k});
    else
      t_[{i, j, k}] = v;
  }

  static Jet3 constant(const S& v, int order) {
    Jet3 r(order);
    r.add(0, 0, 0, v);
    return r;
  }
  static Jet3 monomial(int i, int j, int k, const S& v, int order) {
    Jet3 r(order);
    r.add(i, j, k, v);
    return r;
  }

  Jet3& operator+=(const Jet3& o) {
    check(o);
    for (const auto& [m, v] : o.t_) add(m[0], m[1], m[2], v);
    return *this;
  }
  Jet3& operator-=(const Jet3& o) {
    check(o);
    for (const auto& [m, v] : o.t_) add(m[0], m[1], m[2], -v);
    return *this;
  }
  Jet3& operator*=(const S& s) {
    if (scalar_is_zero(s)) {
      t_.clear();
      return *this;
    }
    for (auto& [m, v] : t_) v *= s;
    return *this;
  }
  friend Jet3 operator+(Jet3 a, const Jet3& b) { return a += b; }
  friend Jet3 operator-(Jet3 a, const Jet3& b) { return a -= b; }
  friend Jet3 operator-(Jet3 a) { return a *= S(-1); }
  friend Jet3 operator*(Jet3 a, const S& s) { return a *= s; }
  friend Jet3 operator*(const S& s, Jet3 a) { return a *= s; }
  friend Jet3 operator*(const Jet3& a, const Jet3& b) {
    a.check(b);
    Jet3 r(a.order_);
    for (const auto& [ma, va] : a.t_) {
      const int da = ma[0] + ma[1] + ma[2];
      for (const auto& [mb, vb] : b.t_) {
        if (da + mb[0] + mb[1] + mb[2] > a.order_) continue;
        r.add(ma[0] + mb[0], ma[1] + mb[1], ma[2] + mb[2], va * vb);
      }
    }
    return r;
  }
  friend bool operator==(const Jet3& a, const Jet3& b) { return a.order_ == b.order_ && a.t_ == b.t_; }

  // same terms, new cap (raising keeps everything)
  Jet3 with_order(int order) const {
    Jet3 r(order);
    for (const auto& [m, v] : t_) r.add(m[0], m[1], m[2], v);
    return r;
  }

  int max_degree(int var) const {
    int d = 0;
    for (const auto& [m, v] : t_) d = std::max(d, m[var]);
    return d;
  }
  int total_degree() const {
    int d = 0;
    for (const auto& [m, v] : t_) d = std::max(d, m[0] + m[1] + m[2]);
    return d;
  }

  template <class F>
  Jet3<std::invoke_result_t<F, const S&>> map(F f) const {
    Jet3<std::invoke_result_t<F, const S&>> r(order_);
    for (const auto& [m, v] : t_) r.add(m[0], m[1], m[2], f(v));
    return r;
  }

 private:
  void check(const Jet3& o) const {
    if (o.order_ != order_) throw OrderMismatch(order_, o.order_);
  }
  int order_;
  Map t_;
};

template <class S>
Jet3<S> truncate(const Jet3<S>& a, int order) {
  return a.with_order(order);
}

// F(X, Y, E) with jets substituted for the three variables
template <class S>
Jet3<S> compose(const Jet3<S>& F, const Jet3<S>& X, const Jet3<S>& Y, const Jet3<S>& E) {
  const int n = X.order();
  if (Y.order() != n) throw OrderMismatch(n, Y.order());
  if (E.order() != n) throw OrderMismatch(n, E.order());
  auto powers = [n](const Jet3<S>& base, int top) {
    std::vector<Jet3<S>> p;
    p.push_back(Jet3<S>::constant(S(1), n));
    for (int i = 1; i <= top; ++i) p.push_back(p.back() * base);
    return p;
  };
  const auto px = powers(X, F.max_degree(0));
  const auto py = powers(Y, F.max_degree(1));
  const auto pe = powers(E, F.max_degree(2));
  Jet3<S> r(n);
  // group by (j,k) so each y^j e^k product is formed once
  std::map<std::array<int, 2>, Jet3<S>> inner;
  for (const auto& [m, v] : F.terms()) {
    auto [it, fresh] = inner.try_emplace({m[1], m[2]}, Jet3<S>(n));
    it->second += px[m[0]] * v;
  }
  for (const auto& [jk, poly] : inner) r += poly * (py[jk[0]] * pe[jk[1]]);
  return r;
}

// product over unit-constant jets: 1/a as a truncated geometric series
template <class S>
Jet3<S> reciprocal(const Jet3<S>& a) {
  const S c0 = a.coeff(0, 0, 0);
  if (scalar_is_zero(c0)) throw NonInvertibleJet("reciprocal: constant term vanishes");
  const int n = a.order();
  Jet3<S> u = a * (S(1) / c0);
  u.add(0, 0, 0, S(-1));
  Jet3<S> r = Jet3<S>::constant(S(1), n);
  Jet3<S> term = r;
  for (int i = 1; i <= n; ++i) {
    term = term * u * S(-1);
    if (term.empty()) break;
    r += term;
  }
  return r * (S(1) / c0);
}

template <class S>
Jet3<S> derivative(const Jet3<S>& a, int var) {
  Jet3<S> r(a.order());
  for (const auto& [m, v] : a.terms()) {
    if (m[var] == 0) continue;
    MultiIndex d = m;
    d[var] -= 1;
    r.add(d[0], d[1], d[2], v * S(m[var]));
  }
  return r;
}

// F(t, zeta(t), 0) as a one-variable jet
template <class S>
Jet1<S> substitute_curve(const Jet3<S>& F, const Jet1<S>& zeta) {
  const int n = zeta.order();
  Jet1<S> t(n);
  if (n >= 1) t[1] = S(1);
  std::vector<Jet1<S>> pt{Jet1<S>({S(1)}, n)}, pz{Jet1<S>({S(1)}, n)};
  for (int i = 1; i <= F.max_degree(0); ++i) pt.push_back(pt.back() * t);
  for (int j = 1; j <= F.max_degree(1); ++j) pz.push_back(pz.back() * zeta);
  Jet1<S> r(n);
  for (const auto& [m, v] : F.terms()) {
    if (m[2] != 0) continue;
    r += (pt[m[0]] * pz[m[1]]) * v;
  }
  return r;
}

template <class S, class T>
T evaluate(const Jet3<S>& a, T x, T y, T e) {
  T r(0);
  for (const auto& [m, v] : a.terms()) {
    T term = T(v);
    for (int i = 0; i < m[0]; ++i) term *= x;
    for (int j = 0; j < m[1]; ++j) term *= y;
    for (int k = 0; k < m[2]; ++k) term *= e;
    r += term;
  }
  return r;
}

}  // namespace implab
