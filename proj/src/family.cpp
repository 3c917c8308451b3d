#include "implab/family.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <Eigen/Eigenvalues>

namespace implab {

namespace {

std::string fmt_c(Complex z) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.17g%+.17gi", z.real(), z.imag());
  return buf;
}

std::string fmt_idx(const MultiIndex& m) {
  return "(" + std::to_string(m[0]) + "," + std::to_string(m[1]) + "," + std::to_string(m[2]) + ")";
}

// series that only depend on (x, eps)
void require_no_y(const Series& s, const char* name) {
  for (const auto& [m, v] : s.terms())
    if (m[1] != 0) throw InvalidInput(std::string(name) + " series may not depend on y");
}

}  // namespace

double default_gamma(double rho) {
  if (0.6 * rho > 2.0) return 0.6;
  return std::min(0.66, std::max(2.05 / rho, 0.51));
}

GermFamily GermFamily::model(Complex q, Complex eta) {
  GermFamily f;
  f.eta = eta;
  f.q = q;
  const int order = std::max(7, static_cast<int>(std::floor(eta.real())) + 3);
  f.a = Series::constant(1.0, order);
  f.b = Series(order);
  f.c = Series(order);
  f.c.add(1, 0, 0, eta);
  f.c.add(0, 0, 1, q);
  f.d = Series(order);
  f.gamma = default_gamma(eta.real());
  return f;
}

// ------------------------------------------------------------ json

Complex complex_from_json(const nlohmann::json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_object()) return {j.value("re", 0.0), j.value("im", 0.0)};
  if (j.is_array() && j.size() == 2) return {j[0].get<double>(), j[1].get<double>()};
  throw InvalidInput("expected a complex number (number, {re,im} or [re,im])");
}

nlohmann::json complex_to_json(Complex z) { return {{"re", z.real()}, {"im", z.imag()}}; }

Series series_from_json(const nlohmann::json& arr, int order) {
  Series s(order);
  if (arr.is_null()) return s;
  if (!arr.is_array()) throw InvalidInput("series must be an array of coefficient triples");
  for (const auto& t : arr) {
    const int i = t.at("i").get<int>(), j = t.at("j").get<int>(), k = t.at("k").get<int>();
    if (i < 0 || j < 0 || k < 0) throw InvalidInput("negative exponent in series");
    if (i + j + k > order) throw InvalidInput("series term exceeds declared order");
    s.add(i, j, k, Complex(t.value("re", 0.0), t.value("im", 0.0)));
  }
  return s;
}

nlohmann::json series_to_json(const Series& s) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [m, v] : s.terms())
    arr.push_back({{"i", m[0]}, {"j", m[1]}, {"k", m[2]}, {"re", v.real()}, {"im", v.imag()}});
  return arr;
}

GermFamily family_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidInput("family must be a JSON object");
  if (j.contains("preset")) {
    const auto name = j["preset"].get<std::string>();
    if (name != "model") throw InvalidInput("unknown family preset '" + name + "'");
    GermFamily f = GermFamily::model(j.contains("q") ? complex_from_json(j["q"]) : Complex(0),
                                     j.contains("eta") ? complex_from_json(j["eta"]) : Complex(4));
    if (j.contains("gamma")) f.gamma = j["gamma"].get<double>();
    return f;
  }

  // the order must hold every listed term
  int order = j.value("order", 0);
  for (const char* key : {"a", "b", "c", "d"}) {
    if (!j.contains(key)) continue;
    for (const auto& t : j[key]) order = std::max(order, t.at("i").get<int>() + t.at("j").get<int>() + t.at("k").get<int>());
  }

  GermFamily f;
  Series c_raw = series_from_json(j.value("c", nlohmann::json()), std::max(order, 1));
  if (j.contains("eta")) {
    f.eta = complex_from_json(j["eta"]);
  } else {
    f.eta = c_raw.coeff(1, 0, 0);
  }
  order = std::max(order, static_cast<int>(std::floor(f.eta.real())) + 3);
  f.a = series_from_json(j.value("a", nlohmann::json()), order);
  f.b = series_from_json(j.value("b", nlohmann::json()), order);
  f.c = c_raw.with_order(order);
  f.d = series_from_json(j.value("d", nlohmann::json()), order);
  require_no_y(f.a, "a");
  require_no_y(f.d, "d");

  if (f.c.coeff(1, 0, 0) == Complex(0)) f.c.add(1, 0, 0, f.eta);
  if (f.c.coeff(1, 0, 0) != f.eta) throw InvalidInput("eta disagrees with the x-coefficient of c");
  if (j.contains("q")) {
    f.q = complex_from_json(j["q"]);
    if (f.c.coeff(0, 0, 1) == Complex(0)) f.c.add(0, 0, 1, f.q);
    if (f.c.coeff(0, 0, 1) != f.q) throw InvalidInput("q disagrees with the eps-coefficient of c");
  } else {
    f.q = f.c.coeff(0, 0, 1);
  }
  f.gamma = j.contains("gamma") ? j["gamma"].get<double>() : default_gamma(f.eta.real());
  return f;
}

nlohmann::json family_to_json(const GermFamily& f) {
  return {{"eta", complex_to_json(f.eta)}, {"q", complex_to_json(f.q)}, {"gamma", f.gamma},
          {"order", f.order()},           {"a", series_to_json(f.a)},  {"b", series_to_json(f.b)},
          {"c", series_to_json(f.c)},     {"d", series_to_json(f.d)}};
}

// ------------------------------------------------------------ validation

ValidationReport validate_family(const GermFamily& f) {
  ValidationReport r;
  const double tol = 1e-12;

  const Complex a00 = f.a.coeff(0, 0, 0);
  r.items.push_back({"a0(0)=1", std::abs(a00 - 1.0) <= tol, "a(0,0,0)=" + fmt_c(a00)});
  const Complex b00 = f.b.coeff(0, 0, 0);
  r.items.push_back({"b0(0,0)=0", std::abs(b00) <= tol, "b(0,0,0)=" + fmt_c(b00)});
  r.items.push_back({"Re eta>3", f.rho() > 3.0, "eta=" + fmt_c(f.eta)});

  const int m = f.m();
  ValidationItem dord{"d-order", true, "m=" + std::to_string(m)};
  for (const auto& [mi, v] : f.d.terms()) {
    const bool good = mi[1] == 0 && (mi[2] == 0 ? mi[0] >= m + 3 : mi[0] + mi[2] >= m + 2);
    if (!good) {
      dord.pass = false;
      dord.detail = "d" + fmt_idx(mi) + "=" + fmt_c(v) + " violates the order condition with m=" + std::to_string(m);
      break;
    }
  }
  r.items.push_back(dord);

  char buf[128];
  std::snprintf(buf, sizeof buf, "gamma=%.17g rho=%.17g", f.gamma, f.rho());
  r.items.push_back({"gamma*rho>2", f.gamma > 0.5 && f.gamma < 2.0 / 3.0 && f.gamma * f.rho() > 2.0, buf});

  if (f.c_coef() == Complex(0))
    r.warnings.push_back("c has no y-term: only the two tangential fixed points exist (4-point count not met)");
  if (std::abs(f.p()) > tol) r.warnings.push_back("p=" + fmt_c(f.p()) + " is nonzero; normalize_p applies");
  return r;
}

// ------------------------------------------------------------ evaluation

Poly2::Poly2(const Series& s, Complex eps) {
  std::map<std::array<int, 2>, Complex> acc;
  for (const auto& [m, v] : s.terms()) {
    Complex e = 1.0;
    for (int k = 0; k < m[2]; ++k) e *= eps;
    acc[{m[0], m[1]}] += v * e;
  }
  for (const auto& [ij, v] : acc) {
    if (v == Complex(0)) continue;
    terms_.push_back({ij[0], ij[1], v});
    max_i_ = std::max(max_i_, ij[0]);
    max_j_ = std::max(max_j_, ij[1]);
  }
}

Complex Poly2::operator()(Complex x, Complex y) const {
  if (terms_.empty()) return 0.0;
  constexpr int kCap = 64;
  Complex px[kCap], py[kCap];
  if (max_i_ >= kCap || max_j_ >= kCap) throw InvalidInput("polynomial degree too large");
  px[0] = 1.0;
  for (int i = 1; i <= max_i_; ++i) px[i] = px[i - 1] * x;
  py[0] = 1.0;
  for (int j = 1; j <= max_j_; ++j) py[j] = py[j - 1] * y;
  Complex r = 0.0;
  for (const auto& t : terms_) r += t.v * px[t.i] * py[t.j];
  return r;
}

Poly2 Poly2::dx() const {
  Poly2 r;
  for (const auto& t : terms_)
    if (t.i > 0) r.terms_.push_back({t.i - 1, t.j, t.v * double(t.i)});
  for (const auto& t : r.terms_) r.max_i_ = std::max(r.max_i_, t.i), r.max_j_ = std::max(r.max_j_, t.j);
  return r;
}

Poly2 Poly2::dy() const {
  Poly2 r;
  for (const auto& t : terms_)
    if (t.j > 0) r.terms_.push_back({t.i, t.j - 1, t.v * double(t.j)});
  for (const auto& t : r.terms_) r.max_i_ = std::max(r.max_i_, t.i), r.max_j_ = std::max(r.max_j_, t.j);
  return r;
}

BoundMap::BoundMap(const GermFamily& f, Complex eps)
    : eps_(eps), eps2_(eps * eps), a_(f.a, eps), b_(f.b, eps), c_(f.c, eps), d_(f.d, eps) {
  ax_ = a_.dx();
  bx_ = b_.dx();
  by_ = b_.dy();
  cx_ = c_.dx();
  cy_ = c_.dy();
  dx_ = d_.dx();
}

Point BoundMap::displacement(const Point& z) const {
  const Complex x = z(0), y = z(1);
  return Point((x * x + eps2_) * a_(x, 0.0) + y * b_(x, y), y * c_(x, y) + d_(x, 0.0));
}

Point BoundMap::operator()(const Point& z) const { return z + displacement(z); }

Matrix2 BoundMap::displacement_jacobian(const Point& z) const {
  const Complex x = z(0), y = z(1);
  Matrix2 m;
  m(0, 0) = 2.0 * x * a_(x, 0.0) + (x * x + eps2_) * ax_(x, 0.0) + y * bx_(x, y);
  m(0, 1) = b_(x, y) + y * by_(x, y);
  m(1, 0) = y * cx_(x, y) + dx_(x, 0.0);
  m(1, 1) = c_(x, y) + y * cy_(x, y);
  return m;
}

Matrix2 BoundMap::jacobian(const Point& z) const {
  return displacement_jacobian(z) + Matrix2::Identity();
}

Point evaluate(const GermFamily& f, Complex eps, const Point& z) { return BoundMap(f, eps)(z); }

// ------------------------------------------------------------ fixed points

EigenSplit classify_matrix(const Matrix2& M) {
  Eigen::ComplexEigenSolver<Matrix2> es(M);
  const auto& lam = es.eigenvalues();
  Matrix2 V = es.eigenvectors();
  for (int k = 0; k < 2; ++k) V.col(k).normalize();
  const double w0 = std::abs(V(0, 0)), w1 = std::abs(V(0, 1));
  const int t = w0 >= w1 ? 0 : 1;
  EigenSplit s;
  s.mu_T = lam(t);
  s.mu_N = lam(1 - t);
  s.rho_T = 1.0 + s.mu_T;
  s.rho_N = 1.0 + s.mu_N;
  s.eigvec_T = V.col(t);
  // equal weights, or a double eigenvalue where the eigenbasis is arbitrary
  s.ambiguous = std::abs(w0 - w1) < 1e-12 ||
                std::abs(lam(0) - lam(1)) <= 1e-12 * std::max(std::abs(lam(0)), std::abs(lam(1)));
  return s;
}

EigenSplit classify_eigenvalues(const FixedPointRecord& rec, Complex /*eps*/) {
  return classify_matrix(rec.jacobian - Matrix2::Identity());
}

namespace {

Point newton_fixed(const BoundMap& g, Point z) {
  const Point seed = z;
  for (int it = 0; it < 100; ++it) {
    const Point F = g.displacement(z);
    const Matrix2 M = g.displacement_jacobian(z);
    const Point step = M.fullPivLu().solve(F);
    if (!step.allFinite()) break;
    z -= step;
    if (step.norm() <= 1e-17 * std::max(1.0, z.norm())) break;
  }
  if (!z.allFinite() || g.displacement(z).norm() > 1e-12 * std::max(1.0, z.norm()))
    throw NewtonDivergence("fixed-point Newton did not converge", seed(0), seed(1), z(0), z(1));
  return z;
}

// nonzero-Y zeros of H(X,Y) from the eps-rescaled fixed-point system
std::vector<Point> transverse_seeds(const GermFamily& f) {
  std::vector<Point> out;
  const Complex a00 = f.a.coeff(0, 0, 0);
  const Complex bx = f.b.coeff(1, 0, 0), by = f.b.coeff(0, 1, 0), be = f.b.coeff(0, 0, 1);
  const Complex eta = f.eta, q = f.q, c = f.c_coef();
  if (c == Complex(0) || eta == Complex(0)) return out;
  // X = -(q + cY)/eta  into  a00 (X^2+1) + Y (be + bx X + by Y) = 0
  const Complex u = -q / eta, v = -c / eta;  // X = u + vY
  const Complex A = a00 * v * v + bx * v + by;
  const Complex B = 2.0 * a00 * u * v + be + bx * u;
  const Complex C = a00 * (u * u + 1.0);
  std::vector<Complex> ys;
  if (std::abs(A) < 1e-14) {
    if (std::abs(B) > 1e-14) ys.push_back(-C / B);
  } else {
    const Complex s = std::sqrt(B * B - 4.0 * A * C);
    // stable pair
    const Complex qq = -0.5 * (B + (std::real(std::conj(B) * s) >= 0 ? s : -s));
    ys.push_back(qq / A);
    if (qq != Complex(0)) ys.push_back(C / qq);
  }
  for (Complex Y : ys)
    if (std::abs(Y) > 1e-14) out.emplace_back(u + v * Y, Y);
  return out;
}

}  // namespace

std::vector<FixedPointRecord> fixed_points(const GermFamily& f, Complex eps, double radius) {
  if (eps == Complex(0)) throw InvalidInput("fixed_points requires eps != 0 (eps = 0 is the degenerate parabolic point)");
  const BoundMap g(f, eps);
  struct Seed {
    Point z;
    bool tangential;
  };
  std::vector<Seed> seeds{{Point(kI * eps, 0.0), true}, {Point(-kI * eps, 0.0), true}};
  for (const Point& s : transverse_seeds(f)) seeds.push_back({s * eps, false});

  std::vector<FixedPointRecord> out;
  for (const auto& s : seeds) {
    const Point z = newton_fixed(g, s.z);
    if (z.norm() > radius) continue;
    bool dup = false;
    for (const auto& r : out)
      if ((r.location - z).norm() <= 1e-9 * std::abs(eps)) dup = true;
    if (dup) continue;
    FixedPointRecord rec;
    rec.location = z;
    rec.jacobian = g.jacobian(z);
    const EigenSplit sp = classify_matrix(g.displacement_jacobian(z));
    rec.rho_T = sp.rho_T;
    rec.rho_N = sp.rho_N;
    rec.mu_T = sp.mu_T;
    rec.mu_N = sp.mu_N;
    rec.tangential_eigvec = sp.eigvec_T;
    rec.ambiguous = sp.ambiguous;
    rec.tangential = s.tangential;
    out.push_back(rec);
  }
  return out;
}

// ------------------------------------------------------------ q, beta

std::vector<Complex> neville_diagonal(std::span<const Complex> h, std::span<const Complex> v) {
  const size_t n = v.size();
  std::vector<Complex> diag{v[0]};
  // T[i][k]: interpolant through points i-k..i, evaluated at 0
  std::vector<std::vector<Complex>> T(n, std::vector<Complex>(n));
  for (size_t i = 0; i < n; ++i) {
    T[i][0] = v[i];
    for (size_t k = 1; k <= i; ++k)
      T[i][k] = (-h[i - k] * T[i][k - 1] + h[i] * T[i - 1][k - 1]) / (h[i] - h[i - k]);
    if (i > 0) diag.push_back(T[i][i]);
  }
  return diag;
}

QBetaEstimate estimate_q_beta(const GermFamily& f, std::span<const double> eps_grid) {
  if (eps_grid.size() < 3) throw ExtrapolationUnstable("eps grid needs at least three moduli");
  for (size_t i = 1; i < eps_grid.size(); ++i)
    if (!(std::abs(eps_grid[i]) < std::abs(eps_grid[i - 1])))
      throw ExtrapolationUnstable("eps grid moduli must strictly decrease");

  std::vector<Complex> hs, qs, bs;
  for (double e : eps_grid) {
    const Complex eps = e;
    const auto pts = fixed_points(f, eps, std::numeric_limits<double>::infinity());
    const FixedPointRecord *z1 = nullptr, *z2 = nullptr;
    for (const auto& r : pts) {
      if (!r.tangential) continue;
      // z1 is the one near +i eps
      if (std::abs(r.location(0) - kI * eps) < std::abs(r.location(0) + kI * eps))
        z1 = &r;
      else
        z2 = &r;
    }
    if (!z1 || !z2) throw ExtrapolationUnstable("tangential fixed-point pair not found");
    hs.push_back(eps);
    qs.push_back((z1->mu_N + z2->mu_N) / (eps * (2.0 + z1->mu_T + z2->mu_T)));
    bs.push_back((z1->mu_T - 2.0 * kI * eps) / (eps * eps));
  }

  auto extrapolate = [&](const std::vector<Complex>& v, const char* what) {
    const auto d = neville_diagonal(hs, v);
    const size_t n = d.size();
    const double scale = 1e-9 * (1.0 + std::abs(d[n - 1]));
    const double last = std::abs(d[n - 1] - d[n - 2]), prev = std::abs(d[n - 2] - d[n - 3]);
    if (last > scale && last > 10.0 * prev + scale)
      throw ExtrapolationUnstable(std::string(what) + " estimates diverge under refinement");
    return d[n - 1];
  };
  QBetaEstimate est;
  est.q = extrapolate(qs, "q");
  est.beta = extrapolate(bs, "beta");
  est.sigma0 = kI * kPi * est.beta / 2.0;
  return est;
}

Complex epsilon_sequence(Complex sigma, Complex sigma0, long n) {
  return kPi / (static_cast<double>(n) - sigma - sigma0);
}

// ------------------------------------------------------------ p-normalisation

Complex normalized_epsilon(Complex p, Complex eps) {
  // et (1 - p et) = eps, the root near eps
  return 2.0 * eps / (1.0 + std::sqrt(1.0 - 4.0 * p * eps));
}

GermFamily normalize_p(const GermFamily& f) {
  const Complex p = f.p();
  if (p == Complex(0)) return f;
  const int n = f.order();
  // x = xt s, eps = et s, s = 1 - p et
  Series s = Series::constant(1.0, n);
  s.add(0, 0, 1, -p);
  const Series X = Series::monomial(1, 0, 0, 1.0, n) * s;
  const Series Y = Series::monomial(0, 1, 0, 1.0, n);
  const Series E = Series::monomial(0, 0, 1, 1.0, n) * s;
  GermFamily g = f;
  g.a = s * compose(f.a, X, Y, E);
  g.b = compose(f.b, X, Y, E) * reciprocal(s);
  g.c = compose(f.c, X, Y, E);
  g.d = compose(f.d, X, Y, E);
  g.q = g.c.coeff(0, 0, 1);
  g.eta = g.c.coeff(1, 0, 0);
  return g;
}

}  // namespace implab
