#include "implab/implosion.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "implab/parallel.hpp"

namespace implab {

namespace {
const double kNaN = std::numeric_limits<double>::quiet_NaN();

std::shared_ptr<const FatouEngine> borrow(const FatouEngine& e) {
  return std::shared_ptr<const FatouEngine>(std::shared_ptr<const FatouEngine>(), &e);
}
}  // namespace

// ------------------------------------------------------------ coordinates

Complex ApproxCoords::w(Complex x) const {
  const Complex ie = kI * eps;
  return principal_log((ie - x) / (ie + x)) / (2.0 * ie) + kPi / (2.0 * eps) +
         0.5 * (1.0 - a) * principal_log(x * x + eps * eps);
}

Complex ApproxCoords::dw(Complex x) const { return (1.0 + (1.0 - a) * x) / (x * x + eps * eps); }

Complex ApproxCoords::t(Complex x, Complex y) const {
  if (y == Complex(0)) return 0.0;
  return y / pow_eta(x * x + eps * eps, eta / 2.0);
}

Point approx_fatou(const ApproxCoords& ac, const Point& z, Orientation o) {
  Complex X = ac.w(z(0));
  if (o == Orientation::outgoing) X -= kPi / ac.eps;
  return Point(X, ac.t(z(0), z(1)));
}

EggbeaterRegion::EggbeaterRegion(long n_, double C_, double gamma_)
    : n(n_), C(C_), gamma(gamma_), k_n(static_cast<long>(std::floor(std::pow(double(n_), gamma_)))) {}

bool region_contains(const EggbeaterRegion& reg, const ApproxCoords& ac, const Point& z) {
  const Complex ew = ac.eps * ac.w(z(0));
  const double n = double(reg.n);
  const double lo = kPi * double(reg.k_n) / (10.0 * n);
  if (ew.real() < lo || ew.real() > kPi - lo) return false;
  if (std::abs(ew.imag()) > reg.C * kPi / n) return false;
  const double at = std::abs(ac.t(z(0), z(1)));
  return at > 1.0 / reg.C && at < reg.C;
}

ErrorTerms error_terms(const GermFamily& f, Complex eps, const Point& z) {
  const ApproxCoords ac(eps, f);
  const BoundMap g(f, eps);
  const Complex x = z(0), y = z(1);
  if (y == Complex(0)) throw ZeroTangentialCoordinate();
  // evaluate both sides first so the cut is enforced exactly as in the definition
  const Point z1 = g(z);
  (void)ac.w(x);
  (void)ac.w(z1(0));
  const Point d = g.displacement(z);
  const Complex dx = d(0), x1 = z1(0);
  const Complex ie = kI * eps, s = x * x + eps * eps;
  // differences through log1p: w is O(1/eps), A is o(1/n)
  const Complex dlog = log1p_c(-dx / (ie - x)) - log1p_c(dx / (ie + x));
  const Complex ds = log1p_c(dx * (x1 + x) / s);
  ErrorTerms r;
  r.A = dlog / (2.0 * ie) + 0.5 * (1.0 - ac.a) * ds - 1.0;
  if (z1(1) == Complex(0)) throw ZeroTangentialCoordinate();
  r.B = log1p_c(d(1) / y) - 0.5 * ac.eta * ds;
  return r;
}

Point inverse_approx_fatou(const ApproxCoords& ac, const EggbeaterRegion& /*reg*/, const Point& XY, int* iterations) {
  const Complex X = XY(0), eps = ac.eps;
  const Complex seed = -eps * std::cos(eps * X) / std::sin(eps * X);
  Complex x = seed;
  int it = 0;
  try {
    for (; it < 50; ++it) {
      const Complex r = ac.w(x) - X;
      if (std::abs(r) <= 1e-14 * (1.0 + std::abs(X))) break;
      const Complex dx = r / ac.dw(x);
      x -= dx;
      if (std::abs(dx) <= 1e-16 * std::abs(x)) {
        ++it;
        break;
      }
    }
  } catch (const BranchCutError&) {
    throw NewtonDivergence("approximate inverse hit the cut", seed, XY(1), x, 0.0);
  }
  if (it >= 50 || !std::isfinite(std::abs(x)))
    throw NewtonDivergence("approximate inverse did not converge", seed, XY(1), x, 0.0);
  if (iterations) *iterations = it;
  const Complex y = XY(1) == Complex(0) ? Complex(0) : XY(1) * pow_eta(x * x + eps * eps, ac.eta / 2.0);
  return Point(x, y);
}

R2Sequence::R2Sequence(unsigned long long seed) {
  std::mt19937_64 rng(seed);
  ox = double(rng() >> 11) * 0x1.0p-53;
  oy = double(rng() >> 11) * 0x1.0p-53;
}

std::pair<double, double> R2Sequence::next() {
  // plastic-number lattice
  constexpr double g = 1.32471795724474602596;
  constexpr double a1 = 1.0 / g, a2 = 1.0 / (g * g);
  ++i;
  return {std::fmod(ox + a1 * double(i), 1.0), std::fmod(oy + a2 * double(i), 1.0)};
}

std::vector<Point> region_samples(const ApproxCoords& ac, const EggbeaterRegion& reg, size_t count,
                                  unsigned long long seed) {
  R2Sequence s(seed), s2(seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<Point> out;
  const double n = double(reg.n);
  const double lo = kPi * double(reg.k_n) / (10.0 * n);
  while (out.size() < count) {
    auto [u1, u2] = s.next();
    auto [u3, u4] = s2.next();
    // strictly inside each inequality
    const double re = lo + (kPi - 2 * lo) * (0.02 + 0.96 * u1);
    const double im = (2 * u2 - 1) * 0.96 * reg.C * kPi / n;
    const double mod = std::exp(std::log(1.0 / reg.C) + 2 * std::log(reg.C) * (0.02 + 0.96 * u3));
    const Complex Y = std::polar(mod, 2 * kPi * u4);
    const Complex X = Complex(re, im) / ac.eps;
    out.push_back(inverse_approx_fatou(ac, reg, Point(X, Y)));
  }
  return out;
}

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::approach: return "approach";
    case Phase::eggbeater: return "eggbeater";
    case Phase::exit: return "exit";
  }
  return "?";
}

double OrbitTrace::residual(const std::string& channel) const {
  double v = kNaN;
  for (const auto& r : residuals)
    if (r.channel == channel) v = r.value;
  return v;
}

OrbitTrace orbit_trace(const FatouEngine& engine, const GermFamily& f, const HarnessParams& hp, long n,
                       const Point& z) {
  OrbitTrace tr;
  tr.n = n;
  tr.N = hp.N;
  tr.eps = epsilon_sequence(hp.sigma, hp.sigma0, n);
  const EggbeaterRegion reg(n, hp.C, f.gamma);
  tr.k_n = reg.k_n;
  const long k = reg.k_n, last = n - hp.N;
  if (!(0 < k && k < n - k && n - k < last))
    throw InvalidInput("phase boundaries need 0 < k_n < n - k_n <= n - N");

  const BoundMap g(f, tr.eps);
  tr.points.reserve(last + 1);
  tr.points.push_back(z);
  for (long j = 1; j <= last; ++j) {
    const Point w = g(tr.points.back());
    if (!engine.in_domain(w)) throw DomainEscape(j);
    tr.points.push_back(w);
  }

  const ApproxCoords ac(tr.eps, f);
  auto record = [&](long step, const char* ch, auto fn) {
    double v = kNaN;
    try {
      v = fn();
    } catch (const Error&) {
    }
    tr.residuals.push_back({step, ch, v});
  };

  Point phi0;
  bool have_phi0 = true;
  try {
    phi0 = engine.incoming(z);
  } catch (const Error&) {
    have_phi0 = false;
  }
  for (long j : {k / 2, k}) {
    record(j, "approach", [&] {
      if (!have_phi0) throw Error("no Phi^iota at z");
      Point v = engine.incoming(tr.points[j]);
      v(0) -= double(j);
      return (v - phi0).norm();
    });
  }
  record(k, "coordinate", [&] {
    return (approx_fatou(ac, tr.points[k], Orientation::incoming) - engine.incoming(tr.points[k])).norm();
  });
  const Complex twist = std::exp(kPi * hp.q);
  record(n - k, "transit", [&] {
    const Point in = approx_fatou(ac, tr.points[k], Orientation::incoming);
    const Point target(in(0) + hp.sigma - 2.0 * double(k), twist * in(1));
    return (approx_fatou(ac, tr.points[n - k], Orientation::outgoing) - target).norm();
  });
  record(last, "exit", [&] {
    Point o = approx_fatou(ac, tr.points[n - k], Orientation::outgoing);
    o(0) += double(k - hp.N);
    return (engine.outgoing(tr.points[last]) - o).norm();
  });
  try {
    tr.region_at_kn = region_contains(reg, ac, tr.points[k]);
    tr.region_at_n_minus_kn = region_contains(reg, ac, tr.points[n - k]);
  } catch (const BranchCutError&) {
  }
  return tr;
}

std::vector<Point> lavaurs_targets(const FatouEngine& engine, const HarnessParams& hp, std::span<const Point> K,
                                   std::vector<std::string>* failures, int threads) {
  const LavaursMap L{hp.sigma - double(hp.N), hp.q, borrow(engine)};
  std::vector<Point> out(K.size(), Point::Constant(Complex(kNaN, kNaN)));
  std::vector<std::string> why(K.size());
  parallel_for(K.size(), threads, [&](size_t i) {
    try {
      out[i] = lavaurs_eval(L, K[i]);
    } catch (const Error& e) {
      why[i] = describe(e);
    }
  });
  if (failures) *failures = why;
  return out;
}

ConvergenceResult convergence_error(const FatouEngine& engine, const GermFamily& f, const HarnessParams& hp, long n,
                                    std::span<const Point> K, int threads, const std::vector<Point>* limits) {
  std::vector<std::string> lfail(K.size());
  std::vector<Point> own;
  if (!limits) {
    own = lavaurs_targets(engine, hp, K, &lfail, threads);
    limits = &own;
  }
  ConvergenceResult res;
  res.n = n;
  res.per_point.assign(K.size(), kNaN);
  std::vector<std::string> why(K.size());
  const Complex eps = epsilon_sequence(hp.sigma, hp.sigma0, n);
  const BoundMap g(f, eps);
  const long steps = n - hp.N;
  parallel_for(K.size(), threads, [&](size_t i) {
    if (!(*limits)[i].allFinite()) {
      why[i] = lfail[i].empty() ? "Lavaurs map unavailable" : lfail[i];
      return;
    }
    Point w = K[i];
    for (long j = 1; j <= steps; ++j) {
      w = g(w);
      if (!engine.in_domain(w)) {
        why[i] = describe(DomainEscape(j));
        return;
      }
    }
    res.per_point[i] = (w - (*limits)[i]).norm();
  });
  for (size_t i = 0; i < K.size(); ++i) {
    if (!why[i].empty()) {
      res.flagged.push_back(i);
      res.reasons.push_back(why[i]);
    } else {
      res.sup = std::max(res.sup, res.per_point[i]);
    }
  }
  return res;
}

}  // namespace implab
