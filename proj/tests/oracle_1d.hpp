#pragma once
// Independent 1-D reference for x -> x + x^2, used only by the tests.
// Works in X = -1/x where the map is F(X) = X + 1 + 1/(X - 1), and uses the
// asymptotic series phi(X) = X - log X + sum_k beta_k X^-k far out.

#include <array>
#include <cmath>
#include <complex>

namespace oracle {

using C = std::complex<double>;
constexpr int kTerms = 12;
constexpr double kFar = 200.0;

inline std::array<double, kTerms + 1> betas() {
  // coefficient of u^j in phi(F) - phi - 1, u = 1/X, must vanish
  std::array<double, kTerms + 1> b{};
  auto binom = [](int n, int k) {
    double r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
  };
  for (int j = 2; j <= kTerms + 1; ++j) {
    double s = 1.0 - 1.0 / j;
    for (int k = 1; k < j - 1; ++k)
      if (j - k <= k) s += b[k] * binom(k, j - k) * ((j - k) % 2 ? -1.0 : 1.0);
    b[j - 1] = s / (j - 1);
  }
  return b;
}

inline C tail(C X) {
  static const auto b = betas();
  C s = 0, p = 1.0 / X, u = 1.0 / X;
  for (int k = 1; k <= kTerms; ++k, p *= u) s += b[k] * p;
  return s;
}

inline C F(C X) { return X + 1.0 + 1.0 / (X - 1.0); }
inline C Finv(C X) {
  C W = X - 1.0;
  for (int i = 0; i < 60; ++i) W = X - 1.0 - 1.0 / (W - 1.0);
  return W;
}

// incoming coordinate of x (basin of the left petal)
inline C phi_in(C x) {
  C X = -1.0 / x;
  long n = 0;
  while (X.real() < kFar || std::abs(X.imag()) > X.real()) X = F(X), ++n;
  return X - std::log(X) + tail(X) - double(n);
}

// outgoing coordinate of x (right petal), via backward orbit
inline C phi_out(C x) {
  C X = -1.0 / x;
  long n = 0;
  while (X.real() > -kFar || std::abs(X.imag()) > -X.real()) X = Finv(X), ++n;
  return X - std::log(-X) + tail(X) + double(n);
}

inline C phi_out_far(C X) { return X - std::log(-X) + tail(X); }

// entire extension of the inverse outgoing coordinate
inline C psi_out(C W) {
  long n = 0;
  while ((W - double(n)).real() > -2 * kFar || std::abs((W - double(n)).imag()) > -(W - double(n)).real()) ++n;
  const C T = W - double(n);
  C X = T + std::log(-T);
  for (int i = 0; i < 50; ++i) {
    const C r = phi_out_far(X) - T;
    const C d = 1.0 - 1.0 / X;  // derivative up to O(X^-2) is enough for Newton to converge
    X -= r / d;
    if (std::abs(r) < 1e-15 * std::abs(T)) break;
  }
  C x = -1.0 / X;
  for (long k = 0; k < n; ++k) x = x + x * x;
  return x;
}

inline C lavaurs(C x, C sigma) { return psi_out(phi_in(x) + sigma); }

// g_eps^steps on the invariant line
inline C iterate(C x, C eps, long steps) {
  for (long k = 0; k < steps; ++k) x = x + x * x + eps * eps;
  return x;
}

}  // namespace oracle
