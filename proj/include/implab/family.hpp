#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "implab/cplx.hpp"
#include "implab/jet.hpp"
#include "json.hpp"

namespace implab {

using Series = Jet3<Complex>;

// g_eps(x,y) = (x + (x^2+eps^2) a(x,eps) + y b(x,y,eps),  y + y c(x,y,eps) + d(x,eps))
struct GermFamily {
  Series a, b, c, d;
  Complex eta{4.0, 0.0};
  Complex q{0.0, 0.0};
  double gamma = 0.6;

  int order() const { return a.order(); }
  double rho() const { return eta.real(); }
  int m() const { return static_cast<int>(std::floor(rho())); }
  Complex a_coef() const { return a.coeff(1, 0, 0); }  // x-coefficient of a_0
  Complex c_coef() const { return c.coeff(0, 1, 0); }  // y-coefficient of c_0
  Complex p() const { return a.coeff(0, 0, 1); }       // eps-coefficient of a_eps

  // (x + (x^2+eps^2), y(1 + eta x + q eps))
  static GermFamily model(Complex q = 0.0, Complex eta = 4.0);
};

// 0.6 unless that breaks gamma*rho > 2
double default_gamma(double rho);

GermFamily family_from_json(const nlohmann::json& j);
nlohmann::json family_to_json(const GermFamily& f);
Complex complex_from_json(const nlohmann::json& j);
nlohmann::json complex_to_json(Complex z);
Series series_from_json(const nlohmann::json& arr, int order);
nlohmann::json series_to_json(const Series& s);

struct ValidationItem {
  std::string condition;
  bool pass = false;
  std::string detail;  // offending coefficient when failing
};

struct ValidationReport {
  std::vector<ValidationItem> items;
  std::vector<std::string> warnings;
  bool ok() const {
    for (const auto& it : items)
      if (!it.pass) return false;
    return true;
  }
};

ValidationReport validate_family(const GermFamily& f);

// dense-ish polynomial in (x, y) for the hot loops
class Poly2 {
 public:
  Poly2() = default;
  // collapse eps to a number
  Poly2(const Series& s, Complex eps);
  Complex operator()(Complex x, Complex y) const;
  bool is_zero() const { return terms_.empty(); }
  Poly2 dx() const;
  Poly2 dy() const;

 private:
  struct Term {
    int i, j;
    Complex v;
  };
  std::vector<Term> terms_;
  int max_i_ = 0, max_j_ = 0;
};

// g_eps with eps fixed
class BoundMap {
 public:
  BoundMap(const GermFamily& f, Complex eps);

  Complex eps() const { return eps_; }
  Point operator()(const Point& z) const;
  Point displacement(const Point& z) const;  // g(z) - z without cancellation
  Matrix2 jacobian(const Point& z) const;
  Matrix2 displacement_jacobian(const Point& z) const;  // J - I

  Complex a(Complex x) const { return a_(x, 0.0); }
  Complex b(Complex x, Complex y) const { return b_(x, y); }
  Complex c(Complex x, Complex y) const { return c_(x, y); }
  Complex d(Complex x) const { return d_(x, 0.0); }

 private:
  Complex eps_, eps2_;
  Poly2 a_, b_, c_, d_;
  Poly2 ax_, bx_, by_, cx_, cy_, dx_;
};

Point evaluate(const GermFamily& f, Complex eps, const Point& z);

struct FixedPointRecord {
  Point location;
  Matrix2 jacobian;
  Complex rho_T, rho_N;
  Complex mu_T, mu_N;  // rho - 1, kept separately for precision
  Eigen::Vector2cd tangential_eigvec;
  bool tangential = false;  // the pair tending to (+-i eps, 0)
  bool ambiguous = false;   // eigenvector tie, names assigned arbitrarily
};

struct EigenSplit {
  Complex rho_T, rho_N, mu_T, mu_N;
  Eigen::Vector2cd eigvec_T;
  bool ambiguous = false;
};

std::vector<FixedPointRecord> fixed_points(const GermFamily& f, Complex eps, double radius);
EigenSplit classify_eigenvalues(const FixedPointRecord& rec, Complex eps);
EigenSplit classify_matrix(const Matrix2& displacement_jacobian);

struct QBetaEstimate {
  Complex q, beta, sigma0;
};
QBetaEstimate estimate_q_beta(const GermFamily& f, std::span<const double> eps_grid);

// polynomial (Neville) extrapolation of samples v(h_i) to h = 0, last diagonal
std::vector<Complex> neville_diagonal(std::span<const Complex> h, std::span<const Complex> v);

Complex epsilon_sequence(Complex sigma, Complex sigma0, long n);

GermFamily normalize_p(const GermFamily& f);
// eps-tilde for a physical eps under the p-normalisation
Complex normalized_epsilon(Complex p, Complex eps);

}  // namespace implab
