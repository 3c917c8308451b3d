#pragma once

#include <span>
#include <string>
#include <vector>

#include "implab/fatou.hpp"
#include "implab/lavaurs.hpp"

namespace implab {

// closed-form coordinates of g_eps inside the eggbeater
struct ApproxCoords {
  Complex eps;
  Complex eta;
  Complex a;  // x-coefficient of a_0

  ApproxCoords(Complex eps_, const GermFamily& f) : eps(eps_), eta(f.eta), a(f.a_coef()) {}
  ApproxCoords(Complex eps_, Complex eta_, Complex a_) : eps(eps_), eta(eta_), a(a_) {}

  Complex w(Complex x) const;             // incoming X-coordinate
  Complex dw(Complex x) const;            // derivative of w
  Complex t(Complex x, Complex y) const;  // y / (x^2+eps^2)^{eta/2}
};

Point approx_fatou(const ApproxCoords& ac, const Point& z, Orientation o);

struct EggbeaterRegion {
  long n;
  double C;
  double gamma;
  long k_n;
  EggbeaterRegion(long n_, double C_, double gamma_);
};

bool region_contains(const EggbeaterRegion& reg, const ApproxCoords& ac, const Point& z);

struct ErrorTerms {
  Complex A, B;
};
// A = w(x1) - w(x) - 1,  B = log(t(x1,y1)/t(x,y))
ErrorTerms error_terms(const GermFamily& f, Complex eps, const Point& z);

Point inverse_approx_fatou(const ApproxCoords& ac, const EggbeaterRegion& reg, const Point& XY,
                           int* iterations = nullptr);

// deterministic points of R_n(C): normalised coordinates (u, v, Y) fixed across n
std::vector<Point> region_samples(const ApproxCoords& ac, const EggbeaterRegion& reg, size_t count,
                                  unsigned long long seed);

enum class Phase { approach, eggbeater, exit };
const char* phase_name(Phase p);

struct ResidualSample {
  long step;
  std::string channel;  // approach | coordinate | transit | exit
  double value;
};

struct OrbitTrace {
  long n = 0;
  Complex eps{0.0, 0.0};
  long k_n = 0;
  long N = 0;
  std::vector<Point> points;  // g_eps^j(z), j = 0..n-N
  std::vector<ResidualSample> residuals;
  bool region_at_kn = false;
  bool region_at_n_minus_kn = false;
  Phase phase_of(long step) const {
    return step < k_n ? Phase::approach : (step < n - k_n ? Phase::eggbeater : Phase::exit);
  }
  double residual(const std::string& channel) const;  // last value of a channel, NaN if absent
};

struct HarnessParams {
  Complex sigma{0.0, 0.0};
  Complex q{0.0, 0.0};
  Complex sigma0{0.0, 0.0};
  long N = 0;
  double C = 2.0;
};

OrbitTrace orbit_trace(const FatouEngine& engine, const GermFamily& f, const HarnessParams& hp, long n,
                       const Point& z);

struct ConvergenceResult {
  long n = 0;
  double sup = 0;
  std::vector<double> per_point;  // NaN where the point was flagged
  std::vector<size_t> flagged;    // DomainEscape or other per-point failure
  std::vector<std::string> reasons;
};

// sup_K |g_{eps_n}^{n-N} - L_{sigma-N,q}|
ConvergenceResult convergence_error(const FatouEngine& engine, const GermFamily& f, const HarnessParams& hp,
                                    long n, std::span<const Point> K, int threads = 1,
                                    const std::vector<Point>* limits = nullptr);

// L_{sigma-N,q} on K, computed once for a ladder
std::vector<Point> lavaurs_targets(const FatouEngine& engine, const HarnessParams& hp, std::span<const Point> K,
                                   std::vector<std::string>* failures = nullptr, int threads = 1);

// R2 low-discrepancy sequence, seeded offset
struct R2Sequence {
  double ox, oy;
  size_t i = 0;
  explicit R2Sequence(unsigned long long seed);
  std::pair<double, double> next();
};

}  // namespace implab
