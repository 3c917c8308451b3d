#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace implab {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// bad input that is not a hypothesis failure
struct InvalidInput : Error {
  using Error::Error;
};

struct BranchCutError : Error {
  std::complex<double> z;
  explicit BranchCutError(std::complex<double> at)
      : Error("principal log evaluated on the cut (-inf, 0]"), z(at) {}
};

struct OrderMismatch : Error {
  OrderMismatch(int a, int b)
      : Error("jet truncation orders differ: " + std::to_string(a) + " vs " + std::to_string(b)) {}
};

struct NonInvertibleJet : Error {
  using Error::Error;
};

struct NewtonDivergence : Error {
  std::complex<double> seed_x, seed_y, last_x, last_y;
  NewtonDivergence(const std::string& what, std::complex<double> sx, std::complex<double> sy,
                   std::complex<double> lx, std::complex<double> ly)
      : Error(what), seed_x(sx), seed_y(sy), last_x(lx), last_y(ly) {}
};

struct ExtrapolationUnstable : Error {
  using Error::Error;
};

struct ResonanceObstruction : Error {
  int degree;
  explicit ResonanceObstruction(int k)
      : Error("formal invariant curve obstructed at degree " + std::to_string(k)), degree(k) {}
};

struct DegenerateSplitting : Error {
  using Error::Error;
};

struct NotInBasin : Error {
  long budget;
  explicit NotInBasin(long b)
      : Error("orbit did not enter the incoming petal within " + std::to_string(b) + " steps"),
        budget(b) {}
  NotInBasin(long b, const std::string& why) : Error(why), budget(b) {}
};

struct TailNotConverged : Error {
  using Error::Error;
};

struct InverseBranchLost : Error {
  using Error::Error;
};

struct DomainEscape : Error {
  long index;
  explicit DomainEscape(long i)
      : Error("orbit left the germ domain at step " + std::to_string(i)), index(i) {}
};

struct ZeroTangentialCoordinate : Error {
  ZeroTangentialCoordinate() : Error("t-coordinate vanishes, log ratio undefined") {}
};

// short class name for reports: "NotInBasin", "DomainEscape", ...
inline const char* error_kind(const std::exception& e) {
  if (dynamic_cast<const InvalidInput*>(&e)) return "InvalidInput";
  if (dynamic_cast<const BranchCutError*>(&e)) return "BranchCutError";
  if (dynamic_cast<const OrderMismatch*>(&e)) return "OrderMismatch";
  if (dynamic_cast<const NonInvertibleJet*>(&e)) return "NonInvertibleJet";
  if (dynamic_cast<const NewtonDivergence*>(&e)) return "NewtonDivergence";
  if (dynamic_cast<const ExtrapolationUnstable*>(&e)) return "ExtrapolationUnstable";
  if (dynamic_cast<const ResonanceObstruction*>(&e)) return "ResonanceObstruction";
  if (dynamic_cast<const DegenerateSplitting*>(&e)) return "DegenerateSplitting";
  if (dynamic_cast<const NotInBasin*>(&e)) return "NotInBasin";
  if (dynamic_cast<const TailNotConverged*>(&e)) return "TailNotConverged";
  if (dynamic_cast<const InverseBranchLost*>(&e)) return "InverseBranchLost";
  if (dynamic_cast<const DomainEscape*>(&e)) return "DomainEscape";
  if (dynamic_cast<const ZeroTangentialCoordinate*>(&e)) return "ZeroTangentialCoordinate";
  if (dynamic_cast<const Error*>(&e)) return "Error";
  return "exception";
}

inline std::string describe(const std::exception& e) { return std::string(error_kind(e)) + ": " + e.what(); }

}  // namespace implab
