#pragma once

#include <cstddef>
#include <vector>

namespace bbmwave::airy {

/// Arguments outside [-kWindow, kWindow] are rejected with std::domain_error.
inline constexpr double kWindow = 40.0;

/// Largest zero index served by airy_zero().
inline constexpr int kMaxZeroIndex = 50;

/// Airy function Ai(x) for real x in the accuracy window.
///
/// On [-40, 12] the value comes from a short Taylor expansion around the
/// nearest node of a table built once by integrating Ai'' = x Ai in extended
/// precision (leftwards from the exact values at 0, and leftwards from an
/// asymptotic seed at 12 on the decaying side). Beyond 12 the decaying
/// asymptotic series is used. Absolute error is at the level of double
/// rounding across the window.
double ai(double x);

/// Derivative Ai'(x), same method and window as ai().
double ai_deriv(double x);

/// Ai(x) and Ai'(x) from a single evaluation.
struct AiryPair {
  double value;
  double deriv;
};
AiryPair ai_pair(double x);

/// k-th zero of Ai counted from the origin (gamma_1 > gamma_2 > ...).
/// Throws std::out_of_range for k outside [1, kMaxZeroIndex].
double airy_zero(int k);

/// Shorthand for airy_zero(1).
double gamma1();

/// Ai'(gamma_1), which normalises every predicted count.
double ai_deriv_at_gamma1();

/// Ordered table of the leading negative zeros of Ai.
class AiryZeroTable {
 public:
  explicit AiryZeroTable(int count);

  int count() const { return static_cast<int>(zeros_.size()); }
  double operator[](std::size_t i) const { return zeros_[i]; }
  const std::vector<double>& zeros() const { return zeros_; }

 private:
  std::vector<double> zeros_;
};

}  // namespace bbmwave::airy
