#pragma once

#include <limits>

namespace ipoc {

/// Log-barrier value with its first two derivatives.
///
/// Outside the open negative half-line the barrier is +infinity; `first` and
/// `second` are then left as NaN and `finite()` is false.
struct BarrierEval {
  double value = std::numeric_limits<double>::infinity();
  double first = std::numeric_limits<double>::quiet_NaN();
  double second = std::numeric_limits<double>::quiet_NaN();

  bool finite() const noexcept { return value < std::numeric_limits<double>::infinity(); }
};

/// psi(x) = -log(-x) for x < 0, +infinity otherwise.
BarrierEval psi_eval(double x);

/// First derivative of psi on x < 0, without the validity checks of psi_eval.
inline double psi_prime(double x) noexcept { return -1.0 / x; }

struct FbEval {
  double value = 0.0;
  double dx = 0.0;
  double dy = 0.0;
};

/// Smoothed Fischer-Burmeister function x - y - sqrt(x^2 + y^2 + 2 eps).
///
/// Its root set is exactly {x >= 0, y <= 0, x*y = -eps}. The partials are
/// undefined at (0, 0, 0), where a SingularityError is thrown.
FbEval fb_eval(double x, double y, double eps);

/// Value only; defined everywhere including the origin.
double fb_value(double x, double y, double eps);

}  // namespace ipoc
