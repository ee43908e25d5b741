#include "ipoc/barrier.hpp"

#include <cmath>

#include "ipoc/errors.hpp"

namespace ipoc {

BarrierEval psi_eval(double x) {
  if (!std::isfinite(x)) {
    throw InvalidArgument("psi_eval: non-finite argument");
  }
  BarrierEval out;
  if (x < 0.0) {
    out.value = -std::log(-x);
    out.first = -1.0 / x;
    out.second = 1.0 / (x * x);
  }
  return out;
}

double fb_value(double x, double y, double eps) {
  if (!(eps >= 0.0)) {
    throw InvalidArgument("fb_eval: eps must be non-negative");
  }
  return x - y - std::sqrt(x * x + y * y + 2.0 * eps);
}

FbEval fb_eval(double x, double y, double eps) {
  FbEval out;
  out.value = fb_value(x, y, eps);
  const double root = std::sqrt(x * x + y * y + 2.0 * eps);
  if (root == 0.0) {
    throw SingularityError("fb_eval: partials undefined at (0, 0, 0)");
  }
  out.dx = 1.0 - x / root;
  out.dy = -1.0 - y / root;
  return out;
}

}  // namespace ipoc
