#include <cmath>

#include "mtloop/error.hpp"
#include "mtloop/text/metrics.hpp"

namespace mtloop::text {

PearsonResult pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw Error("pearson: length mismatch");
  const std::size_t n = xs.size();
  if (n < 2) throw Error("degenerate sample");

  auto all_equal = [](std::span<const double> v) {
    for (double x : v) {
      if (x != v.front()) return false;
    }
    return true;
  };
  if (all_equal(xs) || all_equal(ys)) throw Error("degenerate sample");

  double mean_x = 0.0;
  double mean_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_x += xs[i];
    mean_y += ys[i];
  }
  mean_x /= static_cast<double>(n);
  mean_y /= static_cast<double>(n);

  double cov = 0.0;
  double var_x = 0.0;
  double var_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mean_x;
    const double dy = ys[i] - mean_y;
    cov += dx * dy;
    var_x += dx * dx;
    var_y += dy * dy;
  }
  if (var_x <= 0.0 || var_y <= 0.0) throw Error("degenerate sample");
  double r = cov / std::sqrt(var_x * var_y);
  if (r > 1.0) r = 1.0;
  if (r < -1.0) r = -1.0;
  return {r, n};
}

}  // namespace mtloop::text
