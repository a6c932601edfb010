#include "welander/roots.hpp"

#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>
#include <cstdint>
#include <string>
#include <utility>

#include "welander/error.hpp"

namespace welander {

double bracketed_root(const std::function<double(double)>& f, double lo, double hi,
                      double f_lo, double f_hi, int max_iterations) {
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  if (!(f_lo * f_hi < 0.0)) {
    throw Error(ErrorCode::BracketFailure,
                "no sign change on [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  if (lo > hi) {
    std::swap(lo, hi);
    std::swap(f_lo, f_hi);
  }
  std::uintmax_t iterations = static_cast<std::uintmax_t>(max_iterations);
  // 50 bits leaves a few ulps of slack so the tolerance test can terminate.
  boost::math::tools::eps_tolerance<double> tol(50);
  auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, f_lo, f_hi, tol, iterations);
  if (iterations >= static_cast<std::uintmax_t>(max_iterations)) {
    throw Error(ErrorCode::BracketFailure, "root refinement did not converge");
  }
  return 0.5 * (a + b);
}

}  // namespace welander
