#pragma once

#include <functional>

namespace welander {

// Root of f between lo and hi (either order) given f(lo) and f(hi) of opposite sign (a zero
// endpoint is returned as is). Throws Error{BracketFailure} when the values
// do not bracket or the iteration budget is exhausted.
double bracketed_root(const std::function<double(double)>& f, double lo, double hi,
                      double f_lo, double f_hi, int max_iterations = 200);

}  // namespace welander
