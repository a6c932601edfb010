#include <cstdio>

#include "welander/poincare.hpp"

int main() {
  const auto c = welander::find_cycle({0.8, 0.5, -0.01, 0.0, 1.0});
  if (!c) return 1;
  std::printf("%.12f\n", c->y_upper);
  return 0;
}
