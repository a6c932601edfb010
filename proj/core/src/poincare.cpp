#include "welander/poincare.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "welander/error.hpp"
#include "welander/roots.hpp"

namespace welander {

namespace {

constexpr double kTimeCap = 1e3;
constexpr double kAsymptoteGuard = 1e-13;

// e^{lj t} psi(-t) = (li - lj) e^{lj t} + lj e^{(lj - li) t} - li.
double reflected_psi(const HalfMapGeometry& g, double t) {
  const double li = g.lambda_i;
  const double lj = g.lambda_j;
  if (std::max(std::abs(li), std::abs(lj)) * t < 1.0) {
    return std::exp(lj * t) * psi(li, lj, -t);
  }
  return (li - lj) * std::exp(lj * t) + lj * std::exp((lj - li) * t) - li;
}

// 1 - e^{(lj - li) t}, positive for t > 0.
double gap_factor(const HalfMapGeometry& g, double t) {
  return -std::expm1((g.lambda_j - g.lambda_i) * t);
}

double y_start_at(const HalfMapGeometry& g, double t) {
  const double r = psi(g.lambda_i, g.lambda_j, t) * std::exp(-g.lambda_i * t) / gap_factor(g, t);
  return g.base + g.a / g.det() * r;
}

double y_end_at(const HalfMapGeometry& g, double t) {
  return g.base - g.a / g.det() * reflected_psi(g, t) / gap_factor(g, t);
}

void require_virtual(const HalfMapGeometry& g, Side side) {
  const bool ok = side == Side::Left ? g.a > 0.0 : g.a < 0.0;
  if (!ok) {
    throw Error(ErrorCode::WrongRegime, std::string(to_string(side)) +
                                            " equilibrium is not virtual (sign of a)");
  }
}

// Flight time t > 0 with value(t) = target, value monotone with value(0+) =
// base and moving towards target as t grows.
template <class F>
double invert_flight_time(F value, double base, double target, ErrorCode cap_error) {
  const double dir = target > base ? 1.0 : -1.0;
  auto f = [&](double t) { return dir * (value(t) - target); };
  double lo = 1e-12;
  double f_lo = f(lo);
  while (f_lo > 0.0 && lo > 1e-300) {
    lo /= 16.0;
    f_lo = f(lo);
  }
  double hi = 1.0;
  double f_hi = f(hi);
  while (f_hi < 0.0) {
    if (hi >= kTimeCap) {
      throw Error(cap_error, "flight time exceeds the cap of 1e3 (asymptote governs)");
    }
    lo = hi;
    f_lo = f_hi;
    hi = std::min(2.0 * hi, kTimeCap);
    f_hi = f(hi);
  }
  return bracketed_root(f, lo, hi, f_lo, f_hi);
}

}  // namespace

HalfMapGeometry half_map_geometry(const WelanderParams& p, Side side) {
  validate(p);
  if (p.beta == 1.0) throw Error(ErrorCode::DegenerateBeta, "beta = 1: repeated eigenvalues");
  if (p.alpha == 0.0) throw Error(ErrorCode::DegenerateAlpha, "alpha (1 - beta) = 0");
  const double k = side == Side::Left ? p.k0 : p.k1;
  const double l1 = -(k + p.beta);
  const double l2 = -(1.0 + k);
  HalfMapGeometry g;
  g.lambda_i = std::max(l1, l2);
  g.lambda_j = std::min(l1, l2);
  g.a = side == Side::Left ? a_left(p) : a_right(p);
  g.base = side == Side::Left ? 0.0 : b_offset(p);
  return g;
}

HalfMapPoint half_map_parametric(const HalfMapGeometry& g, double t) {
  return {t, y_start_at(g, t), y_end_at(g, t)};
}

HalfMapPoint half_map_parametric(const WelanderParams& p, Side side, double t) {
  const HalfMapGeometry g = half_map_geometry(p, side);
  require_virtual(g, side);
  if (!(t > 0.0)) throw Error(ErrorCode::OutOfDomain, "flight time must be positive");
  return half_map_parametric(g, t);
}

double half_map_derivative(const HalfMapGeometry& g, double t) {
  return -psi(g.lambda_i, g.lambda_j, t) * std::exp(g.lambda_j * t) / reflected_psi(g, t);
}

MapValue left_map(const WelanderParams& p, double y0) {
  const HalfMapGeometry g = half_map_geometry(p, Side::Left);
  require_virtual(g, Side::Left);
  if (!(y0 > 0.0)) throw Error(ErrorCode::OutOfDomain, "left map needs y0 > 0");
  const double t =
      invert_flight_time([&](double s) { return y_start_at(g, s); }, 0.0, y0, ErrorCode::OutOfDomain);
  return {y_end_at(g, t), t};
}

MapValue right_map(const WelanderParams& p, double y0) {
  const HalfMapGeometry g = half_map_geometry(p, Side::Right);
  require_virtual(g, Side::Right);
  if (!(y0 < g.base)) throw Error(ErrorCode::OutOfDomain, "right map needs y0 < B");
  const double t = invert_flight_time([&](double s) { return y_start_at(g, s); }, g.base, y0,
                                      ErrorCode::OutOfDomain);
  return {y_end_at(g, t), t};
}

MapValue right_map_inverse(const WelanderParams& p, double y0) {
  const HalfMapGeometry g = half_map_geometry(p, Side::Right);
  require_virtual(g, Side::Right);
  const double top = g.asymptote();
  if (!(y0 > g.base) || !(y0 < top)) {
    throw Error(ErrorCode::OutOfDomain, "right inverse needs B < y0 < B + a^R/lambda_j^R");
  }
  if (top - y0 <= kAsymptoteGuard * (1.0 + std::abs(top))) {
    throw Error(ErrorCode::AsymptoteReached, "y0 is at the right-map asymptote");
  }
  const double t = invert_flight_time([&](double s) { return y_end_at(g, s); }, g.base, y0,
                                      ErrorCode::AsymptoteReached);
  return {y_start_at(g, t), t};
}

DisplacementDomain displacement_domain(const WelanderParams& p) {
  const HalfMapGeometry gl = half_map_geometry(p, Side::Left);
  const HalfMapGeometry gr = half_map_geometry(p, Side::Right);
  require_virtual(gl, Side::Left);
  require_virtual(gr, Side::Right);
  return {std::max(0.0, gr.base), gr.asymptote()};
}

double displacement(const WelanderParams& p, double y0) {
  const double b = b_offset(p);
  const double inverse = y0 == b ? b : right_map_inverse(p, y0).y;
  return left_map(p, y0).y - inverse;
}

std::optional<CrossingCycle> find_cycle(const WelanderParams& p) {
  validate(p);
  if (!has_cycle(regime(p))) return std::nullopt;
  const DisplacementDomain dom = displacement_domain(p);
  const double lo = dom.lower;  // = B > 0 in this regime
  const double d_lo = displacement(p, lo);
  if (!(d_lo < 0.0)) throw Error(ErrorCode::BracketFailure, "displacement at B is not negative");

  double hi = lo;
  double d_hi = d_lo;
  for (int k = 1; k <= 45 && !(d_hi > 0.0); ++k) {
    hi = dom.upper - (dom.upper - lo) * std::ldexp(1.0, -k);
    try {
      d_hi = displacement(p, hi);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::AsymptoteReached) throw;
      break;
    }
  }
  if (!(d_hi > 0.0)) throw Error(ErrorCode::BracketFailure, "displacement never turns positive");

  CrossingCycle c;
  c.y_upper = bracketed_root([&](double y) { return displacement(p, y); }, lo, hi, d_lo, d_hi);
  const MapValue left = left_map(p, c.y_upper);
  const MapValue right = right_map_inverse(p, c.y_upper);
  c.y_lower = left.y;
  c.t_left = left.t;
  c.t_right = right.t;
  c.period = c.t_left + c.t_right;
  c.multiplier = half_map_derivative(half_map_geometry(p, Side::Right), c.t_right) *
                 half_map_derivative(half_map_geometry(p, Side::Left), c.t_left);
  return c;
}

double cycle_closure_residual(const WelanderParams& p, const CrossingCycle& c) {
  const PiecewiseAffineSystem pws = canonical_system(p);
  const Vec2 start{0.0, c.y_upper};
  const Vec2 mid = flow(pws.left, start, c.t_left);
  const Vec2 end = flow(pws.right, mid, c.t_right);
  return norm(end - start);
}

TaylorData taylor_at_tangency(const HalfMapGeometry& g) {
  const double s = g.neg_trace();
  const double a = g.a;
  TaylorData d;
  d.d1 = -1.0;
  d.d2 = 4.0 * s / (3.0 * a);
  d.d3 = -8.0 * s * s / (3.0 * a * a);
  d.d4 = 16.0 * s * (22.0 * s * s - 9.0 * g.det()) / (45.0 * a * a * a);
  return d;
}

TaylorData taylor_at_tangency(const WelanderParams& p, Side side) {
  const HalfMapGeometry g = half_map_geometry(p, side);
  require_virtual(g, side);
  return taylor_at_tangency(g);
}

FullMapTaylor full_map_taylor(const WelanderParams& p) {
  validate(p);
  if (p.epsilon != 0.0) throw Error(ErrorCode::NonzeroOffset, "full map germ needs eps = 0");
  const HalfMapGeometry gl = half_map_geometry(p, Side::Left);
  const HalfMapGeometry gr = half_map_geometry(p, Side::Right);
  if (gl.a == 0.0 || gr.a == 0.0) {
    throw Error(ErrorCode::WrongRegime, "a^L or a^R vanishes: fold is not of order two");
  }
  const TaylorData L = taylor_at_tangency(gl);
  const TaylorData R = taylor_at_tangency(gr);
  FullMapTaylor out;
  TaylorData& d = out.data;
  // Faa di Bruno for R o L at a common fixed point.
  d.d1 = R.d1 * L.d1;
  d.d2 = R.d2 * L.d1 * L.d1 + R.d1 * L.d2;
  d.d3 = R.d3 * L.d1 * L.d1 * L.d1 + 3.0 * R.d2 * L.d1 * L.d2 + R.d1 * L.d3;
  d.d4 = R.d4 * std::pow(L.d1, 4) + 6.0 * R.d3 * L.d1 * L.d1 * L.d2 + 3.0 * R.d2 * L.d2 * L.d2 +
         4.0 * R.d2 * L.d1 * L.d3 + R.d1 * L.d4;
  const double rl = gl.neg_trace() / gl.a;
  const double rr = gr.neg_trace() / gr.a;
  out.resonant = std::abs(rr - rl) <= 1e-12 * std::max(std::abs(rl), std::abs(rr));
  if (out.resonant) {
    d.d2 = 0.0;
    d.d3 = 0.0;
  }
  return out;
}

namespace {

// Signed area (1/2) integral of (x dy - y dx) along the exact arc from x0
// over [0, t], plus the closing chord back to x0.
double arc_area(const AffineSystem& sys, Vec2 x0, double t) {
  constexpr int n = 4096;
  const double h = t / n;
  double sum = 0.0;
  Vec2 last = x0;
  for (int k = 0; k <= n; ++k) {
    const Vec2 q = flow(sys, x0, k * h);
    const Vec2 v = sys.field(q);
    const double w = (k == 0 || k == n) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
    sum += w * 0.5 * cross(q, v);
    if (k == n) last = q;
  }
  return sum * h / 3.0 + 0.5 * cross(last, x0);
}

}  // namespace

AreaIdentity area_identity(const WelanderParams& p, const CrossingCycle& c) {
  const PiecewiseAffineSystem pws = canonical_system(p);
  AreaIdentity out;
  out.sigma_left = arc_area(pws.left, {0.0, c.y_upper}, c.t_left);
  out.sigma_right = arc_area(pws.right, {0.0, c.y_lower}, c.t_right);
  const double trl = pws.left.trace();
  const double trr = pws.right.trace();
  const double h = c.y_upper - c.y_lower;
  out.residual = trl * out.sigma_left + trr * out.sigma_right + b_offset(p) * h;
  out.scale = std::abs(trl) * std::abs(out.sigma_left) + std::abs(trr) * std::abs(out.sigma_right);
  return out;
}

double area_identity_residual(const WelanderParams& p, const CrossingCycle& c) {
  return area_identity(p, c).residual;
}

}  // namespace welander
