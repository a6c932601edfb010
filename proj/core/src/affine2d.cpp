#include "welander/affine2d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "welander/error.hpp"
#include "welander/roots.hpp"

namespace welander {

namespace {

// Relative size below which the discriminant is treated as zero.
constexpr double kRepeatedTol = 1e-13;

double spectral_scale(const AffineSystem& sys) {
  const Mat2& A = sys.matrix();
  return std::max({std::abs(A.a11), std::abs(A.a12), std::abs(A.a21), std::abs(A.a22), 1e-300});
}

// (e^{g t} - 1) / g, continuous at g = 0.
double expm1_ratio(double g, double t) {
  if (g == 0.0) return t;
  return std::expm1(g * t) / g;
}

Vec2 eigenvector(const Mat2& A, double lambda) {
  Vec2 u{A.a12, lambda - A.a11};
  Vec2 v{lambda - A.a22, A.a21};
  Vec2 w = norm(u) >= norm(v) ? u : v;
  if (norm(w) == 0.0) return {1.0, 0.0};  // A = lambda I
  return w;
}

}  // namespace

Spectrum spectrum(const AffineSystem& sys) {
  const double tr = sys.trace();
  const double det = sys.det();
  const double disc = sys.discriminant();
  const double scale = spectral_scale(sys);
  const double tol = kRepeatedTol * scale * scale;
  if (disc < -tol) {
    throw Error(ErrorCode::ComplexSpectrum, "tr^2 - 4 det < 0: complex eigenvalues");
  }
  Spectrum s;
  if (disc <= tol) {
    s.lambda_i = s.lambda_j = 0.5 * tr;
    s.repeated = true;
  } else {
    const double root = std::sqrt(disc);
    // Larger-magnitude root first; the other via det to avoid cancellation.
    const double big = 0.5 * (tr + std::copysign(root, tr == 0.0 ? 1.0 : tr));
    const double small = big != 0.0 ? det / big : 0.5 * (tr - root);
    s.lambda_i = std::max(big, small);
    s.lambda_j = std::min(big, small);
  }
  if (sys.is_companion()) {
    s.xi_i = {1.0, s.lambda_j};
    s.xi_j = {1.0, s.lambda_i};
  } else {
    s.xi_i = eigenvector(sys.matrix(), s.lambda_i);
    s.xi_j = eigenvector(sys.matrix(), s.lambda_j);
  }
  return s;
}

Vec2 equilibrium(const AffineSystem& sys) {
  const Mat2& A = sys.matrix();
  const Vec2& b = sys.offset();
  const double det = A.det();
  const double scale = spectral_scale(sys);
  if (std::abs(det) <= 1e-14 * scale * scale) {
    throw Error(ErrorCode::SingularMatrix, "singular matrix: no isolated equilibrium");
  }
  return {(b.x * A.a22 - A.a12 * b.y) / det, (A.a11 * b.y - A.a21 * b.x) / det};
}

std::pair<InvariantLine, InvariantLine> invariant_lines(const AffineSystem& sys) {
  if (!sys.is_companion()) {
    throw Error(ErrorCode::InvalidParameters, "invariant_lines expects a companion-form system");
  }
  const Spectrum s = spectrum(sys);
  if (s.lambda_i == 0.0 || s.lambda_j == 0.0) {
    throw Error(ErrorCode::ZeroEigenvalue, "zero eigenvalue: invariant lines undefined");
  }
  const Vec2& b = sys.offset();
  InvariantLine li{s.lambda_j, b.y / s.lambda_j - b.x};
  InvariantLine lj{s.lambda_i, b.y / s.lambda_i - b.x};
  return {li, lj};
}

double expm1_minus_z(double z) {
  if (std::abs(z) < 0.5) {
    double term = 0.5 * z * z;
    double sum = term;
    for (int k = 3; k < 40; ++k) {
      term *= z / k;
      sum += term;
      if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
    }
    return sum;
  }
  return std::expm1(z) - z;
}

double psi(double r1, double r2, double t) {
  const double m = std::max(r1 * t, r2 * t);
  if (m > 700.0) {
    const double bracket =
        (r1 - r2) * std::exp(-m) + r2 * std::exp(r1 * t - m) - r1 * std::exp(r2 * t - m);
    if (bracket == 0.0) return 0.0;
    return std::copysign(std::numeric_limits<double>::infinity(), bracket);
  }
  return r2 * expm1_minus_z(r1 * t) - r1 * expm1_minus_z(r2 * t);
}

// e^{At} = e^{lj t} I + f[li, lj] (A - lj I) with the divided difference
// f[li, lj] = e^{lj t} (e^{(li-lj) t} - 1)/(li - lj); stable for any gap.
// The affine part uses the equilibrium when A is invertible.
Vec2 flow(const AffineSystem& sys, Vec2 x0, double t) {
  const Spectrum s = spectrum(sys);
  const Mat2& A = sys.matrix();
  const double lj = s.lambda_j;
  const double gap = s.repeated ? 0.0 : s.lambda_i - s.lambda_j;
  const Mat2 N = A - lj * Mat2::identity();
  const double ej = std::exp(lj * t);
  const double fdd = ej * expm1_ratio(gap, t);
  auto propagate = [&](Vec2 w) { return ej * w + fdd * (N * w); };

  const double det = A.det();
  const double scale = spectral_scale(sys);
  if (std::abs(det) > 1e-14 * scale * scale) {
    const Vec2 xe = equilibrium(sys);
    return xe + propagate(x0 - xe);
  }
  // Singular A: phi = e^{At} x0 - (int_0^t e^{As} ds) b with
  // int e^{As} = g(lj) I + g[li, lj] N, g(l) = (e^{l t} - 1)/l.
  const double li = s.lambda_i;
  const double gj = expm1_ratio(lj, t);
  double gdd;
  if (gap == 0.0) {
    gdd = lj == 0.0 ? 0.5 * t * t : (t * std::exp(lj * t) - gj) / lj;
  } else {
    gdd = (expm1_ratio(li, t) - gj) / gap;
  }
  const Vec2& b = sys.offset();
  return propagate(x0) - (gj * b + gdd * (N * b));
}

Vec2 companion_flow(const AffineSystem& sys, Vec2 x0, double t) {
  if (!sys.is_companion()) {
    throw Error(ErrorCode::InvalidParameters, "companion_flow expects a companion-form system");
  }
  // x'' - tr x' + det x = b2 and y = tr x - x' - b1.
  const double tr = sys.trace();
  const Vec2& b = sys.offset();
  const Vec2 xe = equilibrium(sys);
  const Spectrum s = spectrum(sys);
  const double u0 = x0.x - xe.x;
  const double v0 = tr * x0.x - x0.y - b.x;
  double x = 0.0;
  double v = 0.0;
  if (s.repeated) {
    const double l = s.lambda_i;
    const double e = std::exp(l * t);
    const double c = v0 - l * u0;
    x = xe.x + (u0 + c * t) * e;
    v = (l * (u0 + c * t) + c) * e;
  } else {
    const double li = s.lambda_i;
    const double lj = s.lambda_j;
    const double ci = (v0 - lj * u0) / (li - lj);
    const double cj = (li * u0 - v0) / (li - lj);
    const double ei = std::exp(li * t);
    const double ej = std::exp(lj * t);
    x = xe.x + ci * ei + cj * ej;
    v = li * ci * ei + lj * cj * ej;
  }
  return {x, tr * x - v - b.x};
}

Vec2 flow_velocity(const AffineSystem& sys, Vec2 x0, double t) {
  return sys.field(flow(sys, x0, t));
}

double FirstCoordinate::value(double t) const {
  return c0 + std::exp(l2 * t) * (c1 + c2 * expm1_ratio(l1 - l2, t));
}

double FirstCoordinate::velocity(double t) const {
  const double g = l1 - l2;
  const double ex = expm1_ratio(g, t);
  return std::exp(l2 * t) * (l2 * (c1 + c2 * ex) + c2 * (1.0 + g * ex));
}

std::optional<double> FirstCoordinate::critical_time() const {
  // velocity = 0  <=>  ex(t) = -(l2 c1 + c2) / (l1 c2), ex increasing in t.
  if (c2 == 0.0 || l1 == 0.0) return std::nullopt;
  const double target = -(l2 * c1 + c2) / (l1 * c2);
  const double g = l1 - l2;
  if (g == 0.0) return target;
  const double arg = g * target;
  if (!(arg > -1.0) || !std::isfinite(arg)) return std::nullopt;
  return std::log1p(arg) / g;
}

// x(t) - xe.x = e1^T e^{At} w = e^{l2 t} (w1 + q ex(t)),  q = ((A - l2 I) w)_1.
FirstCoordinate first_coordinate(const AffineSystem& sys, Vec2 x0) {
  const Spectrum s = spectrum(sys);
  const Vec2 xe = equilibrium(sys);
  const Vec2 w = x0 - xe;
  const Mat2 N = sys.matrix() - s.lambda_j * Mat2::identity();
  FirstCoordinate fc;
  fc.kind = s.repeated ? FirstCoordinate::Kind::Repeated : FirstCoordinate::Kind::Distinct;
  fc.l1 = s.repeated ? s.lambda_j : s.lambda_i;
  fc.l2 = s.lambda_j;
  fc.c0 = xe.x;
  fc.c1 = w.x;
  fc.c2 = (N * w).x;
  return fc;
}

namespace {

// Monotone pieces of x(t) on [lo, hi], split at the critical time.
struct Pieces {
  double knots[3];
  int count;
};

Pieces monotone_pieces(const FirstCoordinate& fc, double lo, double hi) {
  Pieces p{{lo, hi, hi}, 2};
  if (auto tc = fc.critical_time(); tc && *tc > lo && *tc < hi) {
    p.knots[1] = *tc;
    p.knots[2] = hi;
    p.count = 3;
  }
  return p;
}

}  // namespace

double crossing_time(const AffineSystem& sys, Vec2 x0, double t_lo, double t_hi) {
  const FirstCoordinate fc = first_coordinate(sys, x0);
  const double f_lo = fc.value(t_lo);
  const double f_hi = fc.value(t_hi);
  if (f_lo * f_hi > 0.0) {
    throw Error(ErrorCode::NoSignChange, "x(t) does not change sign on the interval");
  }
  const Pieces p = monotone_pieces(fc, t_lo, t_hi);
  auto f = [&](double t) { return fc.value(t); };
  for (int k = 0; k + 1 < p.count; ++k) {
    const double a = p.knots[k];
    const double b = p.knots[k + 1];
    const double fa = fc.value(a);
    const double fb = fc.value(b);
    if (fa == 0.0) return a;
    if (fa * fb <= 0.0) return bracketed_root(f, a, b, fa, fb);
  }
  return t_hi;
}

std::optional<double> first_sigma_hit(const AffineSystem& sys, Vec2 x0, int side_sign,
                                      double horizon) {
  if (!(horizon > 0.0)) return std::nullopt;
  const FirstCoordinate fc = first_coordinate(sys, x0);
  const double s = side_sign < 0 ? -1.0 : 1.0;
  const Pieces p = monotone_pieces(fc, 0.0, horizon);
  auto f = [&](double t) { return fc.value(t); };
  for (int k = 0; k + 1 < p.count; ++k) {
    const double a = p.knots[k];
    const double b = p.knots[k + 1];
    const double fa = k == 0 ? x0.x : fc.value(a);
    const double fb = fc.value(b);
    // A monotone piece starting on the section cannot come back to it.
    if (!(s * fa > 0.0)) continue;
    if (s * fb < 0.0) return bracketed_root(f, a, b, fa, fb);
  }
  return std::nullopt;
}

}  // namespace welander
