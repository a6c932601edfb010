#pragma once

// Planar affine systems dx/dt = A x - b: spectrum, equilibrium, invariant
// lines, the psi function and closed-form flows.

#include <optional>
#include <utility>

#include "welander/linalg.hpp"

namespace welander {

class AffineSystem {
 public:
  AffineSystem() = default;
  // dx/dt = A x - b.
  AffineSystem(Mat2 A, Vec2 b) : A_(A), b_(b) {}
  // dx/dt = A x + c.
  static AffineSystem from_plus_form(Mat2 A, Vec2 c) { return {A, -c}; }
  // Linear-canonical (companion) form A = [[tr, -1], [det, 0]].
  static AffineSystem companion(double trace, double det, Vec2 b) {
    return {Mat2{trace, -1.0, det, 0.0}, b};
  }

  const Mat2& matrix() const { return A_; }
  const Vec2& offset() const { return b_; }

  double trace() const { return A_.trace(); }
  double det() const { return A_.det(); }
  double discriminant() const { return trace() * trace() - 4.0 * det(); }
  bool is_companion() const { return A_.a12 == -1.0 && A_.a22 == 0.0; }

  Vec2 field(Vec2 p) const { return A_ * p - b_; }

  friend bool operator==(const AffineSystem&, const AffineSystem&) = default;

 private:
  Mat2 A_{};
  Vec2 b_{};
};

struct Spectrum {
  double lambda_i = 0.0;  // larger eigenvalue
  double lambda_j = 0.0;
  Vec2 xi_i;              // eigenvector of lambda_i
  Vec2 xi_j;
  bool repeated = false;
};

// Real spectrum, lambda_i >= lambda_j. Throws ComplexSpectrum when
// tr^2 - 4 det < 0. For the companion form xi_i = (1, lambda_j).
Spectrum spectrum(const AffineSystem& sys);

// Solution of A x = b. Throws SingularMatrix when det A = 0.
Vec2 equilibrium(const AffineSystem& sys);

struct InvariantLine {
  double slope = 0.0;
  double intercept = 0.0;
  double at(double x) const { return slope * x + intercept; }
};

// Invariant lines through the equilibrium of a companion system: the first
// is spanned by xi_i (slope lambda_j), the second by xi_j (slope lambda_i).
// Throws ZeroEigenvalue or ComplexSpectrum.
std::pair<InvariantLine, InvariantLine> invariant_lines(const AffineSystem& sys);

// psi(r1, r2, t) = r1 - r2 + r2 e^{r1 t} - r1 e^{r2 t}.
double psi(double r1, double r2, double t);

// e^z - 1 - z without cancellation near 0.
double expm1_minus_z(double z);

// Exact flow phi_t(x0), via spectral projectors (real spectrum only).
// Throws ComplexSpectrum.
Vec2 flow(const AffineSystem& sys, Vec2 x0, double t);

// Same flow from the closed-form companion-system solution; an independent
// evaluation route used to cross-check flow(). Requires is_companion().
Vec2 companion_flow(const AffineSystem& sys, Vec2 x0, double t);

// Velocity of the flow, A phi_t(x0) - b.
Vec2 flow_velocity(const AffineSystem& sys, Vec2 x0, double t);

// First coordinate of the flow as an exponential sum
//   x(t) = c0 + c1 e^{l1 t} + c2 e^{l2 t}          (distinct, l1 > l2)
//   x(t) = c0 + (c1 + c2 t) e^{l1 t}               (repeated)
//   x(t) = c0 + c1 t + c2 e^{l2 t}                 (l1 = 0, linear growth)
// which admits at most one critical point.
struct FirstCoordinate {
  enum class Kind { Distinct, Repeated, ZeroEigen };
  Kind kind = Kind::Distinct;
  double l1 = 0.0, l2 = 0.0;
  double c0 = 0.0, c1 = 0.0, c2 = 0.0;

  double value(double t) const;
  double velocity(double t) const;
  // The unique t with velocity(t) = 0, if any.
  std::optional<double> critical_time() const;
};

FirstCoordinate first_coordinate(const AffineSystem& sys, Vec2 x0);

// Root of x(t)=0 on [t_lo, t_hi]; throws NoSignChange when x has the same
// sign at both ends.
double crossing_time(const AffineSystem& sys, Vec2 x0, double t_lo, double t_hi);

// First t in (0, horizon] at which the orbit of x0 reaches x = 0 from the side
// `side_sign` (-1 or +1, the sign the orbit has just after t = 0). x0 may lie
// on x = 0. Returns nullopt when no crossing occurs within the horizon.
std::optional<double> first_sigma_hit(const AffineSystem& sys, Vec2 x0, int side_sign,
                                      double horizon);

}  // namespace welander
