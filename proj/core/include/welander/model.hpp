#pragma once

// The non-smooth Welander convection model: parameters, coordinate frames,
// regime thresholds and the convection laws.
//
// Raw frame: X = rho - eps, Y = T, switching line X = 0, left zone X < 0
// uses rate k0 and the right zone X > 0 uses k1.

#include <string_view>
#include <variant>
#include <vector>

#include "welander/filippov.hpp"

namespace welander {

struct WelanderParams {
  double alpha = 0.0;
  double beta = 0.0;
  double epsilon = 0.0;
  double k0 = 0.0;
  double k1 = 0.0;
};

// Throws InvalidParameters naming the violated constraint
// (finite values, beta > 0, k1 > k0 >= 0).
void validate(const WelanderParams& p);

struct Thresholds {
  double alpha_L = 0.0;
  double alpha_R = 0.0;
  double eps_star = 0.0;
};

Thresholds thresholds(const WelanderParams& p);

enum class Regime {
  DegenerateNoCycle,
  RealEquilibriumNoCycle,
  VirtualNoCycle,
  UniqueStableCycle,
};

Regime regime(const WelanderParams& p);
bool has_cycle(Regime r);

// Canonical a constants and the switching offset b = (k0 - k1) eps.
double a_left(const WelanderParams& p);
double a_right(const WelanderParams& p);
double b_offset(const WelanderParams& p);

PiecewiseAffineSystem raw_system(const WelanderParams& p);

// Lienard-canonical system built from closed forms. Throws DegenerateAlpha
// when alpha (1 - beta) = 0.
PiecewiseAffineSystem canonical_system(const WelanderParams& p);

// Raw-to-canonical homeomorphism. Throws DegenerateAlpha.
CanonicalTransform canonical_transform(const WelanderParams& p);

struct Nonsmooth {};
struct Smooth {
  double a = 0.0;
};
using ConvectionLaw = std::variant<Nonsmooth, Smooth>;

// Nonsmooth: k1 for rho > eps, k0 for rho <= eps. Smooth:
// k0 + (k1 - k0) (atan((rho - eps)/a)/pi + 1/2). Throws NonpositiveSmoothing.
double convection_rate(double rho, const ConvectionLaw& law, const WelanderParams& p);

// Raw-frame vector field of the model under a convection law.
Vec2 raw_field(Vec2 xy, const ConvectionLaw& law, const WelanderParams& p);

// Status of each zone's equilibrium through the threshold inequalities
// (alpha < alpha_L <=> left virtual), confirmed against the geometric test
// on the canonical system. Throws DegenerateAlpha; BoundaryEquilibriumCollision
// is never thrown, a boundary equilibrium is reported as Boundary.
EquilibriumStatus equilibrium_status(const WelanderParams& p, Side side);

// Fold points of the canonical system; the threshold rule (visible left fold
// <=> alpha > alpha_L) must agree with the second Lie derivative.
std::vector<FoldPoint> fold_points(const WelanderParams& p);

std::string_view to_string(Regime r);

}  // namespace welander
