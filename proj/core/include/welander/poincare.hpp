#pragma once

// Half Poincare maps of the canonical Welander system parametrized by
// flight time, their inverses and tangency Taylor data, the displacement
// function, the crossing cycle and the trace-area identity.
//
// Left map: (0, y0), y0 > 0, flows through x < 0 to (0, y1), y1 < 0.
// Right map: (0, y0), y0 < B, flows through x > 0 to (0, y1), y1 > B,
// where B = (k0 - k1) eps.

#include <optional>

#include "welander/model.hpp"

namespace welander {

// Data of one zone's half map: eigenvalues lambda_i > lambda_j, the
// canonical constant a and the base point (0 for left, B for right).
struct HalfMapGeometry {
  double lambda_i = 0.0;
  double lambda_j = 0.0;
  double a = 0.0;
  double base = 0.0;

  double det() const { return lambda_i * lambda_j; }
  double neg_trace() const { return -(lambda_i + lambda_j); }
  // Limit of y_end as t -> infinity.
  double asymptote() const { return base + a / lambda_j; }
};

struct HalfMapPoint {
  double t = 0.0;
  double y_start = 0.0;
  double y_end = 0.0;
};

struct MapValue {
  double y = 0.0;  // image
  double t = 0.0;  // flight time
};

// Throws DegenerateBeta (beta = 1), DegenerateAlpha, InvalidParameters.
// Does not check the sign of a.
HalfMapGeometry half_map_geometry(const WelanderParams& p, Side side);

// Closed-form parametrization at flight time t > 0. The geometry-level
// overload evaluates formally for any a != 0.
HalfMapPoint half_map_parametric(const HalfMapGeometry& g, double t);
// Throws WrongRegime unless a^L > 0 (Left) or a^R < 0 (Right); OutOfDomain for t <= 0.
HalfMapPoint half_map_parametric(const WelanderParams& p, Side side, double t);

// Derivative of a half map at flight time t: -psi(t) / psi(-t).
double half_map_derivative(const HalfMapGeometry& g, double t);

// P_L on y0 > 0. Throws OutOfDomain, WrongRegime.
MapValue left_map(const WelanderParams& p, double y0);
// P_R on y0 < B. Throws OutOfDomain, WrongRegime.
MapValue right_map(const WelanderParams& p, double y0);
// P_R^{-1} on (B, B + a^R/lambda_j^R). Throws OutOfDomain, AsymptoteReached, WrongRegime.
MapValue right_map_inverse(const WelanderParams& p, double y0);

struct DisplacementDomain {
  double lower = 0.0;
  double upper = 0.0;
};

// (max(0, B), B + a^R/lambda_j^R). Throws WrongRegime unless both sides are virtual.
DisplacementDomain displacement_domain(const WelanderParams& p);

// Delta(y0) = P_L(y0) - P_R^{-1}(y0); at y0 = B (> 0) the right inverse is
// the tangency value B itself.
double displacement(const WelanderParams& p, double y0);

struct CrossingCycle {
  double y_upper = 0.0;
  double y_lower = 0.0;
  double t_left = 0.0;
  double t_right = 0.0;
  double period = 0.0;
  double multiplier = 0.0;
};

// The crossing cycle when regime() is UniqueStableCycle, else nullopt.
// Throws BracketFailure when the displacement fails to change sign.
std::optional<CrossingCycle> find_cycle(const WelanderParams& p);

// Distance between (0, y_upper) and its image after both exact zone arcs.
double cycle_closure_residual(const WelanderParams& p, const CrossingCycle& c);

struct TaylorData {
  double d1 = 0.0;
  double d2 = 0.0;
  double d3 = 0.0;
  double d4 = 0.0;
};

// Derivatives of a half map at its tangency point (y = 0 left, y = B right)
// from closed forms. Throws WrongRegime.
TaylorData taylor_at_tangency(const HalfMapGeometry& g);
TaylorData taylor_at_tangency(const WelanderParams& p, Side side);

struct FullMapTaylor {
  TaylorData data;
  bool resonant = false;
};

// Derivatives at 0 of the full return map P_R o P_L for eps = 0, composed
// from the half-map germs, which are analytic at the tangency for either
// sign of a. Resonance, (1+2k1+beta)/a^R = (1+2k0+beta)/a^L, makes d2 = d3 = 0.
// Throws NonzeroOffset when eps != 0.
FullMapTaylor full_map_taylor(const WelanderParams& p);

// tr(A^L) sigma^L + tr(A^R) sigma^R + b h, sigma by Simpson quadrature of
// (1/2)(x dy - y dx) along each exact arc closed by its chord on x = 0.
struct AreaIdentity {
  double residual = 0.0;
  double sigma_left = 0.0;
  double sigma_right = 0.0;
  // |tr(A^L)| sigma^L + |tr(A^R)| sigma^R, the natural scale of the residual.
  double scale = 0.0;
};

AreaIdentity area_identity(const WelanderParams& p, const CrossingCycle& c);
double area_identity_residual(const WelanderParams& p, const CrossingCycle& c);

}  // namespace welander
