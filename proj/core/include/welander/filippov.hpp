#pragma once

// Two-zone piecewise-affine Filippov systems with switching line x = 0:
// crossing/sliding/escaping classification, the sliding vector field, fold
// points, equilibrium status and the reduction to Lienard-canonical form.

#include <string_view>
#include <vector>

#include "welander/affine2d.hpp"

namespace welander {

enum class Side { Left, Right };  // Left: x < 0, Right: x > 0

struct PiecewiseAffineSystem {
  AffineSystem left;
  AffineSystem right;

  const AffineSystem& zone(Side s) const { return s == Side::Left ? left : right; }
};

struct LieDerivatives {
  double left = 0.0;   // (Z^- f)(0, y)
  double right = 0.0;  // (Z^+ f)(0, y)
};

LieDerivatives lie_derivatives(const PiecewiseAffineSystem& pws, double y);

enum class SigmaClass {
  PositiveCrossing,  // both fields point into x > 0
  NegativeCrossing,  // both point into x < 0
  Sliding,           // Z^+ f < 0 < Z^- f
  Escaping,          // Z^- f < 0 < Z^+ f
  LeftTangency,
  RightTangency,
  DoubleTangency,
};

// |Zf| <= tangency_tolerance(y) counts as zero.
inline double tangency_tolerance(double y) { return 1e-12 * (1.0 + (y < 0 ? -y : y)); }

SigmaClass classify_sigma_point(const PiecewiseAffineSystem& pws, double y);

struct SigmaInterval {
  double lower;  // may be -infinity
  double upper;  // may be +infinity
  SigmaClass cls;
};

struct SigmaTangency {
  double y;
  Side side;
};

struct SigmaPartition {
  std::vector<SigmaInterval> intervals;  // ascending, covering the line
  std::vector<SigmaTangency> tangencies;
  // Set when a zone's Lie derivative does not depend on y (a12 = 0): every
  // point of the line is then non-generic for that zone.
  bool degenerate = false;
};

SigmaPartition partition_sigma(const PiecewiseAffineSystem& pws);

struct SlidingVector {
  double lambda = 0.0;  // weight of Z^+
  Vec2 velocity;        // lambda Z^+ + (1 - lambda) Z^-, velocity.x == 0
};

// Filippov convex combination on a sliding or escaping point; throws
// NotSlidingPoint on crossing and tangency points.
SlidingVector sliding_field(const PiecewiseAffineSystem& pws, double y);

enum class Visibility { Visible, Invisible };

struct FoldPoint {
  Side side;
  Vec2 point;
  int order = 2;
  Visibility visibility = Visibility::Invisible;
  double second_lie_derivative = 0.0;  // (Z)^2 f at the fold
};

// Folds of each zone on the switching line. Visibility follows the sign of
// (Z)^2 f, evaluated exactly and by a difference of Zf along Z; the two
// must agree (else IntegrationDefect). Throws BoundaryEquilibriumCollision
// when (Z)^2 f is below 1e-12 in magnitude (fold on top of the equilibrium).
std::vector<FoldPoint> fold_points(const PiecewiseAffineSystem& pws);

enum class EquilibriumStatus { Real, Virtual, Boundary };

// Real when the zone's equilibrium lies strictly inside its own zone.
EquilibriumStatus equilibrium_status(const PiecewiseAffineSystem& pws, Side side);

enum class NodeType {
  StableNode,
  UnstableNode,
  Saddle,
  StableFocus,
  UnstableFocus,
  Center,
  NonIsolated,
};

NodeType node_type(const AffineSystem& sys);

// Piecewise-affine homeomorphism h onto a Lienard-canonical system
//   left:  A = [[trL, -1], [detL, 0]], offset (0, a_left)
//   right: A = [[trR, -1], [detR, 0]], offset (-b, a_right)
// with h(x) = M x - shift on each zone; h keeps x = 0 fixed as a set.
struct CanonicalTransform {
  Mat2 left_map;
  Vec2 left_shift;
  Mat2 right_map;
  Vec2 right_shift;
  PiecewiseAffineSystem canonical;
  double a_left = 0.0;
  double a_right = 0.0;
  double b = 0.0;

  Vec2 apply(Vec2 x) const;
  Vec2 invert(Vec2 xt) const;
  const Mat2& jacobian(Side side) const { return side == Side::Left ? left_map : right_map; }
};

// Throws DegenerateAlpha when a12 vanishes in a zone and TangencyDegenerate
// when a12^L a12^R < 0.
CanonicalTransform to_lienard_canonical(const PiecewiseAffineSystem& pws);

std::string_view to_string(SigmaClass c);
std::string_view to_string(Side s);
std::string_view to_string(Visibility v);
std::string_view to_string(EquilibriumStatus s);
std::string_view to_string(NodeType n);

}  // namespace welander
