#include "welander/filippov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "welander/error.hpp"

namespace welander {

namespace {

// Zf on the line x = 0 is affine in y: slope a12, intercept -b1.
struct LineDerivative {
  double slope;
  double intercept;
  double at(double y) const { return slope * y + intercept; }
};

LineDerivative line_derivative(const AffineSystem& z) {
  return {z.matrix().a12, -z.offset().x};
}

SigmaClass classify(double l, double r, double tol) {
  const bool lz = std::abs(l) <= tol;
  const bool rz = std::abs(r) <= tol;
  if (lz && rz) return SigmaClass::DoubleTangency;
  if (lz) return SigmaClass::LeftTangency;
  if (rz) return SigmaClass::RightTangency;
  if (l > 0.0 && r > 0.0) return SigmaClass::PositiveCrossing;
  if (l < 0.0 && r < 0.0) return SigmaClass::NegativeCrossing;
  if (l > 0.0) return SigmaClass::Sliding;
  return SigmaClass::Escaping;
}

// Class of an open interval from the signs at an interior point, ignoring
// the tangency tolerance.
SigmaClass classify_open(const PiecewiseAffineSystem& pws, double y) {
  const LieDerivatives d = lie_derivatives(pws, y);
  return classify(d.left, d.right, 0.0);
}

}  // namespace

LieDerivatives lie_derivatives(const PiecewiseAffineSystem& pws, double y) {
  return {line_derivative(pws.left).at(y), line_derivative(pws.right).at(y)};
}

SigmaClass classify_sigma_point(const PiecewiseAffineSystem& pws, double y) {
  const LieDerivatives d = lie_derivatives(pws, y);
  return classify(d.left, d.right, tangency_tolerance(y));
}

SigmaPartition partition_sigma(const PiecewiseAffineSystem& pws) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  SigmaPartition part;
  std::vector<double> cuts;
  for (Side s : {Side::Left, Side::Right}) {
    const LineDerivative d = line_derivative(pws.zone(s));
    if (d.slope == 0.0) {
      part.degenerate = true;
      continue;
    }
    const double y = -d.intercept / d.slope;
    part.tangencies.push_back({y, s});
    cuts.push_back(y);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::sort(part.tangencies.begin(), part.tangencies.end(),
            [](const SigmaTangency& a, const SigmaTangency& b) { return a.y < b.y; });

  std::vector<double> edges{-inf};
  edges.insert(edges.end(), cuts.begin(), cuts.end());
  edges.push_back(inf);
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    const double lo = edges[k];
    const double hi = edges[k + 1];
    double probe;
    if (std::isinf(lo) && std::isinf(hi)) {
      probe = 0.0;
    } else if (std::isinf(lo)) {
      probe = hi - 1.0 - std::abs(hi);
    } else if (std::isinf(hi)) {
      probe = lo + 1.0 + std::abs(lo);
    } else {
      probe = 0.5 * (lo + hi);
    }
    part.intervals.push_back({lo, hi, classify_open(pws, probe)});
  }
  return part;
}

SlidingVector sliding_field(const PiecewiseAffineSystem& pws, double y) {
  const SigmaClass cls = classify_sigma_point(pws, y);
  if (cls != SigmaClass::Sliding && cls != SigmaClass::Escaping) {
    throw Error(ErrorCode::NotSlidingPoint, "point is not on a sliding or escaping segment");
  }
  const LieDerivatives d = lie_derivatives(pws, y);
  const double lambda = d.left / (d.left - d.right);
  const Vec2 p{0.0, y};
  const Vec2 zl = pws.left.field(p);
  const Vec2 zr = pws.right.field(p);
  SlidingVector sv;
  sv.lambda = lambda;
  sv.velocity = {0.0, lambda * zr.y + (1.0 - lambda) * zl.y};
  return sv;
}

std::vector<FoldPoint> fold_points(const PiecewiseAffineSystem& pws) {
  std::vector<FoldPoint> folds;
  for (Side s : {Side::Left, Side::Right}) {
    const AffineSystem& z = pws.zone(s);
    const LineDerivative d = line_derivative(z);
    if (d.slope == 0.0) continue;
    const Vec2 p{0.0, -d.intercept / d.slope};
    const Vec2 v = z.field(p);
    const double second = (z.matrix() * v).x;
    // Directional difference of Zf along Z; exact up to rounding for affine Z.
    const double h = 1e-3 / std::max(1.0, norm(v));
    const double fd = (z.field(p + h * v).x - z.field(p - h * v).x) / (2.0 * h);
    const double scale = std::max({std::abs(second), std::abs(fd), 1e-300});
    if (std::abs(second - fd) > 1e-6 * scale + 1e-12) {
      throw Error(ErrorCode::IntegrationDefect, "fold curvature estimates disagree");
    }
    FoldPoint fp;
    fp.side = s;
    fp.point = p;
    fp.second_lie_derivative = second;
    if (std::abs(second) < 1e-12) {
      throw Error(ErrorCode::BoundaryEquilibriumCollision,
                  "second Lie derivative vanishes: fold collides with the equilibrium");
    }
    const bool visible = s == Side::Left ? second < 0.0 : second > 0.0;
    fp.visibility = visible ? Visibility::Visible : Visibility::Invisible;
    folds.push_back(fp);
  }
  return folds;
}

EquilibriumStatus equilibrium_status(const PiecewiseAffineSystem& pws, Side side) {
  const Vec2 xe = equilibrium(pws.zone(side));
  if (std::abs(xe.x) <= 1e-12 * (1.0 + norm(xe))) return EquilibriumStatus::Boundary;
  const bool inside = side == Side::Left ? xe.x < 0.0 : xe.x > 0.0;
  return inside ? EquilibriumStatus::Real : EquilibriumStatus::Virtual;
}

NodeType node_type(const AffineSystem& sys) {
  const double tr = sys.trace();
  const double det = sys.det();
  if (det == 0.0) return NodeType::NonIsolated;
  if (det < 0.0) return NodeType::Saddle;
  if (sys.discriminant() >= 0.0) return tr < 0.0 ? NodeType::StableNode : NodeType::UnstableNode;
  if (tr == 0.0) return NodeType::Center;
  return tr < 0.0 ? NodeType::StableFocus : NodeType::UnstableFocus;
}

Vec2 CanonicalTransform::apply(Vec2 x) const {
  return x.x > 0.0 ? right_map * x - right_shift : left_map * x - left_shift;
}

Vec2 CanonicalTransform::invert(Vec2 xt) const {
  // Both maps fix the sign of the first coordinate.
  const Mat2& M = xt.x > 0.0 ? right_map : left_map;
  const Vec2& c = xt.x > 0.0 ? right_shift : left_shift;
  const Vec2 r = xt + c;
  const double det = M.det();
  return {(M.a22 * r.x - M.a12 * r.y) / det, (M.a11 * r.y - M.a21 * r.x) / det};
}

CanonicalTransform to_lienard_canonical(const PiecewiseAffineSystem& pws) {
  const Mat2& L = pws.left.matrix();
  const Mat2& R = pws.right.matrix();
  if (L.a12 == 0.0 || R.a12 == 0.0) {
    throw Error(ErrorCode::DegenerateAlpha, "a12 = 0: no Lienard-canonical reduction");
  }
  if (L.a12 * R.a12 < 0.0) {
    throw Error(ErrorCode::TangencyDegenerate, "a12^L a12^R < 0: no Lienard-canonical reduction");
  }
  // Offsets in the dx/dt = A x + c convention.
  const Vec2 cL = -pws.left.offset();
  const Vec2 cR = -pws.right.offset();
  const double ratio = L.a12 / R.a12;

  CanonicalTransform h;
  h.left_map = {1.0, 0.0, L.a22, -L.a12};
  h.left_shift = {0.0, cL.x};
  h.right_map = {ratio, 0.0, ratio * R.a22, -L.a12};
  h.right_shift = {0.0, cL.x};
  h.a_left = L.a12 * cL.y - L.a22 * cL.x;
  h.a_right = ratio * (R.a12 * cR.y - R.a22 * cR.x);
  h.b = ratio * cR.x - cL.x;
  h.canonical.left = AffineSystem::companion(L.trace(), L.det(), {0.0, h.a_left});
  h.canonical.right = AffineSystem::companion(R.trace(), R.det(), {-h.b, h.a_right});
  return h;
}

std::string_view to_string(SigmaClass c) {
  switch (c) {
    case SigmaClass::PositiveCrossing: return "positive_crossing";
    case SigmaClass::NegativeCrossing: return "negative_crossing";
    case SigmaClass::Sliding: return "sliding";
    case SigmaClass::Escaping: return "escaping";
    case SigmaClass::LeftTangency: return "left_tangency";
    case SigmaClass::RightTangency: return "right_tangency";
    case SigmaClass::DoubleTangency: return "double_tangency";
  }
  return "unknown";
}

std::string_view to_string(Side s) { return s == Side::Left ? "left" : "right"; }

std::string_view to_string(Visibility v) {
  return v == Visibility::Visible ? "visible" : "invisible";
}

std::string_view to_string(EquilibriumStatus s) {
  switch (s) {
    case EquilibriumStatus::Real: return "real";
    case EquilibriumStatus::Virtual: return "virtual";
    case EquilibriumStatus::Boundary: return "boundary";
  }
  return "unknown";
}

std::string_view to_string(NodeType n) {
  switch (n) {
    case NodeType::StableNode: return "stable_node";
    case NodeType::UnstableNode: return "unstable_node";
    case NodeType::Saddle: return "saddle";
    case NodeType::StableFocus: return "stable_focus";
    case NodeType::UnstableFocus: return "unstable_focus";
    case NodeType::Center: return "center";
    case NodeType::NonIsolated: return "non_isolated";
  }
  return "unknown";
}

}  // namespace welander
