#include "welander/model.hpp"

#include <cmath>
#include <numbers>

#include "welander/error.hpp"

namespace welander {

namespace {

void require(bool ok, const char* constraint) {
  if (!ok) throw Error(ErrorCode::InvalidParameters, constraint);
}

void require_nondegenerate(const WelanderParams& p) {
  if (p.alpha * (1.0 - p.beta) == 0.0) {
    throw Error(ErrorCode::DegenerateAlpha, "alpha (1 - beta) = 0");
  }
}

// a for a zone with convection rate k. Long double keeps the cancellation
// between the two terms (they nearly balance close to a threshold) at the
// level of the input rounding.
double a_for(const WelanderParams& p, double k) {
  const long double al = p.alpha, be = p.beta, ep = p.epsilon, kk = k;
  return static_cast<double>(-al * (kk + be) - (1.0L + kk) * (be * (ep - 1.0L) + kk * ep));
}

double alpha_for(const WelanderParams& p, double k) {
  const long double be = p.beta, ep = p.epsilon, kk = k;
  return static_cast<double>(-(1.0L + kk) * (be * (ep - 1.0L) + kk * ep) / (kk + be));
}

AffineSystem raw_zone(const WelanderParams& p, double k) {
  const Mat2 A{-k - p.beta, p.alpha * (1.0 - p.beta), 0.0, -1.0 - k};
  const Vec2 c{p.beta - p.alpha - (p.beta + k) * p.epsilon, 1.0};
  return AffineSystem::from_plus_form(A, c);
}

bool near(double a, double b) { return std::abs(a - b) <= 1e-12 * (1.0 + std::abs(b)); }

}  // namespace

void validate(const WelanderParams& p) {
  require(std::isfinite(p.alpha) && std::isfinite(p.beta) && std::isfinite(p.epsilon) &&
              std::isfinite(p.k0) && std::isfinite(p.k1),
          "all parameters finite");
  require(p.beta > 0.0, "beta > 0");
  require(p.k0 >= 0.0, "k0 >= 0");
  require(p.k1 > p.k0, "k1 > k0");
}

Thresholds thresholds(const WelanderParams& p) {
  Thresholds t;
  t.alpha_L = alpha_for(p, p.k0);
  t.alpha_R = alpha_for(p, p.k1);
  t.eps_star = p.beta * (p.beta - 1.0) / ((p.k0 + p.beta) * (p.beta + p.k1));
  return t;
}

Regime regime(const WelanderParams& p) {
  if (p.alpha * (1.0 - p.beta) == 0.0) return Regime::DegenerateNoCycle;
  const Thresholds t = thresholds(p);
  if (p.alpha >= t.alpha_L || p.alpha <= t.alpha_R) return Regime::RealEquilibriumNoCycle;
  return p.epsilon >= 0.0 ? Regime::VirtualNoCycle : Regime::UniqueStableCycle;
}

bool has_cycle(Regime r) { return r == Regime::UniqueStableCycle; }

double a_left(const WelanderParams& p) { return a_for(p, p.k0); }
double a_right(const WelanderParams& p) { return a_for(p, p.k1); }
double b_offset(const WelanderParams& p) { return (p.k0 - p.k1) * p.epsilon; }

PiecewiseAffineSystem raw_system(const WelanderParams& p) {
  validate(p);
  return {raw_zone(p, p.k0), raw_zone(p, p.k1)};
}

PiecewiseAffineSystem canonical_system(const WelanderParams& p) {
  validate(p);
  require_nondegenerate(p);
  auto zone = [&](double k, Vec2 offset) {
    return AffineSystem::companion(-(1.0 + 2.0 * k + p.beta), (1.0 + k) * (k + p.beta), offset);
  };
  return {zone(p.k0, {0.0, a_left(p)}), zone(p.k1, {-b_offset(p), a_right(p)})};
}

CanonicalTransform canonical_transform(const WelanderParams& p) {
  validate(p);
  require_nondegenerate(p);
  return to_lienard_canonical(raw_system(p));
}

double convection_rate(double rho, const ConvectionLaw& law, const WelanderParams& p) {
  if (const auto* s = std::get_if<Smooth>(&law)) {
    if (!(s->a > 0.0)) throw Error(ErrorCode::NonpositiveSmoothing, "smoothing a must be > 0");
    const double unit = std::atan((rho - p.epsilon) / s->a) / std::numbers::pi + 0.5;
    return p.k0 + (p.k1 - p.k0) * unit;
  }
  return rho > p.epsilon ? p.k1 : p.k0;
}

Vec2 raw_field(Vec2 xy, const ConvectionLaw& law, const WelanderParams& p) {
  const double k = convection_rate(xy.x + p.epsilon, law, p);
  return {p.beta - p.alpha - (p.beta + k) * p.epsilon - (p.beta + k) * xy.x +
              p.alpha * (1.0 - p.beta) * xy.y,
          1.0 - (1.0 + k) * xy.y};
}

EquilibriumStatus equilibrium_status(const WelanderParams& p, Side side) {
  validate(p);
  const Thresholds t = thresholds(p);
  EquilibriumStatus by_threshold;
  if (side == Side::Left) {
    by_threshold = near(p.alpha, t.alpha_L) ? EquilibriumStatus::Boundary
                   : p.alpha > t.alpha_L    ? EquilibriumStatus::Real
                                            : EquilibriumStatus::Virtual;
  } else {
    by_threshold = near(p.alpha, t.alpha_R) ? EquilibriumStatus::Boundary
                   : p.alpha < t.alpha_R    ? EquilibriumStatus::Real
                                            : EquilibriumStatus::Virtual;
  }
  const EquilibriumStatus geometric = equilibrium_status(raw_system(p), side);
  if (by_threshold != EquilibriumStatus::Boundary && geometric != EquilibriumStatus::Boundary &&
      by_threshold != geometric) {
    throw Error(ErrorCode::IntegrationDefect,
                "threshold and geometric equilibrium status disagree");
  }
  return by_threshold;
}

std::vector<FoldPoint> fold_points(const WelanderParams& p) {
  const PiecewiseAffineSystem pws = canonical_system(p);
  const Thresholds t = thresholds(p);
  std::vector<FoldPoint> folds = welander::fold_points(pws);
  for (const FoldPoint& f : folds) {
    const bool visible = f.side == Side::Left ? p.alpha > t.alpha_L : p.alpha < t.alpha_R;
    if (visible != (f.visibility == Visibility::Visible)) {
      throw Error(ErrorCode::IntegrationDefect, "fold visibility disagrees with thresholds");
    }
  }
  return folds;
}

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::DegenerateNoCycle: return "degenerate_no_cycle";
    case Regime::RealEquilibriumNoCycle: return "real_equilibrium_no_cycle";
    case Regime::VirtualNoCycle: return "virtual_no_cycle";
    case Regime::UniqueStableCycle: return "unique_stable_cycle";
  }
  return "unknown";
}

}  // namespace welander
