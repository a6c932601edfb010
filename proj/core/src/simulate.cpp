#include "welander/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <thread>

#include "welander/error.hpp"
#include "welander/roots.hpp"

namespace welander {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRestTol = 1e-12;

enum class Mode { Left, Right, Sliding };

enum class Departure { ToLeft, ToRight, Slide, Rest, Escaping };

SegmentKind kind_of(Mode m) {
  switch (m) {
    case Mode::Left: return SegmentKind::LeftZone;
    case Mode::Right: return SegmentKind::RightZone;
    case Mode::Sliding: return SegmentKind::Sliding;
  }
  return SegmentKind::Sliding;
}

double second_lie(const AffineSystem& z, double y) {
  const Vec2 v = z.field({0.0, y});
  return (z.matrix() * v).x;
}

bool left_visible(const PiecewiseAffineSystem& pws, double y) {
  return second_lie(pws.left, y) < 0.0;
}

bool right_visible(const PiecewiseAffineSystem& pws, double y) {
  return second_lie(pws.right, y) > 0.0;
}

// Where the forward solution goes from (0, y). At a fold bordering a
// sliding segment, an invisible fold keeps the solution on the line.
Departure resolve(const PiecewiseAffineSystem& pws, double y) {
  const LieDerivatives d = lie_derivatives(pws, y);
  switch (classify_sigma_point(pws, y)) {
    case SigmaClass::PositiveCrossing: return Departure::ToRight;
    case SigmaClass::NegativeCrossing: return Departure::ToLeft;
    case SigmaClass::Sliding: return Departure::Slide;
    case SigmaClass::Escaping: return Departure::Escaping;
    case SigmaClass::LeftTangency:
      if (d.right > 0.0) return Departure::ToRight;
      return left_visible(pws, y) ? Departure::ToLeft : Departure::Slide;
    case SigmaClass::RightTangency:
      if (d.left < 0.0) return Departure::ToLeft;
      return right_visible(pws, y) ? Departure::ToRight : Departure::Slide;
    case SigmaClass::DoubleTangency: {
      const bool lv = left_visible(pws, y);
      const bool rv = right_visible(pws, y);
      if (lv && !rv) return Departure::ToLeft;
      if (rv && !lv) return Departure::ToRight;
      if (!lv && !rv) {
        // Both fields tangent and bending back: the y-components decide.
        const double zl = pws.left.field({0.0, y}).y;
        const double zr = pws.right.field({0.0, y}).y;
        if (zl * zr <= 0.0) return Departure::Rest;
        return Departure::Slide;
      }
      return Departure::ToRight;
    }
  }
  return Departure::Escaping;
}

// Quadratic sliding velocity q(y) = c2 y^2 + c1 y + c0 on a sliding segment,
// valid when both zones have the same a12 (so Z^-f - Z^+f is constant).
struct SlidingQuadratic {
  double c2 = 0.0, c1 = 0.0, c0 = 0.0;
  double value(double y) const { return (c2 * y + c1) * y + c0; }
};

SlidingQuadratic sliding_quadratic(const PiecewiseAffineSystem& pws) {
  const Mat2& L = pws.left.matrix();
  const Mat2& R = pws.right.matrix();
  if (L.a12 != R.a12) {
    throw Error(ErrorCode::InvalidParameters,
                "exact sliding arcs need equal a12 in both zones");
  }
  const double p = L.a12;
  const double il = -pws.left.offset().x;
  const double ir = -pws.right.offset().x;
  const double D = il - ir;
  const double ml = L.a22, nl = -pws.left.offset().y;
  const double mr = R.a22, nr = -pws.right.offset().y;
  // q = (l Zr_y - r Zl_y) / (l - r) with l = p y + il, r = p y + ir.
  SlidingQuadratic q;
  q.c2 = p * (mr - ml) / D;
  q.c1 = (p * nr + il * mr - p * nl - ir * ml) / D;
  q.c0 = (il * nr - ir * nl) / D;
  return q;
}

// The sliding (or escaping) interval of the partition containing y.
std::pair<double, double> sliding_interval(const PiecewiseAffineSystem& pws, double y) {
  const SigmaPartition part = partition_sigma(pws);
  for (const SigmaInterval& iv : part.intervals) {
    if (iv.cls == SigmaClass::Sliding && y >= iv.lower && y <= iv.upper) {
      return {iv.lower, iv.upper};
    }
  }
  // y sits on a fold endpoint that the partition leaves out; the adjacent
  // sliding interval is the one sharing the endpoint.
  for (const SigmaInterval& iv : part.intervals) {
    if (iv.cls != SigmaClass::Sliding) continue;
    if (std::abs(y - iv.lower) <= tangency_tolerance(y) * 100.0 ||
        std::abs(y - iv.upper) <= tangency_tolerance(y) * 100.0) {
      return {iv.lower, iv.upper};
    }
  }
  return {y, y};
}

// Exact sliding arc: y moves monotonically under q towards either an
// interval endpoint (exit) or the nearest zero of q ahead (rest).
class SlidingArc {
 public:
  SlidingArc(const PiecewiseAffineSystem& pws, double y0) : y0_(y0) {
    q_ = sliding_quadratic(pws);
    std::tie(lo_, hi_) = sliding_interval(pws, y0);
    const double v0 = q_.value(y0);
    dir_ = v0 > 0.0 ? 1.0 : (v0 < 0.0 ? -1.0 : 0.0);
    if (dir_ == 0.0) {
      rest_ = true;
      root_ = y0;
      rest_time_ = 0.0;
      return;
    }
    const double end = dir_ > 0.0 ? hi_ : lo_;
    // Nearest zero of q strictly ahead of y0 and not beyond the endpoint.
    double best = kInf;
    for (double r : roots()) {
      const double ahead = dir_ * (r - y0);
      if (ahead > 0.0 && ahead <= dir_ * (end - y0) && ahead < best) {
        best = ahead;
        root_ = r;
      }
    }
    if (best < kInf) {
      rest_ = true;
      rest_time_ = std::abs(root_ - y0) <= kRestTol ? 0.0 : time_to(root_ - dir_ * kRestTol);
    } else {
      exit_y_ = end;
      exit_time_ = std::isinf(end) ? kInf : time_to(end);
    }
  }

  bool rests() const { return rest_; }
  double rest_point() const { return root_; }
  double rest_time() const { return rest_time_; }
  double exit_y() const { return exit_y_; }
  double exit_time() const { return exit_time_; }

  double y_at(double tau) const {
    if (tau <= 0.0 || dir_ == 0.0) return y0_;
    if (rest_ && tau >= rest_time_) return root_;
    if (!rest_ && tau >= exit_time_) return exit_y_;
    if (q_.c2 == 0.0 && q_.c1 != 0.0) {
      const double r = -q_.c0 / q_.c1;
      return r + (y0_ - r) * std::exp(q_.c1 * tau);
    }
    if (q_.c2 == 0.0) return y0_ + q_.c0 * tau;
    const double far = rest_ ? root_ - dir_ * kRestTol : exit_y_;
    auto f = [&](double y) { return time_to(y) - tau; };
    return bracketed_root(f, y0_, far, -tau, f(far));
  }

 private:
  std::vector<double> roots() const {
    std::vector<double> out;
    if (q_.c2 == 0.0) {
      if (q_.c1 != 0.0) out.push_back(-q_.c0 / q_.c1);
      return out;
    }
    const double disc = q_.c1 * q_.c1 - 4.0 * q_.c2 * q_.c0;
    if (disc < 0.0) return out;
    const double s = std::sqrt(disc);
    const double big = -0.5 * (q_.c1 + std::copysign(s, q_.c1));
    if (big != 0.0) {
      out.push_back(big / q_.c2);
      out.push_back(q_.c0 / big);
    } else {
      out.push_back(0.0);
    }
    return out;
  }

  // Primitive of 1/q on the current monotone stretch.
  double primitive(double y) const {
    const double c2 = q_.c2, c1 = q_.c1, c0 = q_.c0;
    if (c2 == 0.0) {
      if (c1 == 0.0) return y / c0;
      return std::log(std::abs(c1 * y + c0)) / c1;
    }
    const double disc = c1 * c1 - 4.0 * c2 * c0;
    if (disc > 0.0) {
      const std::vector<double> r = roots();
      const double r1 = r[0], r2 = r[1];
      return std::log(std::abs((y - r1) / (y - r2))) / (c2 * (r1 - r2));
    }
    if (disc == 0.0) {
      const double r = -c1 / (2.0 * c2);
      return -1.0 / (c2 * (y - r));
    }
    const double w = std::sqrt(-disc);
    return 2.0 / w * std::atan((2.0 * c2 * y + c1) / w);
  }

  double time_to(double y) const {
    if (q_.c2 == 0.0 && q_.c1 != 0.0) {
      // log((c1 y + c0)/(c1 y0 + c0))/c1 without cancelling the logs.
      return std::log1p(q_.c1 * (y - y0_) / q_.value(y0_)) / q_.c1;
    }
    return primitive(y) - primitive(y0_);
  }

  SlidingQuadratic q_;
  double y0_;
  double lo_ = -kInf, hi_ = kInf;
  double dir_ = 0.0;
  bool rest_ = false;
  double root_ = 0.0;
  double rest_time_ = kInf;
  double exit_y_ = 0.0;
  double exit_time_ = kInf;
};

// Conservative time after which |phi_t(x) - xe| <= kRestTol for a stable
// zone: |e^{At} w| <= e^{li t} (|w| + t |N w|), N = A - lj I.
std::optional<double> rest_time_in_zone(const AffineSystem& z, Vec2 x) {
  const Spectrum s = spectrum(z);
  if (!(s.lambda_i < 0.0)) return std::nullopt;
  const Vec2 w = x - equilibrium(z);
  const double nw = norm(w);
  const double nn = norm((z.matrix() - s.lambda_j * Mat2::identity()) * w);
  auto bound = [&](double t) { return std::exp(s.lambda_i * t) * (nw + t * nn) - kRestTol; };
  if (bound(0.0) <= 0.0) return 0.0;
  // bound is decreasing beyond its maximum at 1/|li| - nw/nn.
  double lo = nn > 0.0 ? std::max(0.0, 1.0 / -s.lambda_i - nw / nn) : 0.0;
  double hi = std::max(lo, 1.0) * 2.0;
  while (bound(hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) return std::nullopt;
  }
  return bracketed_root(bound, lo, hi, bound(lo), bound(hi));
}

bool zone_equilibrium_real(const PiecewiseAffineSystem& pws, Side side) {
  try {
    return equilibrium_status(pws, side) == EquilibriumStatus::Real;
  } catch (const Error&) {
    return false;
  }
}

// Global sample grid k * dt strictly inside (t0, t1), plus both ends.
template <class F>
void fill_samples(Segment& seg, double dt, F state) {
  seg.samples.push_back({seg.t_begin, seg.start});
  if (seg.t_end > seg.t_begin) {
    double k = std::floor(seg.t_begin / dt) + 1.0;
    for (double t = k * dt; t < seg.t_end; t = (++k) * dt) {
      if (t > seg.t_begin) seg.samples.push_back({t, state(t)});
    }
    seg.samples.push_back({seg.t_end, state(seg.t_end)});
  }
}

Vec2 zone_state(const AffineSystem& z, const Segment& seg, double t, double side) {
  Vec2 q = flow(z, seg.start, t - seg.t_begin);
  // Rounding can put a point a hair across the line next to a crossing.
  if (side * q.x < 0.0 && std::abs(q.x) <= 1e-12 * (1.0 + std::abs(q.y))) q.x = 0.0;
  return q;
}

}  // namespace

double Trajectory::t_end() const { return segments.empty() ? 0.0 : segments.back().t_end; }

Vec2 Trajectory::final_state() const {
  if (segments.empty() || segments.back().samples.empty()) return {};
  return segments.back().samples.back().state;
}

Trajectory integrate(const PiecewiseAffineSystem& pws, Vec2 x0, double T, double dt_sample) {
  if (!(T > 0.0) || !std::isfinite(T)) {
    throw Error(ErrorCode::InvalidParameters, "horizon T must be positive");
  }
  if (!(dt_sample > 0.0)) throw Error(ErrorCode::InvalidParameters, "dt_sample must be positive");

  Trajectory traj;
  double t = 0.0;
  Vec2 x = x0;
  Mode mode = Mode::Left;
  if (x.x < 0.0) {
    mode = Mode::Left;
  } else if (x.x > 0.0) {
    mode = Mode::Right;
  } else {
    switch (resolve(pws, x.y)) {
      case Departure::ToLeft: mode = Mode::Left; break;
      case Departure::ToRight: mode = Mode::Right; break;
      case Departure::Slide: mode = Mode::Sliding; break;
      case Departure::Rest:
        traj.segments.push_back({SegmentKind::Sliding, 0.0, 0.0, x, {{0.0, x}}});
        traj.events.push_back({0.0, EventKind::Equilibrated, x, 0, "pseudo_equilibrium"});
        return traj;
      case Departure::Escaping:
        throw Error(ErrorCode::EscapingStart,
                    "start lies on an escaping segment of the switching line");
    }
    if (mode == Mode::Sliding) traj.events.push_back({0.0, EventKind::EnterSliding, x, 0, ""});
  }

  // Each pass produces one segment and the event that ends it.
  for (int guard = 0; guard < 1000000; ++guard) {
    const double remaining = T - t;
    Segment seg;
    seg.kind = kind_of(mode);
    seg.t_begin = t;
    seg.start = x;

    if (mode == Mode::Sliding) {
      const SlidingArc arc(pws, x.y);
      auto state = [&](double s) { return Vec2{0.0, arc.y_at(s - seg.t_begin)}; };
      if (arc.rests() && arc.rest_time() <= remaining) {
        seg.t_end = t + arc.rest_time();
        fill_samples(seg, dt_sample, state);
        traj.segments.push_back(std::move(seg));
        traj.events.push_back(
            {traj.t_end(), EventKind::Equilibrated, traj.final_state(), 0, "pseudo_equilibrium"});
        return traj;
      }
      if (!arc.rests() && arc.exit_time() <= remaining) {
        seg.t_end = t + arc.exit_time();
        fill_samples(seg, dt_sample, state);
        traj.segments.push_back(std::move(seg));
        t = traj.t_end();
        x = {0.0, arc.exit_y()};
        // The endpoint is a fold of the zone whose Lie derivative vanishes.
        const LieDerivatives d = lie_derivatives(pws, x.y);
        const bool left_fold = std::abs(d.left) <= std::abs(d.right);
        const bool visible = left_fold ? left_visible(pws, x.y) : right_visible(pws, x.y);
        if (!visible) {
          traj.defect = true;
          traj.defect_message = "sliding arc reached an invisible fold";
          traj.events.push_back({t, EventKind::ReachEscaping, x, 0, "invisible_fold_exit"});
          return traj;
        }
        mode = left_fold ? Mode::Left : Mode::Right;
        traj.events.push_back({t, EventKind::LeaveSliding, x, left_fold ? -1 : 1, ""});
        continue;
      }
      seg.t_end = T;
      fill_samples(seg, dt_sample, state);
      traj.segments.push_back(std::move(seg));
      traj.events.push_back({T, EventKind::TimeLimit, traj.final_state(), 0, ""});
      return traj;
    }

    const Side side = mode == Mode::Left ? Side::Left : Side::Right;
    const AffineSystem& z = pws.zone(side);
    const double sgn = side == Side::Left ? -1.0 : 1.0;
    auto state = [&](double s) { return zone_state(z, seg, s, sgn); };
    const std::optional<double> hit = first_sigma_hit(z, x, static_cast<int>(sgn), remaining);

    if (!hit && zone_equilibrium_real(pws, side)) {
      if (auto rest = rest_time_in_zone(z, x); rest && *rest <= remaining) {
        seg.t_end = t + *rest;
        fill_samples(seg, dt_sample, state);
        traj.segments.push_back(std::move(seg));
        traj.events.push_back({traj.t_end(), EventKind::Equilibrated, traj.final_state(), 0, ""});
        return traj;
      }
    }
    if (!hit) {
      seg.t_end = T;
      fill_samples(seg, dt_sample, state);
      traj.segments.push_back(std::move(seg));
      traj.events.push_back({T, EventKind::TimeLimit, traj.final_state(), 0, ""});
      return traj;
    }

    seg.t_end = t + *hit;
    const Vec2 arrival{0.0, flow(z, seg.start, *hit).y};
    fill_samples(seg, dt_sample, state);
    seg.samples.back().state = arrival;
    traj.segments.push_back(std::move(seg));
    t = traj.t_end();
    x = arrival;

    switch (resolve(pws, x.y)) {
      case Departure::ToLeft:
        traj.events.push_back({t, EventKind::CrossSigma, x, -1, mode == Mode::Left ? "fold_graze" : ""});
        mode = Mode::Left;
        break;
      case Departure::ToRight:
        traj.events.push_back({t, EventKind::CrossSigma, x, 1, mode == Mode::Right ? "fold_graze" : ""});
        mode = Mode::Right;
        break;
      case Departure::Slide:
        traj.events.push_back({t, EventKind::EnterSliding, x, 0, ""});
        mode = Mode::Sliding;
        break;
      case Departure::Rest:
        traj.segments.push_back({SegmentKind::Sliding, t, t, x, {{t, x}}});
        traj.events.push_back({t, EventKind::Equilibrated, x, 0, "pseudo_equilibrium"});
        return traj;
      case Departure::Escaping:
        traj.defect = true;
        traj.defect_message = "zone arc arrived inside an escaping segment";
        traj.events.push_back({t, EventKind::ReachEscaping, x, 0, ""});
        return traj;
    }
    if (t >= T) {
      traj.events.push_back({T, EventKind::TimeLimit, x, 0, ""});
      return traj;
    }
  }
  throw Error(ErrorCode::IntegrationDefect, "event budget exhausted");
}

Vec2 state_at(const PiecewiseAffineSystem& pws, const Trajectory& traj, double t) {
  if (traj.segments.empty()) return {};
  if (t >= traj.t_end()) return traj.final_state();
  auto it = std::upper_bound(traj.segments.begin(), traj.segments.end(), t,
                             [](double v, const Segment& s) { return v < s.t_end; });
  if (it == traj.segments.end()) return traj.final_state();
  const Segment& seg = *it;
  switch (seg.kind) {
    case SegmentKind::LeftZone: return zone_state(pws.left, seg, t, -1.0);
    case SegmentKind::RightZone: return zone_state(pws.right, seg, t, 1.0);
    case SegmentKind::Sliding: {
      const SlidingArc arc(pws, seg.start.y);
      return {0.0, arc.y_at(t - seg.t_begin)};
    }
  }
  return {};
}

namespace {

template <class F>
Vec2 rk4_step(F f, Vec2 x, double h) {
  const Vec2 k1 = f(x);
  const Vec2 k2 = f(x + 0.5 * h * k1);
  const Vec2 k3 = f(x + 0.5 * h * k2);
  const Vec2 k4 = f(x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

template <class F>
double rk4_scalar(F f, double y, double h) {
  const double k1 = f(y);
  const double k2 = f(y + 0.5 * h * k1);
  const double k3 = f(y + 0.5 * h * k2);
  const double k4 = f(y + h * k3);
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Sub-step length in (0, h] at which g changes sign, g(h) having the sign
// opposite to g at 0; bisected to a width of 1e-15 (|g| at that point is far
// below 1e-12 for the bounded fields used here).
template <class G>
double bisect_substep(G g, double h) {
  double lo = 0.0;
  double hi = h;
  const double g_lo = g(lo);
  for (int k = 0; k < 200 && hi - lo > 1e-15; ++k) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if (gm == 0.0) return mid;
    if ((gm > 0.0) == (g_lo > 0.0)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return hi;
}

class OracleRecorder {
 public:
  OracleRecorder(Trajectory& traj, bool record) : traj_(traj), record_(record) {}

  void open(SegmentKind kind, double t, Vec2 x) {
    Segment seg;
    seg.kind = kind;
    seg.t_begin = seg.t_end = t;
    seg.start = x;
    seg.samples.push_back({t, x});
    traj_.segments.push_back(std::move(seg));
  }
  void sample(double t, Vec2 x) {
    Segment& seg = traj_.segments.back();
    seg.t_end = t;
    if (record_) {
      seg.samples.push_back({t, x});
    } else {
      if (seg.samples.size() < 2) seg.samples.push_back({t, x});
      seg.samples.back() = {t, x};
    }
  }

 private:
  Trajectory& traj_;
  bool record_;
};

Trajectory oracle_smooth(const Smooth& law, const WelanderParams& p, Vec2 x0, double T, double h,
                         const OracleOptions& opt) {
  Trajectory traj;
  OracleRecorder rec(traj, opt.record_samples);
  auto f = [&](Vec2 x) { return raw_field(x, law, p); };
  auto kind = [](double X) { return X > 0.0 ? SegmentKind::RightZone : SegmentKind::LeftZone; };
  double t = 0.0;
  Vec2 x = x0;
  rec.open(kind(x.x), t, x);
  int crossings = 0;
  while (t < T) {
    const double step = std::min(h, T - t);
    const Vec2 x1 = rk4_step(f, x, step);
    const double t1 = (T - t <= h) ? T : t + step;
    if ((x.x > 0.0) != (x1.x > 0.0)) {
      // Crossing located on the step's chord; used for section statistics.
      const double w = x.x / (x.x - x1.x);
      const Vec2 xc{0.0, x.y + w * (x1.y - x.y)};
      const double tc = t + w * step;
      rec.sample(tc, xc);
      traj.events.push_back({tc, EventKind::CrossSigma, xc, x1.x > 0.0 ? 1 : -1, ""});
      rec.open(kind(x1.x), tc, xc);
      ++crossings;
    }
    rec.sample(t1, x1);
    t = t1;
    x = x1;
    if (opt.max_crossings > 0 && crossings >= opt.max_crossings) return traj;
  }
  traj.events.push_back({t, EventKind::TimeLimit, x, 0, ""});
  return traj;
}

Trajectory oracle_nonsmooth(const WelanderParams& p, Vec2 x0, double T, double h,
                            const OracleOptions& opt) {
  const PiecewiseAffineSystem pws = raw_system(p);
  Trajectory traj;
  OracleRecorder rec(traj, opt.record_samples);
  double t = 0.0;
  Vec2 x = x0;
  int crossings = 0;

  // Filippov sliding velocity from the two raw fields.
  auto sliding_velocity = [&](double y) {
    const Vec2 zl = pws.left.field({0.0, y});
    const Vec2 zr = pws.right.field({0.0, y});
    const double lambda = zl.x / (zl.x - zr.x);
    return lambda * zr.y + (1.0 - lambda) * zl.y;
  };

  auto mode_from = [&](Departure d) {
    switch (d) {
      case Departure::ToLeft: return Mode::Left;
      case Departure::ToRight: return Mode::Right;
      case Departure::Slide: return Mode::Sliding;
      case Departure::Rest: return Mode::Sliding;
      case Departure::Escaping: break;
    }
    throw Error(ErrorCode::EscapingStart, "start lies on an escaping segment of the switching line");
  };

  Mode mode = x.x < 0.0 ? Mode::Left : (x.x > 0.0 ? Mode::Right : mode_from(resolve(pws, x.y)));
  rec.open(kind_of(mode), t, x);
  double lo = 0.0, hi = 0.0;
  if (mode == Mode::Sliding) std::tie(lo, hi) = sliding_interval(pws, x.y);

  while (t < T) {
    const double step = std::min(h, T - t);
    if (mode == Mode::Sliding) {
      const double y1 = rk4_scalar(sliding_velocity, x.y, step);
      const bool out_hi = y1 > hi;
      const bool out_lo = y1 < lo;
      if (!out_hi && !out_lo) {
        t = (T - t <= h) ? T : t + step;
        x = {0.0, y1};
        rec.sample(t, x);
        continue;
      }
      const double edge = out_hi ? hi : lo;
      const double y0 = x.y;
      const double tau =
          bisect_substep([&](double s) { return rk4_scalar(sliding_velocity, y0, s) - edge; }, step);
      t += tau;
      x = {0.0, edge};
      rec.sample(t, x);
      const LieDerivatives d = lie_derivatives(pws, edge);
      const bool left_fold = std::abs(d.left) <= std::abs(d.right);
      mode = left_fold ? Mode::Left : Mode::Right;
      traj.events.push_back({t, EventKind::LeaveSliding, x, left_fold ? -1 : 1, ""});
      rec.open(kind_of(mode), t, x);
      continue;
    }

    const AffineSystem& z = mode == Mode::Left ? pws.left : pws.right;
    const double sgn = mode == Mode::Left ? -1.0 : 1.0;
    auto f = [&](Vec2 q) { return z.field(q); };
    const Vec2 x1 = rk4_step(f, x, step);
    if (!(sgn * x1.x < 0.0)) {
      t = (T - t <= h) ? T : t + step;
      x = x1;
      rec.sample(t, x);
      continue;
    }
    if (x.x == 0.0) {
      // Left the line on the wrong side: re-read the departure rule there.
      const Mode m = mode_from(resolve(pws, x.y));
      if (m != mode) {
        mode = m;
        traj.segments.back().kind = kind_of(mode);
        if (mode == Mode::Sliding) std::tie(lo, hi) = sliding_interval(pws, x.y);
        continue;
      }
    }
    const Vec2 xs = x;
    const double tau = bisect_substep([&](double s) { return rk4_step(f, xs, s).x; }, step);
    t += tau;
    x = {0.0, rk4_step(f, xs, tau).y};
    rec.sample(t, x);
    const Departure d = resolve(pws, x.y);
    if (d == Departure::Escaping) {
      traj.defect = true;
      traj.defect_message = "oracle arc arrived inside an escaping segment";
      traj.events.push_back({t, EventKind::ReachEscaping, x, 0, ""});
      return traj;
    }
    const Mode next = mode_from(d);
    if (next == Mode::Sliding) {
      traj.events.push_back({t, EventKind::EnterSliding, x, 0, ""});
      std::tie(lo, hi) = sliding_interval(pws, x.y);
    } else {
      traj.events.push_back({t, EventKind::CrossSigma, x, next == Mode::Right ? 1 : -1, ""});
      ++crossings;
    }
    mode = next;
    rec.open(kind_of(mode), t, x);
    if (opt.max_crossings > 0 && crossings >= opt.max_crossings) return traj;
  }
  traj.events.push_back({t, EventKind::TimeLimit, x, 0, ""});
  return traj;
}

}  // namespace

Trajectory oracle_rk4(const ConvectionLaw& law, const WelanderParams& p, Vec2 x0, double T,
                      double h, const OracleOptions& options) {
  validate(p);
  if (!(h > 0.0)) throw Error(ErrorCode::InvalidParameters, "step h must be positive");
  if (!(T > 0.0)) throw Error(ErrorCode::InvalidParameters, "horizon T must be positive");
  if (const auto* s = std::get_if<Smooth>(&law)) {
    if (!(s->a > 0.0)) throw Error(ErrorCode::NonpositiveSmoothing, "smoothing a must be > 0");
    return oracle_smooth(*s, p, x0, T, h, options);
  }
  return oracle_nonsmooth(p, x0, T, h, options);
}

std::vector<ScanRow> scan_epsilon(const WelanderParams& base, const std::vector<double>& eps_list) {
  auto row_for = [&](double eps) {
    WelanderParams p = base;
    p.epsilon = eps;
    ScanRow row;
    row.epsilon = eps;
    try {
      row.cycle = find_cycle(p);
      row.has_cycle = row.cycle.has_value();
      row.status = row.has_cycle ? "cycle" : "no_cycle";
    } catch (const Error& e) {
      row.status = std::string(to_string(e.code()));
    }
    return row;
  };
  std::vector<ScanRow> rows(eps_list.size());
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), 8));
  for (std::size_t begin = 0; begin < eps_list.size(); begin += workers) {
    const std::size_t end = std::min(eps_list.size(), begin + workers);
    std::vector<std::future<ScanRow>> batch;
    for (std::size_t k = begin; k < end; ++k) {
      batch.push_back(std::async(std::launch::async, row_for, eps_list[k]));
    }
    for (std::size_t k = begin; k < end; ++k) rows[k] = batch[k - begin].get();
  }
  return rows;
}

std::vector<double> sigma_returns(const Trajectory& traj, int direction) {
  std::vector<double> ys;
  for (const Event& e : traj.events) {
    if (e.kind == EventKind::CrossSigma && e.direction == direction) ys.push_back(e.state.y);
  }
  return ys;
}

std::string_view to_string(SegmentKind k) {
  switch (k) {
    case SegmentKind::LeftZone: return "left";
    case SegmentKind::RightZone: return "right";
    case SegmentKind::Sliding: return "sliding";
  }
  return "unknown";
}

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::CrossSigma: return "cross_sigma";
    case EventKind::EnterSliding: return "enter_sliding";
    case EventKind::LeaveSliding: return "leave_sliding";
    case EventKind::ReachEscaping: return "reach_escaping";
    case EventKind::Equilibrated: return "equilibrated";
    case EventKind::TimeLimit: return "time_limit";
  }
  return "unknown";
}

}  // namespace welander
