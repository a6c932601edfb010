#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "welander/error.hpp"
#include "welander/simulate.hpp"

using namespace welander;
using Catch::Approx;

namespace {

bool throws_code(auto&& f, ErrorCode code) {
  try {
    f();
  } catch (const Error& e) {
    return e.code() == code;
  }
  return false;
}

void check_structure(const Trajectory& tr) {
  for (size_t k = 0; k < tr.segments.size(); ++k) {
    const Segment& s = tr.segments[k];
    for (const Sample& smp : s.samples) {
      switch (s.kind) {
        case SegmentKind::LeftZone: CHECK(smp.state.x <= 0.0); break;
        case SegmentKind::RightZone: CHECK(smp.state.x >= 0.0); break;
        case SegmentKind::Sliding: CHECK(std::abs(smp.state.x) < 1e-12); break;
      }
    }
    REQUIRE_FALSE(s.samples.empty());
    CHECK(s.samples.front().t == s.t_begin);
    CHECK(s.samples.back().t == s.t_end);
    if (k > 0) {
      const Segment& prev = tr.segments[k - 1];
      CHECK(prev.t_end == s.t_begin);
      CHECK(norm(prev.samples.back().state - s.samples.front().state) < 1e-10);
    }
  }
}

// Largest state difference between an exact run and an oracle run at the
// oracle's sample times.
double discrepancy(const PiecewiseAffineSystem& pws, const Trajectory& exact, const Trajectory& rk) {
  double worst = 0.0;
  for (const Segment& s : rk.segments) {
    for (const Sample& smp : s.samples) {
      worst = std::max(worst, norm(state_at(pws, exact, smp.t) - smp.state));
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("trajectory in the cycle regime settles on the cycle") {
  const WelanderParams p = oracle::worked_example(-0.01);
  const PiecewiseAffineSystem pws = canonical_system(p);
  const Trajectory tr = integrate(pws, {0, 0.2}, 40.0, 0.05);
  CHECK_FALSE(tr.defect);
  check_structure(tr);
  const double ybar = find_cycle(p)->y_upper;
  const std::vector<double> ys = sigma_returns(tr, -1);
  REQUIRE(ys.size() > 8);
  for (size_t k = 4; k < ys.size() && std::abs(ys[k - 1] - ybar) > 1e-13; ++k) {
    CHECK(std::abs(ys[k] - ybar) < std::abs(ys[k - 1] - ybar));
  }
  CHECK(std::abs(ys.back() - ybar) < 1e-9);
  CHECK(tr.events.back().kind == EventKind::TimeLimit);
  // alternating zones after the first arc
  for (size_t k = 1; k < tr.segments.size(); ++k) CHECK(tr.segments[k].kind != tr.segments[k - 1].kind);
}

TEST_CASE("trajectory with a sliding segment ends at the pseudo-equilibrium") {
  const WelanderParams p = oracle::worked_example(0.01);
  const PiecewiseAffineSystem pws = canonical_system(p);
  const Trajectory tr = integrate(pws, {0, 0.2}, 60.0, 0.05);
  CHECK_FALSE(tr.defect);
  check_structure(tr);
  bool slid = false;
  for (const Segment& s : tr.segments) slid = slid || s.kind == SegmentKind::Sliding;
  CHECK(slid);
  CHECK(tr.segments.back().kind == SegmentKind::Sliding);
  const double aL = a_left(p), aR = a_right(p), B = b_offset(p);
  const double ys = B * aL / (aL - aR);
  CHECK(tr.final_state().y == Approx(ys).margin(1e-8));
  // spirals inward before sliding, never back to the start
  const std::vector<double> ret = sigma_returns(tr, -1);
  for (size_t k = 0; k < ret.size(); ++k) {
    CHECK(ret[k] < 0.2);
    if (k > 0) CHECK(ret[k] < ret[k - 1]);
  }
}

TEST_CASE("start on a real equilibrium") {
  WelanderParams p = oracle::worked_example(-0.01);
  p.alpha = 2.0;
  const PiecewiseAffineSystem pws = canonical_system(p);
  const Vec2 xe = equilibrium(pws.left);
  REQUIRE(xe.x < 0);
  const Trajectory tr = integrate(pws, xe, 10.0, 0.1);
  REQUIRE(tr.events.size() == 1);
  CHECK(tr.events[0].kind == EventKind::Equilibrated);
  CHECK(tr.events[0].t == 0.0);
}

TEST_CASE("integrate argument checks") {
  const PiecewiseAffineSystem pws = canonical_system(oracle::worked_example(-0.01));
  CHECK(throws_code([&] { integrate(pws, {0, 0.005}, 1.0, 0.1); }, ErrorCode::EscapingStart));
  CHECK(throws_code([&] { integrate(pws, {0, 0.2}, 0.0, 0.1); }, ErrorCode::InvalidParameters));
  CHECK(throws_code([&] { integrate(pws, {0, 0.2}, 1.0, 0.0); }, ErrorCode::InvalidParameters));
}

TEST_CASE("dt_sample changes density only") {
  const PiecewiseAffineSystem pws = canonical_system(oracle::worked_example(-0.01));
  const Trajectory a = integrate(pws, {0.1, 0.2}, 15.0, 0.5);
  const Trajectory b = integrate(pws, {0.1, 0.2}, 15.0, 0.01);
  REQUIRE(a.events.size() == b.events.size());
  for (size_t k = 0; k < a.events.size(); ++k) {
    CHECK(a.events[k].t == b.events[k].t);
    CHECK(a.events[k].state == b.events[k].state);
  }
}

TEST_CASE("exact integration agrees with the RK4 oracle in the raw frame") {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> u(-1, 1);
  const std::vector<WelanderParams> cases{oracle::worked_example(-0.01), oracle::worked_example(0.01),
                                          {0.3, 0.5, -0.01, 0.0, 1.0}, {0.8, 1.0, -0.01, 0.0, 1.0}};
  for (const WelanderParams& p : cases) {
    const PiecewiseAffineSystem raw = raw_system(p);
    for (int n = 0; n < 3; ++n) {
      const Vec2 x0{0.1 * u(rng), 0.3 + 0.2 * u(rng)};
      const Trajectory exact = integrate(raw, x0, 20.0, 0.1);
      REQUIRE_FALSE(exact.defect);
      check_structure(exact);
      const Trajectory rk = oracle_rk4(Nonsmooth{}, p, x0, 20.0, 1e-4);
      CHECK(discrepancy(raw, exact, rk) < 1e-8);
    }
  }
}

TEST_CASE("raw-frame sliding arc that moves downward") {
  // the sliding coordinate decreases along this arc, so its root bracket
  // comes out reversed
  const WelanderParams p = oracle::worked_example(0.01);
  const PiecewiseAffineSystem raw = raw_system(p);
  const Vec2 x0{0.058097410072806416, 0.45379782651700501};
  const Trajectory exact = integrate(raw, x0, 20.0, 0.1);
  REQUIRE_FALSE(exact.defect);
  check_structure(exact);
  bool slid = false;
  for (const Segment& s : exact.segments) slid = slid || s.kind == SegmentKind::Sliding;
  CHECK(slid);
  const Trajectory rk = oracle_rk4(Nonsmooth{}, p, x0, 20.0, 1e-4);
  CHECK(discrepancy(raw, exact, rk) < 1e-8);
}

TEST_CASE("RK4 oracle is fourth order") {
  const WelanderParams p = oracle::worked_example(-0.01);
  const PiecewiseAffineSystem raw = raw_system(p);
  const Vec2 x0{0.05, 0.4};
  const Vec2 ref = integrate(raw, x0, 5.0, 1.0).final_state();
  OracleOptions opt;
  opt.record_samples = false;
  const double e1 = norm(oracle_rk4(Nonsmooth{}, p, x0, 5.0, 0.02, opt).final_state() - ref);
  const double e2 = norm(oracle_rk4(Nonsmooth{}, p, x0, 5.0, 0.01, opt).final_state() - ref);
  CHECK(e1 / e2 > 12.0);
  CHECK(e1 / e2 < 20.0);
  // smooth law against a fine-step reference
  const Smooth law{0.05};
  const Vec2 sref = oracle_rk4(law, p, x0, 5.0, 1e-4, opt).final_state();
  const double s1 = norm(oracle_rk4(law, p, x0, 5.0, 0.02, opt).final_state() - sref);
  const double s2 = norm(oracle_rk4(law, p, x0, 5.0, 0.01, opt).final_state() - sref);
  CHECK(s1 / s2 > 12.0);
  CHECK(s1 / s2 < 20.0);
}

TEST_CASE("return sequence contracts at the cycle multiplier") {
  const WelanderParams p = oracle::worked_example(-0.01);
  const auto c = find_cycle(p);
  REQUIRE(c.has_value());
  const PiecewiseAffineSystem pws = canonical_system(p);
  for (double y0 : {0.2, 0.9}) {
    const std::vector<double> ys = sigma_returns(integrate(pws, {0, y0}, 12 * c->period + 10, 1.0), -1);
    REQUIRE(ys.size() >= 12);
    const double ratio = (ys[11] - c->y_upper) / (ys[10] - c->y_upper);
    CHECK(std::abs(ratio - c->multiplier) < 0.1);
  }
}

TEST_CASE("smooth Welander model settles onto a closed loop") {
  const WelanderParams p{0.8, 0.5, -1.0 / 30, 0.0, 1.0};
  OracleOptions opt;
  opt.record_samples = false;
  opt.max_crossings = 24;
  const Trajectory tr = oracle_rk4(Smooth{1.0 / 500}, p, {0.0, 0.3}, 200.0, 1e-4, opt);
  const std::vector<double> ys = sigma_returns(tr, -1);
  REQUIRE(ys.size() >= 12);
  CHECK(std::abs(ys[11] - ys[10]) < 1e-3);
}

TEST_CASE("epsilon scan") {
  const WelanderParams base = oracle::worked_example(0.0);
  const auto rows = scan_epsilon(base, {-0.05, -0.02, -0.01, 0.0, 0.01});
  REQUIRE(rows.size() == 5);
  for (int k = 0; k < 3; ++k) {
    CHECK(rows[k].has_cycle);
    CHECK(rows[k].status == "cycle");
  }
  auto amp = [](const ScanRow& r) { return r.cycle->y_upper - r.cycle->y_lower; };
  CHECK(amp(rows[0]) > amp(rows[1]));
  CHECK(amp(rows[1]) > amp(rows[2]));
  for (int k = 3; k < 5; ++k) {
    CHECK_FALSE(rows[k].has_cycle);
    CHECK_FALSE(rows[k].cycle.has_value());
    CHECK(rows[k].status.rfind("no_cycle", 0) == 0);
  }
  CHECK(rows[3].epsilon == 0.0);
  const auto single = scan_epsilon(base, {-0.01});
  REQUIRE(single.size() == 1);
  CHECK(single[0].cycle->y_upper == find_cycle(oracle::worked_example(-0.01))->y_upper);
}
