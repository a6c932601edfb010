#pragma once

// Trajectories of the Filippov system: an exact event-driven integrator
// (closed-form zone flows, closed-form sliding arcs) and a fixed-step RK4
// oracle for the non-smooth and smooth raw models.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "welander/model.hpp"
#include "welander/poincare.hpp"

namespace welander {

enum class SegmentKind { LeftZone, RightZone, Sliding };

struct Sample {
  double t = 0.0;
  Vec2 state;
};

struct Segment {
  SegmentKind kind = SegmentKind::LeftZone;
  double t_begin = 0.0;
  double t_end = 0.0;
  Vec2 start;  // state at t_begin, used for exact re-evaluation
  std::vector<Sample> samples;
};

enum class EventKind {
  CrossSigma,
  EnterSliding,
  LeaveSliding,
  ReachEscaping,
  Equilibrated,
  TimeLimit,
};

struct Event {
  double t = 0.0;
  EventKind kind = EventKind::TimeLimit;
  Vec2 state;
  // Direction of a CrossSigma event: +1 into x > 0, -1 into x < 0.
  int direction = 0;
  std::string note;
};

struct Trajectory {
  std::vector<Segment> segments;
  std::vector<Event> events;
  // Set when the run was aborted (arrival inside an escaping segment).
  bool defect = false;
  std::string defect_message;

  double t_end() const;
  Vec2 final_state() const;
};

// Exact hybrid solution over [0, T], sampled every dt_sample (plus each
// segment's endpoints). Throws EscapingStart when x0 lies on an escaping
// segment, InvalidParameters for T <= 0 or dt_sample <= 0. Sliding arcs need
// a12^L = a12^R (true for the raw and canonical Welander systems), which
// makes the sliding field a quadratic in y; otherwise InvalidParameters.
Trajectory integrate(const PiecewiseAffineSystem& pws, Vec2 x0, double T, double dt_sample);

// State of an integrate() result at time t, re-evaluated exactly. Past the
// end of an Equilibrated run the terminal state is returned.
Vec2 state_at(const PiecewiseAffineSystem& pws, const Trajectory& traj, double t);

// Classical RK4 with fixed step h on the raw model. For the non-smooth law,
// a step that leaves its zone is bisected (in sub-step length) onto X = 0 to
// 1e-12 before the arrival rules are applied; sliding arcs integrate the
// scalar sliding field with the same step. Every step is sampled.
struct OracleOptions {
  bool record_samples = true;
  // Stop after this many Sigma crossings (0: no limit).
  int max_crossings = 0;
};

Trajectory oracle_rk4(const ConvectionLaw& law, const WelanderParams& p, Vec2 x0, double T,
                      double h, const OracleOptions& options = {});

struct ScanRow {
  double epsilon = 0.0;
  bool has_cycle = false;
  std::optional<CrossingCycle> cycle;
  std::string status;  // "cycle", "no_cycle: <regime>" or an error code
};

// One row per epsilon, in input order; points may be evaluated concurrently.
std::vector<ScanRow> scan_epsilon(const WelanderParams& base, const std::vector<double>& eps_list);

// Sigma crossings of a trajectory in the given direction (+1 or -1): the
// y-coordinates in time order.
std::vector<double> sigma_returns(const Trajectory& traj, int direction);

std::string_view to_string(SegmentKind k);
std::string_view to_string(EventKind k);

}  // namespace welander
