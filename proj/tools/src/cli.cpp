#include "cli.hpp"

#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "welander/error.hpp"
#include "welander/simulate.hpp"

namespace welander::cli {

namespace {

using nlohmann::json;

// Input problem detected by the front end itself.
struct UsageError {
  std::string constraint;
  std::string message;
};

struct Options {
  std::optional<double> alpha, beta, epsilon, k0, k1;
  std::string config;
  std::optional<double> x0, y0, horizon, dt_sample, smooth, rk_step;
  std::optional<double> eps_from, eps_to, eps_step;
  std::optional<std::string> frame;
  std::string out, events, polyline;
  std::optional<std::string> format;
  std::vector<std::string> starts;
  std::string grid;
};

struct Resolved {
  WelanderParams params;
  bool canonical = true;
  double x0 = 0.0;
  std::optional<double> y0;
  double horizon = 50.0;
  double dt_sample = 0.01;
  std::optional<double> smooth;
  double rk_step = 1e-4;
  std::optional<double> eps_from, eps_to, eps_step;
  std::vector<Vec2> starts;
};

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto log = std::make_shared<spdlog::logger>("welander", sink);
  log->set_pattern("[%l] %v");
  const char* env = std::getenv("WELANDER_LOG");
  const std::string level = env ? env : "quiet";
  if (level == "quiet") {
    log->set_level(spdlog::level::off);
  } else if (level == "info") {
    log->set_level(spdlog::level::info);
  } else if (level == "debug") {
    log->set_level(spdlog::level::debug);
  } else {
    throw UsageError{"WELANDER_LOG in {quiet, info, debug}", "unknown WELANDER_LOG level '" + level + "'"};
  }
  return log;
}

// Negative zero is written as 0.
std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v + 0.0);
  return buf;
}

// Short form for messages.
std::string brief(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v + 0.0);
  return buf;
}

// JSON has no infinities; an unbounded interval end is written as null.
json jnum(double v) { return std::isfinite(v) ? json(v + 0.0) : json(nullptr); }

json jvec(Vec2 v) { return json::array({jnum(v.x), jnum(v.y)}); }

double config_number(const json& cfg, const char* key) {
  const json& v = cfg.at(key);
  if (!v.is_number()) throw UsageError{std::string(key) + " is a number", std::string("config key '") + key + "' must be a number"};
  return v.get<double>();
}

template <class T>
void fill(std::optional<T>& slot, const json& cfg, const char* key) {
  if (slot || !cfg.contains(key)) return;
  if constexpr (std::is_same_v<T, double>) {
    slot = config_number(cfg, key);
  } else {
    if (!cfg.at(key).is_string()) throw UsageError{std::string(key) + " is a string", std::string("config key '") + key + "' must be a string"};
    slot = cfg.at(key).get<std::string>();
  }
}

Vec2 parse_point(const std::string& s) {
  std::istringstream in(s);
  Vec2 v;
  char comma = 0;
  if (!(in >> v.x >> comma >> v.y) || comma != ',' || !(in >> std::ws).eof()) {
    throw UsageError{"start is 'x,y'", "cannot parse start '" + s + "'"};
  }
  return v;
}

// "x_from,x_to,nx,y_from,y_to,ny"
std::vector<Vec2> parse_grid(const std::string& s) {
  std::vector<double> f;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      f.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError{"grid is 'x_from,x_to,nx,y_from,y_to,ny'", "cannot parse grid '" + s + "'"};
    }
  }
  if (f.size() != 6 || f[2] < 1 || f[5] < 1 || f[2] != std::floor(f[2]) || f[5] != std::floor(f[5])) {
    throw UsageError{"grid is 'x_from,x_to,nx,y_from,y_to,ny' with integer counts >= 1",
                     "malformed grid '" + s + "'"};
  }
  const int nx = static_cast<int>(f[2]), ny = static_cast<int>(f[5]);
  std::vector<Vec2> out;
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      const double x = nx == 1 ? f[0] : f[0] + (f[1] - f[0]) * i / (nx - 1);
      const double y = ny == 1 ? f[3] : f[3] + (f[4] - f[3]) * j / (ny - 1);
      out.push_back({x, y});
    }
  }
  return out;
}

Resolved resolve(Options o) {
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) throw UsageError{"config file readable", "cannot open config file '" + o.config + "'"};
    json cfg;
    try {
      cfg = json::parse(in);
    } catch (const json::parse_error& e) {
      throw UsageError{"config file is JSON", e.what()};
    }
    if (!cfg.is_object()) throw UsageError{"config file is a JSON object", "config root must be an object"};
    static const std::vector<std::string> known{
        "alpha", "beta", "epsilon", "k0", "k1", "x0", "y0", "horizon", "dt_sample", "smooth",
        "rk_step", "eps_from", "eps_to", "eps_step", "frame", "starts"};
    for (const auto& [key, value] : cfg.items()) {
      if (std::find(known.begin(), known.end(), key) == known.end()) {
        throw UsageError{"known config keys", "unknown config key '" + key + "'"};
      }
    }
    fill(o.alpha, cfg, "alpha");
    fill(o.beta, cfg, "beta");
    fill(o.epsilon, cfg, "epsilon");
    fill(o.k0, cfg, "k0");
    fill(o.k1, cfg, "k1");
    fill(o.x0, cfg, "x0");
    fill(o.y0, cfg, "y0");
    fill(o.horizon, cfg, "horizon");
    fill(o.dt_sample, cfg, "dt_sample");
    fill(o.smooth, cfg, "smooth");
    fill(o.rk_step, cfg, "rk_step");
    fill(o.eps_from, cfg, "eps_from");
    fill(o.eps_to, cfg, "eps_to");
    fill(o.eps_step, cfg, "eps_step");
    fill(o.frame, cfg, "frame");
    if (o.starts.empty() && o.grid.empty() && cfg.contains("starts")) {
      const json& s = cfg.at("starts");
      bool ok = s.is_array();
      for (const json& pt : s) ok = ok && pt.is_array() && pt.size() == 2 && pt[0].is_number() && pt[1].is_number();
      if (!ok) throw UsageError{"starts is a list of [x, y]", "config key 'starts' is malformed"};
      for (const json& pt : s) o.starts.push_back(num(pt[0].get<double>()) + "," + num(pt[1].get<double>()));
    }
  }
  // scan sweeps epsilon itself, so its grid start stands in for --epsilon.
  if (!o.epsilon && o.eps_from) o.epsilon = o.eps_from;
  for (auto [slot, name] : {std::pair{&o.alpha, "alpha"}, {&o.beta, "beta"}, {&o.epsilon, "epsilon"}}) {
    if (!*slot) throw UsageError{std::string(name) + " given", std::string("missing parameter --") + name};
  }
  Resolved r;
  r.params = {*o.alpha, *o.beta, *o.epsilon, o.k0.value_or(0.0), o.k1.value_or(1.0)};
  validate(r.params);
  const std::string frame = o.frame.value_or("canonical");
  if (frame != "canonical" && frame != "raw") {
    throw UsageError{"frame in {canonical, raw}", "unknown frame '" + frame + "'"};
  }
  r.canonical = frame == "canonical";
  r.x0 = o.x0.value_or(0.0);
  r.y0 = o.y0;
  r.horizon = o.horizon.value_or(50.0);
  r.dt_sample = o.dt_sample.value_or(0.01);
  r.smooth = o.smooth;
  r.rk_step = o.rk_step.value_or(1e-4);
  r.eps_from = o.eps_from;
  r.eps_to = o.eps_to;
  r.eps_step = o.eps_step;
  if (!(r.horizon > 0.0) || !std::isfinite(r.horizon)) throw UsageError{"horizon > 0", "horizon must be positive"};
  if (!(r.dt_sample > 0.0)) throw UsageError{"dt-sample > 0", "dt-sample must be positive"};
  if (!(r.rk_step > 0.0)) throw UsageError{"rk-step > 0", "rk-step must be positive"};
  if (r.smooth && !(*r.smooth > 0.0)) throw UsageError{"smoothing a > 0", "--smooth needs a > 0"};
  for (const std::string& s : o.starts) r.starts.push_back(parse_point(s));
  if (!o.grid.empty()) {
    for (Vec2 v : parse_grid(o.grid)) r.starts.push_back(v);
  }
  return r;
}

json params_json(const WelanderParams& p) {
  return {{"alpha", p.alpha}, {"beta", p.beta}, {"epsilon", p.epsilon}, {"k0", p.k0}, {"k1", p.k1}};
}

std::string no_cycle_reason(Regime r) {
  switch (r) {
    case Regime::DegenerateNoCycle: return "degenerate";
    case Regime::RealEquilibriumNoCycle: return "real_equilibrium";
    case Regime::VirtualNoCycle: return "epsilon_nonnegative";
    case Regime::UniqueStableCycle: break;
  }
  return "none";
}

// Writes text to path, or to out when path is empty.
void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UsageError{"output path writable", "cannot write '" + path + "'"};
  f << text;
}

PiecewiseAffineSystem frame_system(const Resolved& r) {
  return r.canonical ? canonical_system(r.params) : raw_system(r.params);
}

// ---------------------------------------------------------------- analyze

json cmd_analyze(const Resolved& r, spdlog::logger& log) {
  const WelanderParams& p = r.params;
  const Regime reg = regime(p);
  const Thresholds th = thresholds(p);
  json j;
  j["params"] = params_json(p);
  j["regime"] = std::string(to_string(reg));
  j["thresholds"] = {{"alpha_L", th.alpha_L}, {"alpha_R", th.alpha_R}, {"eps_star", th.eps_star}};
  j["canonical_constants"] = {{"a_left", a_left(p)}, {"a_right", a_right(p)}, {"b", b_offset(p)}};

  // No canonical frame exists when alpha (1 - beta) = 0; report raw then.
  const bool degenerate = reg == Regime::DegenerateNoCycle;
  const bool canonical = r.canonical && !degenerate;
  j["frame"] = canonical ? "canonical" : "raw";
  json notes = json::array();
  if (r.canonical && degenerate) notes.push_back("canonical frame undefined for alpha (1 - beta) = 0; raw frame reported");
  const PiecewiseAffineSystem pws = canonical ? canonical_system(p) : raw_system(p);
  log.debug("analyze in {} frame, regime {}", canonical ? "canonical" : "raw", to_string(reg));

  json zones = json::object();
  for (Side s : {Side::Left, Side::Right}) {
    const AffineSystem& z = pws.zone(s);
    const Spectrum sp = spectrum(z);
    json zone;
    zone["eigenvalues"] = {sp.lambda_i, sp.lambda_j};
    zone["node_type"] = std::string(to_string(node_type(z)));
    zone["equilibrium"] = {{"status", std::string(to_string(equilibrium_status(p, s)))},
                           {"location", jvec(equilibrium(z))}};
    zones[std::string(to_string(s))] = zone;
  }
  j["zones"] = zones;

  json folds = json::array();
  try {
    const std::vector<FoldPoint> fs = canonical ? fold_points(p) : fold_points(pws);
    for (const FoldPoint& f : fs) {
      folds.push_back({{"side", std::string(to_string(f.side))},
                       {"point", jvec(f.point)},
                       {"visibility", std::string(to_string(f.visibility))},
                       {"second_lie_derivative", f.second_lie_derivative}});
    }
  } catch (const Error& e) {
    notes.push_back(std::string("folds unavailable: ") + e.what());
  }
  j["folds"] = folds;

  const SigmaPartition part = partition_sigma(pws);
  json intervals = json::array();
  for (const SigmaInterval& iv : part.intervals) {
    intervals.push_back({{"lower", jnum(iv.lower)}, {"upper", jnum(iv.upper)}, {"class", std::string(to_string(iv.cls))}});
  }
  json tangencies = json::array();
  for (const SigmaTangency& t : part.tangencies) {
    tangencies.push_back({{"y", jnum(t.y)}, {"side", std::string(to_string(t.side))}});
  }
  j["sigma_partition"] = {{"intervals", intervals}, {"tangencies", tangencies}, {"degenerate", part.degenerate}};
  j["notes"] = notes;
  return j;
}

// ---------------------------------------------------------------- trajectories

struct Track {
  Trajectory traj;
  // Points of each segment, in the output frame and at the output density.
  std::vector<std::vector<Sample>> points;
};

Track run_track(const Resolved& r, Vec2 start, spdlog::logger& log) {
  Track tr;
  if (r.smooth) {
    // The smooth law is defined on the raw model; canonical output is its
    // image under the canonical homeomorphism.
    std::optional<CanonicalTransform> h;
    if (r.canonical) h = canonical_transform(r.params);
    const Vec2 raw_start = h ? h->invert(start) : start;
    log.info("smooth model, a = {}, rk step {}", *r.smooth, r.rk_step);
    tr.traj = oracle_rk4(Smooth{*r.smooth}, r.params, raw_start, r.horizon, r.rk_step);
    for (const Segment& seg : tr.traj.segments) {
      std::vector<Sample> pts;
      double next = std::ceil(seg.t_begin / r.dt_sample) * r.dt_sample;
      for (std::size_t k = 0; k < seg.samples.size(); ++k) {
        const Sample& s = seg.samples[k];
        const bool edge = k == 0 || k + 1 == seg.samples.size();
        if (!edge && s.t + 1e-12 < next) continue;
        pts.push_back({s.t, h ? h->apply(s.state) : s.state});
        while (next <= s.t + 1e-12) next += r.dt_sample;
      }
      tr.points.push_back(std::move(pts));
    }
    for (Event& e : tr.traj.events) {
      if (h) e.state = h->apply(e.state);
    }
    return tr;
  }
  const PiecewiseAffineSystem pws = frame_system(r);
  try {
    tr.traj = integrate(pws, start, r.horizon, r.dt_sample);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::EscapingStart) throw;
    const SigmaPartition part = partition_sigma(pws);
    for (const SigmaInterval& iv : part.intervals) {
      if (iv.cls == SigmaClass::Escaping && start.y >= iv.lower && start.y <= iv.upper) {
        throw Error(ErrorCode::EscapingStart, "start (" + brief(start.x) + ", " + brief(start.y) +
                                                  ") lies on the escaping segment [" + brief(iv.lower) +
                                                  ", " + brief(iv.upper) + "] of the switching line");
      }
    }
    throw;
  }
  log.info("integrated {} segments, {} events", tr.traj.segments.size(), tr.traj.events.size());
  for (const Segment& seg : tr.traj.segments) tr.points.push_back(seg.samples);
  return tr;
}

json events_json(const Resolved& r, const std::vector<std::pair<int, const Trajectory*>>& runs) {
  json tracks = json::array();
  for (const auto& [id, traj] : runs) {
    json evs = json::array();
    for (const Event& e : traj->events) {
      evs.push_back({{"t", e.t},
                     {"kind", std::string(to_string(e.kind))},
                     {"state", jvec(e.state)},
                     {"direction", e.direction},
                     {"note", e.note}});
    }
    tracks.push_back({{"start_id", id}, {"events", evs}, {"defect", traj->defect}, {"defect_message", traj->defect_message}});
  }
  json j;
  j["params"] = params_json(r.params);
  j["frame"] = r.canonical ? "canonical" : "raw";
  j["model"] = r.smooth ? "smooth" : "nonsmooth";
  j["smoothing"] = r.smooth ? json(*r.smooth) : json(nullptr);
  j["tracks"] = tracks;
  return j;
}

void append_csv(std::string& csv, const Track& tr, std::optional<int> start_id) {
  for (std::size_t k = 0; k < tr.points.size(); ++k) {
    const std::string kind(to_string(tr.traj.segments[k].kind));
    for (const Sample& s : tr.points[k]) {
      if (start_id) csv += std::to_string(*start_id) + ",";
      csv += num(s.t) + "," + num(s.state.x) + "," + num(s.state.y) + "," + kind + "," + std::to_string(k) + "\n";
    }
  }
}

json track_json(const Track& tr) {
  json segs = json::array();
  for (std::size_t k = 0; k < tr.points.size(); ++k) {
    json pts = json::array();
    for (const Sample& s : tr.points[k]) pts.push_back({s.t, s.state.x, s.state.y});
    segs.push_back({{"segment_index", k}, {"segment_kind", std::string(to_string(tr.traj.segments[k].kind))}, {"points", pts}});
  }
  return segs;
}

void check_defect(const Trajectory& t) {
  if (t.defect) throw Error(ErrorCode::IntegrationDefect, t.defect_message);
}

int cmd_trajectory(const Resolved& r, const Options& o, std::ostream& out, spdlog::logger& log) {
  if (!r.y0) throw UsageError{"y0 given", "trajectory needs --y0"};
  const Track tr = run_track(r, {r.x0, *r.y0}, log);
  check_defect(tr.traj);
  const json ev = events_json(r, {{0, &tr.traj}});
  if (*o.format == "csv") {
    std::string csv = "t,x,y,segment_kind,segment_index\n";
    append_csv(csv, tr, std::nullopt);
    emit(csv, o.out, out);
    const std::string events_path = !o.events.empty() ? o.events : (o.out.empty() ? "" : o.out + ".events.json");
    if (!events_path.empty()) emit(ev.dump(2) + "\n", events_path, out);
  } else {
    json j = ev;
    j["segments"] = track_json(tr);
    emit(j.dump(2) + "\n", o.out, out);
    if (!o.events.empty()) emit(ev.dump(2) + "\n", o.events, out);
  }
  return kOk;
}

int cmd_portrait(const Resolved& r, const Options& o, std::ostream& out, spdlog::logger& log) {
  if (r.starts.empty()) throw UsageError{"at least one start", "portrait needs --start or --grid"};
  std::vector<Track> tracks;
  for (Vec2 s : r.starts) {
    tracks.push_back(run_track(r, s, log));
    check_defect(tracks.back().traj);
  }
  std::vector<std::pair<int, const Trajectory*>> runs;
  for (std::size_t k = 0; k < tracks.size(); ++k) runs.push_back({static_cast<int>(k), &tracks[k].traj});
  const json ev = events_json(r, runs);
  if (*o.format == "csv") {
    std::string csv = "start_id,t,x,y,segment_kind,segment_index\n";
    for (std::size_t k = 0; k < tracks.size(); ++k) append_csv(csv, tracks[k], static_cast<int>(k));
    emit(csv, o.out, out);
    const std::string events_path = !o.events.empty() ? o.events : (o.out.empty() ? "" : o.out + ".events.json");
    if (!events_path.empty()) emit(ev.dump(2) + "\n", events_path, out);
  } else {
    json j = ev;
    json all = json::array();
    for (std::size_t k = 0; k < tracks.size(); ++k) {
      all.push_back({{"start_id", k}, {"start", jvec(r.starts[k])}, {"segments", track_json(tracks[k])}});
    }
    j["trajectories"] = all;
    emit(j.dump(2) + "\n", o.out, out);
    if (!o.events.empty()) emit(ev.dump(2) + "\n", o.events, out);
  }
  return kOk;
}

// ---------------------------------------------------------------- cycle / scan

json cycle_json(const CrossingCycle& c) {
  return {{"y_upper", c.y_upper}, {"y_lower", c.y_lower}, {"t_left", c.t_left},
          {"t_right", c.t_right}, {"period", c.period},   {"multiplier", c.multiplier}};
}

int cmd_cycle(const Resolved& r, const Options& o, std::ostream& out, spdlog::logger& log) {
  const WelanderParams& p = r.params;
  const Regime reg = regime(p);
  json j;
  j["params"] = params_json(p);
  j["regime"] = std::string(to_string(reg));
  j["frame"] = "canonical";
  const std::optional<CrossingCycle> c = find_cycle(p);
  if (!c) {
    j["status"] = "no_cycle";
    j["reason"] = no_cycle_reason(reg);
    emit(j.dump(2) + "\n", o.out, out);
    return kOk;
  }
  const AreaIdentity area = area_identity(p, *c);
  json cj = cycle_json(*c);
  cj["area_residual"] = area.residual;
  cj["area_scale"] = area.scale;
  cj["closure_residual"] = cycle_closure_residual(p, *c);
  j["status"] = "cycle";
  j["cycle"] = cj;
  log.info("cycle y_upper {} period {}", c->y_upper, c->period);
  if (!o.polyline.empty()) {
    const PiecewiseAffineSystem pws = canonical_system(p);
    Track tr;
    tr.traj = integrate(pws, {0.0, c->y_upper}, c->period, std::min(r.dt_sample, c->period / 64));
    check_defect(tr.traj);
    for (const Segment& seg : tr.traj.segments) tr.points.push_back(seg.samples);
    std::string csv = "t,x,y,segment_kind,segment_index\n";
    append_csv(csv, tr, std::nullopt);
    emit(csv, o.polyline, out);
    j["polyline"] = o.polyline;
  }
  emit(j.dump(2) + "\n", o.out, out);
  return kOk;
}

std::vector<double> eps_grid(const Resolved& r) {
  if (!r.eps_from || !r.eps_to) throw UsageError{"eps-from and eps-to given", "scan needs --eps-from and --eps-to"};
  const double from = *r.eps_from, to = *r.eps_to;
  if (!std::isfinite(from) || !std::isfinite(to) || to < from) {
    throw UsageError{"eps-from <= eps-to", "epsilon grid must be increasing"};
  }
  if (from == to) return {from};
  if (!r.eps_step || !(*r.eps_step > 0.0)) throw UsageError{"eps-step > 0", "epsilon grid needs a positive --eps-step"};
  const double steps = (to - from) / *r.eps_step;
  if (steps > 1e6) throw UsageError{"at most 1e6 grid points", "epsilon grid too large"};
  // Points are from + i step; an end within 1e-9 steps of a grid point counts.
  const long n = static_cast<long>(std::floor(steps + 1e-9));
  std::vector<double> grid;
  for (long i = 0; i <= n; ++i) grid.push_back(from + static_cast<double>(i) * *r.eps_step);
  return grid;
}

int cmd_scan(const Resolved& r, const Options& o, std::ostream& out, spdlog::logger& log) {
  const std::vector<double> grid = eps_grid(r);
  log.info("scanning {} epsilon values", grid.size());
  const std::vector<ScanRow> rows = scan_epsilon(r.params, grid);
  for (const ScanRow& row : rows) {
    if (row.status != "cycle" && row.status != "no_cycle") {
      throw Error(ErrorCode::BracketFailure, "scan point epsilon = " + brief(row.epsilon) + " failed: " + row.status);
    }
  }
  if (*o.format == "csv") {
    std::string csv = "epsilon,has_cycle,y_upper,y_lower,period,multiplier\n";
    for (const ScanRow& row : rows) {
      csv += num(row.epsilon) + "," + (row.has_cycle ? "true" : "false");
      if (row.cycle) {
        csv += "," + num(row.cycle->y_upper) + "," + num(row.cycle->y_lower) + "," + num(row.cycle->period) + "," +
               num(row.cycle->multiplier) + "\n";
      } else {
        csv += ",,,,\n";
      }
    }
    emit(csv, o.out, out);
  } else {
    json j;
    j["params"] = params_json(r.params);
    json arr = json::array();
    for (const ScanRow& row : rows) {
      arr.push_back({{"epsilon", row.epsilon}, {"has_cycle", row.has_cycle},
                     {"cycle", row.cycle ? cycle_json(*row.cycle) : json(nullptr)}});
    }
    j["rows"] = arr;
    emit(j.dump(2) + "\n", o.out, out);
  }
  return kOk;
}

// ---------------------------------------------------------------- errors

bool is_input_error(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidParameters:
    case ErrorCode::DegenerateAlpha:
    case ErrorCode::DegenerateBeta:
    case ErrorCode::NonpositiveSmoothing:
    case ErrorCode::EscapingStart:
    case ErrorCode::OutOfDomain:
    case ErrorCode::WrongRegime:
    case ErrorCode::NonzeroOffset:
    case ErrorCode::AsymptoteReached:
    case ErrorCode::TangencyDegenerate:
      return true;
    default:
      return false;
  }
}

std::string constraint_of(const Error& e) {
  switch (e.code()) {
    case ErrorCode::InvalidParameters: return e.what();
    case ErrorCode::DegenerateAlpha: return "alpha (1 - beta) != 0";
    case ErrorCode::DegenerateBeta: return "beta != 1";
    case ErrorCode::NonpositiveSmoothing: return "smoothing a > 0";
    case ErrorCode::EscapingStart: return "start not on an escaping segment";
    default: return std::string(to_string(e.code()));
  }
}

int report(std::ostream& err, int exit_code, const std::string& code, const std::string& constraint,
           const std::string& message) {
  const json j = {{"error", {{"code", code}, {"constraint", constraint}, {"message", message}}}};
  err << j.dump() << "\n";
  return exit_code;
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--alpha", o.alpha, "salinity-to-temperature forcing ratio");
  cmd->add_option("--beta", o.beta, "salinity relaxation rate");
  cmd->add_option("--epsilon", o.epsilon, "density threshold of the convection switch");
  cmd->add_option("--k0", o.k0, "weak convection rate (default 0)");
  cmd->add_option("--k1", o.k1, "strong convection rate (default 1)");
  cmd->add_option("--config", o.config, "JSON config file; flags override its keys");
  cmd->add_option("--out", o.out, "output path (default stdout)");
}

void add_frame(CLI::App* cmd, Options& o) {
  cmd->add_option("--frame", o.frame, "coordinate frame: canonical (default) or raw");
}

void add_integration(CLI::App* cmd, Options& o) {
  cmd->add_option("--horizon", o.horizon, "final time (default 50)");
  cmd->add_option("--dt-sample", o.dt_sample, "output sampling interval (default 0.01)");
  cmd->add_option("--smooth", o.smooth, "use the smooth arctan law with width a (RK4 oracle)");
  cmd->add_option("--rk-step", o.rk_step, "RK4 step for --smooth (default 1e-4)");
  cmd->add_option("--events", o.events, "events JSON path");
  cmd->add_option("--format", o.format, "csv (default) or json")->check(CLI::IsMember({"csv", "json"}));
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::shared_ptr<spdlog::logger> log;
  try {
    log = make_logger(err);
  } catch (const UsageError& u) {
    return report(err, kInvalidInput, "invalid_arguments", u.constraint, u.message);
  }

  CLI::App app{"Filippov analysis of the non-smooth Welander convection model", "welander"};
  app.set_version_flag("--version", WELANDER_VERSION);
  app.require_subcommand(1);
  Options o;

  CLI::App* analyze = app.add_subcommand("analyze", "thresholds, regime, equilibria, folds and the switching-line partition");
  add_common(analyze, o);
  add_frame(analyze, o);

  CLI::App* cycle = app.add_subcommand("cycle", "the crossing limit cycle, in the canonical frame");
  add_common(cycle, o);
  cycle->add_option("--polyline", o.polyline, "CSV path for a sampled cycle orbit");
  cycle->add_option("--dt-sample", o.dt_sample, "polyline sampling interval (default 0.01)");

  CLI::App* scan = app.add_subcommand("scan", "cycle data over an epsilon grid");
  add_common(scan, o);
  scan->add_option("--eps-from", o.eps_from, "first epsilon");
  scan->add_option("--eps-to", o.eps_to, "last epsilon");
  scan->add_option("--eps-step", o.eps_step, "epsilon step");
  scan->add_option("--format", o.format, "csv (default) or json")->check(CLI::IsMember({"csv", "json"}));

  CLI::App* trajectory = app.add_subcommand("trajectory", "one trajectory as plot-ready samples");
  add_common(trajectory, o);
  add_frame(trajectory, o);
  add_integration(trajectory, o);
  trajectory->add_option("--x0", o.x0, "initial x (default 0)");
  trajectory->add_option("--y0", o.y0, "initial y");

  CLI::App* portrait = app.add_subcommand("portrait", "several trajectories from a list or grid of starts");
  add_common(portrait, o);
  add_frame(portrait, o);
  add_integration(portrait, o);
  portrait->add_option("--start", o.starts, "start point 'x,y' (repeatable)");
  portrait->add_option("--grid", o.grid, "start grid 'x_from,x_to,nx,y_from,y_to,ny'");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << WELANDER_VERSION << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    return report(err, kInvalidInput, "invalid_arguments", "command line", e.what());
  }
  if (!o.format) o.format = "csv";

  try {
    const Resolved r = resolve(o);
    if (analyze->parsed()) {
      emit(cmd_analyze(r, *log).dump(2) + "\n", o.out, out);
      return kOk;
    }
    if (cycle->parsed()) return cmd_cycle(r, o, out, *log);
    if (scan->parsed()) return cmd_scan(r, o, out, *log);
    if (trajectory->parsed()) return cmd_trajectory(r, o, out, *log);
    return cmd_portrait(r, o, out, *log);
  } catch (const UsageError& u) {
    return report(err, kInvalidInput, "invalid_arguments", u.constraint, u.message);
  } catch (const Error& e) {
    const bool input = is_input_error(e.code());
    return report(err, input ? kInvalidInput : kInternalDefect, std::string(to_string(e.code())), constraint_of(e),
                  e.what());
  } catch (const std::exception& e) {
    return report(err, kInternalDefect, "internal", "none", e.what());
  }
}

}  // namespace welander::cli
