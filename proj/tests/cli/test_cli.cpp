#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = welander::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> worked_example(std::vector<std::string> cmd, const std::string& eps) {
  std::vector<std::string> v{cmd[0], "--alpha", "0.8", "--beta", "0.5", "--epsilon", eps};
  v.insert(v.end(), cmd.begin() + 1, cmd.end());
  return v;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    rows.push_back(cells);
  }
  return rows;
}

fs::path scratch_dir() {
  const fs::path d = fs::temp_directory_path() / "welander_cli_test";
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("analyze: worked example in the cycle regime") {
  const Result r = call(worked_example({"analyze"}, "-0.01"));
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["regime"] == "unique_stable_cycle");
  CHECK(j["frame"] == "canonical");
  REQUIRE(j["folds"].size() == 2);
  for (const json& f : j["folds"]) CHECK(f["visibility"] == "invisible");
  bool found = false;
  for (const json& iv : j["sigma_partition"]["intervals"]) {
    if (iv["class"] == "escaping") {
      found = true;
      CHECK(iv["lower"].get<double>() == 0.0);
      CHECK(iv["upper"].get<double>() == Catch::Approx(0.01).margin(1e-15));
    }
  }
  CHECK(found);
  CHECK(j["thresholds"]["alpha_L"].get<double>() == Catch::Approx(1.01));
  CHECK(j["zones"]["left"]["equilibrium"]["status"] == "virtual");
  CHECK(j["zones"]["right"]["eigenvalues"][1].get<double>() == Catch::Approx(-2.0));
}

TEST_CASE("analyze: degenerate and real-equilibrium regimes") {
  Result r = call({"analyze", "--alpha", "0.8", "--beta", "1", "--epsilon", "-0.01"});
  REQUIRE(r.code == 0);
  json j = json::parse(r.out);
  CHECK(j["regime"] == "degenerate_no_cycle");
  CHECK(j["frame"] == "raw");
  CHECK(j["sigma_partition"]["degenerate"] == true);

  r = call({"analyze", "--alpha", "2", "--beta", "0.5", "--epsilon", "-0.01"});
  REQUIRE(r.code == 0);
  j = json::parse(r.out);
  CHECK(j["regime"] == "real_equilibrium_no_cycle");
  CHECK(j["zones"]["left"]["equilibrium"]["status"] == "real");
}

TEST_CASE("invalid parameters give exit 2 and a structured error") {
  const Result r = call({"analyze", "--alpha", "0.8", "--beta", "-1", "--epsilon", "0"});
  CHECK(r.code == 2);
  CHECK(r.out.empty());
  const json e = json::parse(r.err);
  CHECK(e["error"]["code"] == "invalid_parameters");
  CHECK(e["error"]["constraint"] == "beta > 0");

  const Result k = call({"cycle", "--alpha", "0.8", "--beta", "0.5", "--epsilon", "0", "--k0", "2", "--k1", "1"});
  CHECK(k.code == 2);
  CHECK(json::parse(k.err)["error"]["constraint"] == "k1 > k0");

  const Result missing = call({"cycle", "--alpha", "0.8", "--beta", "0.5"});
  CHECK(missing.code == 2);
  CHECK(json::parse(missing.err)["error"]["constraint"] == "epsilon given");

  const Result unknown = call({"cycle", "--alpha", "0.8", "--bogus", "1"});
  CHECK(unknown.code == 2);
  CHECK(json::parse(unknown.err)["error"]["code"] == "invalid_arguments");
}

TEST_CASE("cycle report and its no-cycle reasons") {
  const Result r = call(worked_example({"cycle"}, "-0.01"));
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  REQUIRE(j["status"] == "cycle");
  const json& c = j["cycle"];
  CHECK(std::abs(c["area_residual"].get<double>()) < 1e-8);
  CHECK(c["closure_residual"].get<double>() < 1e-10);
  CHECK(c["multiplier"].get<double>() > 0.0);
  CHECK(c["multiplier"].get<double>() < 1.0);
  CHECK(c["period"].get<double>() == Catch::Approx(c["t_left"].get<double>() + c["t_right"].get<double>()));

  const std::pair<std::vector<std::string>, std::string> cases[] = {
      {worked_example({"cycle"}, "0"), "epsilon_nonnegative"},
      {{"cycle", "--alpha", "2", "--beta", "0.5", "--epsilon", "-0.01"}, "real_equilibrium"},
      {{"cycle", "--alpha", "0.8", "--beta", "1", "--epsilon", "-0.01"}, "degenerate"}};
  for (const auto& [args, reason] : cases) {
    const Result n = call(args);
    CHECK(n.code == 0);
    const json nj = json::parse(n.out);
    CHECK(nj["status"] == "no_cycle");
    CHECK(nj["reason"] == reason);
  }
}

TEST_CASE("cycle output is byte-identical across runs") {
  const Result a = call(worked_example({"cycle"}, "-0.02"));
  const Result b = call(worked_example({"cycle"}, "-0.02"));
  CHECK(a.out == b.out);
}

TEST_CASE("cycle polyline side file closes up") {
  const fs::path poly = scratch_dir() / "poly.csv";
  const Result r = call(worked_example({"cycle", "--polyline", poly.string()}, "-0.01"));
  REQUIRE(r.code == 0);
  const auto rows = csv_rows(slurp(poly));
  REQUIRE(rows.size() > 10);
  CHECK(rows[0] == std::vector<std::string>{"t", "x", "y", "segment_kind", "segment_index"});
  const double x0 = std::stod(rows[1][1]), y0 = std::stod(rows[1][2]);
  const double x1 = std::stod(rows.back()[1]), y1 = std::stod(rows.back()[2]);
  CHECK(std::hypot(x1 - x0, y1 - y0) < 1e-9);
}

TEST_CASE("scan: cycle rows exactly for negative epsilon") {
  const Result r = call(worked_example({"scan", "--eps-from", "-0.05", "--eps-to", "0.05", "--eps-step", "0.01"}, "0"));
  REQUIRE(r.code == 0);
  const auto rows = csv_rows(r.out);
  REQUIRE(rows.size() == 12);
  CHECK(rows[0] == std::vector<std::string>{"epsilon", "has_cycle", "y_upper", "y_lower", "period", "multiplier"});
  double prev_amp = INFINITY;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    REQUIRE(rows[k].size() == 6);
    const double eps = std::stod(rows[k][0]);
    CHECK((rows[k][1] == "true") == (eps < 0.0));
    if (eps < 0.0) {
      const double amp = std::stod(rows[k][2]) - std::stod(rows[k][3]);
      CHECK(amp < prev_amp);
      prev_amp = amp;
    } else {
      for (int c = 2; c < 6; ++c) CHECK(rows[k][c].empty());
    }
  }
}

TEST_CASE("scan: single epsilon and malformed grids") {
  const Result one = call(worked_example({"scan", "--eps-from", "-0.01", "--eps-to", "-0.01"}, "0"));
  REQUIRE(one.code == 0);
  CHECK(csv_rows(one.out).size() == 2);
  CHECK(call(worked_example({"scan", "--eps-from", "0.01", "--eps-to", "-0.01", "--eps-step", "0.01"}, "0")).code == 2);
  CHECK(call(worked_example({"scan", "--eps-from", "-0.01", "--eps-to", "0.01", "--eps-step", "0"}, "0")).code == 2);
  CHECK(call(worked_example({"scan", "--eps-from", "-0.01"}, "0")).code == 2);
}

TEST_CASE("scan does not need --epsilon") {
  const Result bare = call({"scan", "--alpha", "0.8", "--beta", "0.5", "--eps-from", "-0.03", "--eps-to", "0.01",
                            "--eps-step", "0.01"});
  REQUIRE(bare.code == 0);
  const Result with = call(worked_example({"scan", "--eps-from", "-0.03", "--eps-to", "0.01", "--eps-step", "0.01"}, "0.5"));
  CHECK(bare.out == with.out);
  CHECK(call({"analyze", "--alpha", "0.8", "--beta", "0.5"}).code == 2);
}

TEST_CASE("scan json rows follow the grid order") {
  const Result r = call(worked_example({"scan", "--eps-from", "-0.03", "--eps-to", "0.01", "--eps-step", "0.01", "--format", "json"}, "0"));
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  REQUIRE(j["rows"].size() == 5);
  for (std::size_t k = 1; k < 5; ++k) {
    CHECK(j["rows"][k]["epsilon"].get<double>() > j["rows"][k - 1]["epsilon"].get<double>());
  }
  CHECK(j["rows"][0]["has_cycle"] == true);
  CHECK(j["rows"][4]["cycle"].is_null());
}

TEST_CASE("trajectory: segments alternate on the cycle") {
  const Result r = call(worked_example({"trajectory", "--y0", "0.2", "--horizon", "60"}, "-0.01"));
  REQUIRE(r.code == 0);
  const auto rows = csv_rows(r.out);
  REQUIRE(rows[0] == std::vector<std::string>{"t", "x", "y", "segment_kind", "segment_index"});
  std::vector<std::string> kinds;
  int last = -1;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    REQUIRE(rows[k].size() == 5);
    const int idx = std::stoi(rows[k][4]);
    if (idx != last) kinds.push_back(rows[k][3]);
    last = idx;
  }
  REQUIRE(kinds.size() > 8);
  for (std::size_t k = 3; k < kinds.size(); ++k) {
    CHECK(kinds[k] != "sliding");
    CHECK(kinds[k] != kinds[k - 1]);
  }
}

TEST_CASE("trajectory: positive epsilon slides") {
  const Result r = call(worked_example({"trajectory", "--y0", "0.2", "--horizon", "40", "--format", "json"}, "0.01"));
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  bool slid = false;
  for (const json& s : j["segments"]) slid = slid || s["segment_kind"] == "sliding";
  CHECK(slid);
  CHECK(j["tracks"][0]["defect"] == false);
}

TEST_CASE("trajectory: escaping start is rejected naming the segment") {
  const Result r = call(worked_example({"trajectory", "--y0", "0.005"}, "-0.01"));
  CHECK(r.code == 2);
  const json e = json::parse(r.err);
  CHECK(e["error"]["code"] == "escaping_start");
  CHECK(e["error"]["message"].get<std::string>().find("escaping segment [0, 0.01") != std::string::npos);
}

TEST_CASE("trajectory: events companion file next to --out") {
  const fs::path out = scratch_dir() / "traj.csv";
  fs::remove(out.string() + ".events.json");
  const Result r = call(worked_example({"trajectory", "--y0", "0.2", "--horizon", "10", "--out", out.string()}, "-0.01"));
  REQUIRE(r.code == 0);
  CHECK(r.out.empty());
  const json ev = json::parse(slurp(out.string() + ".events.json"));
  CHECK(ev["model"] == "nonsmooth");
  CHECK(ev["tracks"][0]["events"].back()["kind"] == "time_limit");
}

TEST_CASE("trajectory: smooth Welander run settles on a closed loop") {
  const fs::path ev = scratch_dir() / "smooth_events.json";
  const Result r = call({"trajectory", "--alpha", "0.8", "--beta", "0.5", "--epsilon", "-0.0333333333333333333",
                         "--smooth", "0.002", "--frame", "raw", "--y0", "0.3", "--horizon", "300",
                         "--dt-sample", "0.1", "--events", ev.string()});
  REQUIRE(r.code == 0);
  const json j = json::parse(slurp(ev));
  CHECK(j["model"] == "smooth");
  std::vector<double> up;
  for (const json& e : j["tracks"][0]["events"]) {
    if (e["kind"] == "cross_sigma" && e["direction"] == -1) up.push_back(e["state"][1].get<double>());
  }
  REQUIRE(up.size() >= 12);
  CHECK(std::abs(up[11] - up[10]) < 1e-3);
}

TEST_CASE("portrait: grid of starts with a start_id column") {
  const Result r = call(worked_example({"portrait", "--grid", "-0.1,0.1,2,0.2,0.6,2", "--horizon", "5", "--frame", "raw"}, "-0.01"));
  REQUIRE(r.code == 0);
  const auto rows = csv_rows(r.out);
  REQUIRE(rows[0].size() == 6);
  CHECK(rows[0][0] == "start_id");
  std::vector<int> ids;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    REQUIRE(rows[k].size() == 6);
    const int id = std::stoi(rows[k][0]);
    if (ids.empty() || ids.back() != id) ids.push_back(id);
  }
  CHECK(ids == std::vector<int>{0, 1, 2, 3});
  CHECK(call(worked_example({"portrait"}, "-0.01")).code == 2);
  CHECK(call(worked_example({"portrait", "--start", "0.1;0.2"}, "-0.01")).code == 2);
}

TEST_CASE("config file with flag overrides") {
  const fs::path cfg = scratch_dir() / "cfg.json";
  std::ofstream(cfg) << R"({"alpha": 0.8, "beta": 0.5, "epsilon": 0.02, "k0": 0, "k1": 1})";
  Result r = call({"cycle", "--config", cfg.string()});
  REQUIRE(r.code == 0);
  CHECK(json::parse(r.out)["status"] == "no_cycle");
  r = call({"cycle", "--config", cfg.string(), "--epsilon", "-0.02"});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["status"] == "cycle");
  CHECK(j["params"]["epsilon"].get<double>() == -0.02);

  std::ofstream(cfg) << R"({"alpha": 0.8, "beta": 0.5, "epsilon": 0.02, "gamma": 1})";
  r = call({"cycle", "--config", cfg.string()});
  CHECK(r.code == 2);
  CHECK(json::parse(r.err)["error"]["constraint"] == "known config keys");
}

TEST_CASE("WELANDER_LOG levels") {
  ::setenv("WELANDER_LOG", "info", 1);
  Result r = call(worked_example({"cycle"}, "-0.01"));
  CHECK(r.code == 0);
  CHECK(r.err.find("[info]") != std::string::npos);
  ::setenv("WELANDER_LOG", "loud", 1);
  r = call(worked_example({"cycle"}, "-0.01"));
  CHECK(r.code == 2);
  ::unsetenv("WELANDER_LOG");
  r = call(worked_example({"cycle"}, "-0.01"));
  CHECK(r.err.empty());
}
