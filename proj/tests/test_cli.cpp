#include "support.hpp"

#include "ctmdp_reach/cli.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ctmdp;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;

  Json report() const { return Json::parse(out); }
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = run_cli(args, out, err);
  return Run{code, out.str(), err.str()};
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("ctmdp_cli_" + name)).string();
}

std::string write_reduction(const std::string& instance, const std::string& name) {
  const std::string path = temp_path(name);
  Run r = run({"reduce", testing::data_path(instance), "--out", path});
  REQUIRE(r.code == 0);
  return path;
}

Json without_timing(Json j) {
  j.erase("timing");
  return j;
}

}  // namespace

TEST_CASE("validate exit codes") {
  Run ok = run({"validate", testing::data_path("models/chain.json")});
  CHECK(ok.code == 0);
  CHECK(ok.report()["command"] == "validate");
  CHECK(ok.report()["exit_code"] == 0);
  CHECK(ok.report().contains("timing"));

  for (const char* bad : {"negative_rate", "good_not_absorbing", "foreign_action", "empty_actions"}) {
    CAPTURE(std::string(bad));
    Run r = run({"validate", testing::data_path(std::string("invalid/") + bad + ".json")});
    CHECK(r.code == 1);
    CHECK(r.report()["exit_code"] == 1);
  }
  CHECK(run({"validate", testing::data_path("invalid/malformed.json")}).code == 2);
  CHECK(run({"validate", testing::data_path("invalid/float_rate.json")}).code == 2);
  CHECK(run({"validate", temp_path("does_not_exist.json")}).code == 2);
}

TEST_CASE("argument errors exit with 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"solve", testing::data_path("models/chain.json"), "--bound", "1"}).code == 2);
  CHECK(run({"solve", testing::data_path("models/chain.json"), "--bound", "-1", "--thresholds", "0.5"}).code == 2);
  CHECK(run({"solve", testing::data_path("models/chain.json"), "--bound", "1", "--thresholds", "0.5,0.5,0.5"}).code ==
        2);
  CHECK(run({"solve", testing::data_path("invalid/negative_rate.json"), "--bound", "1", "--thresholds", "0.5"}).code ==
        2);
  CHECK(run({"simulate", testing::data_path("models/chain.json"), "--bound", "1", "--paths", "0"}).code == 2);
}

TEST_CASE("solve verdicts") {
  const std::string chain = testing::data_path("models/chain.json");
  Run yes = run({"solve", chain, "--bound", "1", "--thresholds", "1/2"});
  CHECK(yes.code == 0);
  CHECK(yes.report()["verdict"] == "Yes");
  Run no = run({"solve", chain, "--bound", "1", "--thresholds", "0.7"});
  CHECK(no.code == 1);
  CHECK(no.report()["verdict"] == "No");
  Run close = run({"solve", chain, "--bound", "1", "--thresholds", "0.6321205588"});
  CHECK(close.code == 3);
  CHECK(close.report()["verdict"] == "Inconclusive");
  Run loose = run({"solve", chain, "--bound", "1", "--thresholds", "0.6321205588", "--tol", "1e-12"});
  CHECK(loose.code == 0);
}

TEST_CASE("solve reports switches and honors the switch cap") {
  const std::string sine = write_reduction("skolem/sine.json", "sine.json");
  Run full = run({"solve", sine, "--bound", "4", "--thresholds", "0"});
  CHECK(full.code == 0);
  CHECK(full.report()["switches"].size() == 1);
  Run capped = run({"solve", sine, "--bound", "4", "--thresholds", "0", "--max-switches", "0"});
  CHECK(capped.code == 4);
  CHECK(capped.report()["exit_code"] == 4);
  CHECK(capped.err.find("MaxSwitchesExceeded") != std::string::npos);
}

TEST_CASE("config file settings sit between flags and defaults") {
  const std::string config = temp_path("config.json");
  {
    std::ofstream f(config);
    f << R"({"tol": "1e-12", "max_switches": 3})";
  }
  const std::string chain = testing::data_path("models/chain.json");
  Run from_file = run({"solve", chain, "--bound", "1", "--thresholds", "0.6321205588", "--config", config});
  CHECK(from_file.code == 0);
  CHECK(from_file.report()["config"]["tol"] == "1e-12");
  CHECK(from_file.report()["config"]["max_switches"] == 3);
  Run flag_wins =
      run({"solve", chain, "--bound", "1", "--thresholds", "0.6321205588", "--config", config, "--tol", "1e-9"});
  CHECK(flag_wins.code == 3);
  CHECK(flag_wins.report()["config"]["tol"] == "1e-9");
  Run defaults = run({"solve", chain, "--bound", "1", "--thresholds", "0.5"});
  CHECK(defaults.report()["config"]["tol"] == "1e-9");
  CHECK(defaults.report()["config"]["max_switches"] == 64);
}

TEST_CASE("check-stationary verdicts") {
  const std::string sine = write_reduction("skolem/sine.json", "sine_stat.json");
  Run ns = run({"check-stationary", sine, "--bound", "4"});
  CHECK(ns.code == 1);
  CHECK(ns.report()["verdict"] == "NotStationary");
  Run st = run({"check-stationary", sine, "--bound", "3"});
  CHECK(st.code == 0);
  CHECK(st.report()["verdict"] == "Stationary");
  const std::string damped = write_reduction("skolem/damped.json", "damped.json");
  Run inc = run({"check-stationary", damped, "--bound", "3/2"});
  CHECK(inc.code == 3);
  CHECK(inc.report()["verdict"] == "Inconclusive");
}

TEST_CASE("reduce reports and trivial instances") {
  Run r = run({"reduce", testing::data_path("skolem/sine.json"), "--verify", "100"});
  CHECK(r.code == 0);
  Json j = r.report();
  CHECK(j["gamma"] == 12);
  CHECK(j["lambda"] == 5);
  CHECK(j["lambda0"] == 1);
  CHECK(j["identity_error"].get<double>() < 1e-9);
  Run trivial = run({"reduce", testing::data_path("skolem_trivial.json")});
  CHECK(trivial.code == 5);
  CHECK(trivial.report()["exit_code"] == 5);
}

TEST_CASE("simulate reports") {
  Run r = run({"simulate", testing::data_path("models/chain.json"), "--bound", "1", "--paths", "2000", "--seed", "5"});
  CHECK(r.code == 0);
  Json states = r.report()["states"];
  REQUIRE(states.size() == 1);
  CHECK(states[0]["paths"] == 2000);
  CHECK(states[0]["within_band"] == true);
  Run fixed = run({"simulate", testing::data_path("models/choice.json"), "--bound", "1", "--policy", "stationary:slow,idle",
                   "--paths", "2000"});
  CHECK(fixed.code == 0);
}

TEST_CASE("reports are identical across runs apart from timing") {
  const std::string sine = write_reduction("skolem/sine.json", "sine_det.json");
  const std::string reduced = temp_path("reduced_det.json");
  const std::vector<std::vector<std::string>> commands = {
      {"validate", testing::data_path("models/switch.json")},
      {"solve", testing::data_path("models/switch.json"), "--bound", "1", "--thresholds", "0.5"},
      {"check-stationary", sine, "--bound", "4"},
      {"reduce", testing::data_path("skolem/cosine.json"), "--verify", "20", "--out", reduced},
      {"simulate", testing::data_path("models/switch.json"), "--bound", "1", "--paths", "5000", "--seed", "9"},
  };
  for (const auto& cmd : commands) {
    CAPTURE(cmd[0]);
    Run a = run(cmd);
    Run b = run(cmd);
    CHECK(a.code == b.code);
    CHECK(without_timing(a.report()) == without_timing(b.report()));
  }
}
