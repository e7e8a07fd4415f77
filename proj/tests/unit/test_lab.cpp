#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "oscgap/error.hpp"
#include "oscgap/lab.hpp"

using namespace oscgap;
using namespace oscgap::lab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("oscgap-test-lab-" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

std::string load_error(const nlohmann::json& j) {
  try {
    scenario_from_json(j);
  } catch (const ScenarioError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("scenarios: built-ins, validation and canonical hashing") {
  CHECK(builtin_names() == std::vector<std::string>{"AL2", "AL2_V0", "NR12"});
  const Scenario al2 = load_scenario("AL2");
  CHECK(al2.omega == std::vector<std::string>{"1", "1"});
  CHECK(al2.V.size() == 2);
  CHECK(load_scenario("AL2_V0").V.is_zero());
  CHECK_THROWS_AS(load_scenario("nope"), ScenarioError);

  for (const auto& n : builtin_names()) {
    const Scenario s = builtin(n);
    CHECK(scenario_hash(scenario_from_json(to_json(s))) == scenario_hash(s));
    const fs::path file = fs::path(OSCGAP_SOURCE_DIR) / "scenarios" / (n + ".json");
    REQUIRE(fs::exists(file));
    CHECK(scenario_hash(load_scenario(file.string())) == scenario_hash(s));
  }
  CHECK(scenario_hash(builtin("AL2")) != scenario_hash(builtin("AL2_V0")));

  nlohmann::json j = to_json(al2);
  j["A"] = nlohmann::json::array({{{"alpha", {1, 0}}, {"beta", {0, 0}}, {"re", "0"}, {"im", "1"}}});
  CHECK(load_error(j).find("scenario.A") != std::string::npos);
  j = to_json(al2);
  j["bogus"] = 1;
  CHECK(load_error(j) == "scenario.bogus: unknown field");
  j = to_json(al2);
  j["hbar_list"] = {0.05, 0.1};
  CHECK(load_error(j).find("scenario.hbar_list") != std::string::npos);
  j = to_json(al2);
  j["basis"]["kind"] = "sphere";
  CHECK(load_error(j).find("scenario.basis.kind") != std::string::npos);
  j = to_json(al2);
  j["A"][0]["alpha"] = {1};
  CHECK(load_error(j).find("scenario.A[0].alpha") != std::string::npos);
  j = to_json(al2);
  j["A"][0]["re"] = "1/2";
  CHECK(load_error(j).empty());
  j["A"][0]["re"] = "0.25";
  CHECK(load_error(j).empty());
  j["A"][0]["re"] = "x";
  CHECK(load_error(j).find("cannot parse") != std::string::npos);
}

TEST_CASE("dump_stable formats floats and sorts keys") {
  nlohmann::json j{{"b", 0.5}, {"a", {1, 2.0}}, {"c", "s"}};
  CHECK(dump_stable(j) == "{\n  \"a\": [\n    1,\n    2.000000000000e+00\n  ],\n  \"b\": 5.000000000000e-01,\n  \"c\": \"s\"\n}\n");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("pipeline on AL2_V0: closed-form gap ratio, caching and byte-stable emission") {
  const fs::path cache = scratch("cache-v0");
  RunOptions opts;
  opts.cache_dir = cache;
  const Scenario s = builtin("AL2_V0");
  RunManifest m = run_pipeline(s, opts);
  REQUIRE(m.failure() == nullptr);
  CHECK(m.stage("resolvent")->status == "skipped");
  CHECK(m.cache_hits() == 0);

  const auto& avg = m.stage("averaging")->output;
  CHECK(avg["A_resonant"].get<bool>());
  CHECK(avg["V_resonant"].get<bool>());
  CHECK(m.stage("control")->output["invariance_flag"].get<bool>());
  CHECK_FALSE(m.stage("control")->output["satisfied"].get<bool>());
  for (const auto& row : m.stage("gap")->output["gap_table"]["rows"])
    CHECK(row["min_beta_over_delta"].get<double>() == doctest::Approx(0.5).epsilon(1e-10));

  RunManifest again = run_pipeline(s, opts);
  CHECK(again.cache_hits() == 7);
  for (std::size_t i = 0; i < m.stages.size(); ++i) CHECK(again.stages[i].digest == m.stages[i].digest);

  const fs::path out1 = scratch("out1"), out2 = scratch("out2");
  emit(m, out1, "csv");
  emit(again, out2, "csv");
  for (const char* f : {"spectrum.csv", "control.csv", "normalform.csv", "resolvent.csv", "summary.json", "manifest.json"})
    CHECK(slurp(out1 / f) == slurp(out2 / f));
  CHECK(verify_manifest(out1));

  std::size_t eigen_count = 0;
  for (const auto& r : m.stage("spectra")->output["records"]) eigen_count += r["entries"].size();
  std::istringstream csv(slurp(out1 / "spectrum.csv"));
  std::string line;
  std::size_t lines = 0;
  while (std::getline(csv, line)) ++lines;
  CHECK(lines == eigen_count + 1);

  const auto sum = nlohmann::json::parse(slurp(out1 / "summary.json"));
  for (const auto& row : sum["gap_table"]["rows"])
    CHECK(row["min_beta_over_delta"].get<double>() == doctest::Approx(0.5).epsilon(1e-10));

  {
    std::ofstream f(out1 / "control.csv", std::ios::app);
    f << "tampered\n";
  }
  std::string problem;
  CHECK_FALSE(verify_manifest(out1, &problem));
  CHECK(problem.find("control.csv") != std::string::npos);

  const fs::path outj = scratch("outj");
  emit(m, outj, "json");
  CHECK(fs::exists(outj / "spectrum.json"));
  CHECK(verify_manifest(outj));
  CHECK_THROWS_AS(emit(m, outj, "xml"), ScenarioError);
}

TEST_CASE("pipeline on AL2 completes every stage") {
  RunOptions opts;
  opts.use_cache = false;
  opts.threads = 2;
  RunManifest m = run_pipeline(builtin("AL2"), opts);
  for (const auto& st : m.stages) {
    INFO(st.name << ": " << st.error);
    CHECK(st.status == "computed");
  }
  CHECK(m.complete());
  const auto& ctl = m.stage("control")->output;
  CHECK(ctl["satisfied"].get<bool>());
  CHECK(ctl["eps0"].get<double>() > 0.0);
  CHECK(m.stage("gap")->output["strip"]["passed"].get<bool>());
  CHECK(m.stage("damping")->output["positive"].get<bool>());
  CHECK(m.stage("resolvent")->output["scans"][0]["finite"].get<bool>());
  CHECK_FALSE(m.stage("normalform")->output["fit_defined"].get<bool>());
  const fs::path out = scratch("al2");
  emit(m, out, "csv");
  CHECK(verify_manifest(out));
}

TEST_CASE("stage failure skips later stages; cached and fresh outputs agree") {
  Scenario s = builtin("AL2");
  s.name = "irrational";
  s.omega = {"1.0", "1.4142135623730951"};
  RunOptions only;
  only.use_cache = false;
  only.only = {"cohomology", "normalform"};
  RunManifest m = run_pipeline(s, only);
  REQUIRE(m.failure() != nullptr);
  CHECK(m.failure()->name == "cohomology");
  CHECK(m.stage("normalform")->status == "skipped");
  CHECK(m.stage("normalform")->error.find("cohomology") != std::string::npos);
  CHECK(m.stage("averaging")->status == "computed");
  CHECK_FALSE(m.complete());

  const fs::path cache = scratch("cache-spot");
  for (const auto& n : builtin_names()) {
    RunOptions cached;
    cached.cache_dir = cache;
    cached.only = {"control", "cohomology"};
    run_pipeline(builtin(n), cached);
    RunManifest hit = run_pipeline(builtin(n), cached);
    RunOptions fresh = cached;
    fresh.use_cache = false;
    RunManifest cold = run_pipeline(builtin(n), fresh);
    CHECK(hit.cache_hits() == 3);
    for (std::size_t i = 0; i < hit.stages.size(); ++i) CHECK(hit.stages[i].digest == cold.stages[i].digest);
  }
  CHECK_THROWS_AS(
      [] {
        RunOptions bad;
        bad.only = {"nonsense"};
        run_pipeline(builtin("AL2"), bad);
      }(),
      ScenarioError);
}
