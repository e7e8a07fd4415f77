#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "oscgap/error.hpp"
#include "oscgap/lab.hpp"
#include "oscgap/normalform.hpp"
#include "oscgap/quantize.hpp"

namespace fs = std::filesystem;
using namespace oscgap;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kScenarioError = 2;
constexpr int kNumericError = 3;

struct Common {
  std::string scenario;
  std::vector<double> hbar;
  std::string delta_rule;
  std::optional<double> window;
  std::string out;
  std::string format = "csv";
  bool no_cache = false;
  int threads = 1;
};

void add_common(CLI::App* cmd, Common& c, bool with_scenario = true) {
  if (with_scenario) cmd->add_option("--scenario", c.scenario, "Scenario file or built-in name")->required();
  cmd->add_option("--hbar", c.hbar, "Override the hbar list (strictly decreasing)");
  cmd->add_option("--delta-rule", c.delta_rule, "hbar | hbar_3_2 | eps_hbar2");
  cmd->add_option("--window", c.window, "Half-width of the alpha window around 1");
  cmd->add_option("--out", c.out, "Output directory (default out/<scenario name>)");
  cmd->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_flag("--no-cache", c.no_cache, "Ignore and do not write the stage cache");
  cmd->add_option("--threads", c.threads, "Worker threads for hbar sweeps")->check(CLI::PositiveNumber);
}

lab::Scenario prepare(const Common& c) {
  lab::Scenario s = lab::load_scenario(c.scenario);
  json j = lab::to_json(s);
  if (!c.hbar.empty()) j["hbar_list"] = c.hbar;
  if (!c.delta_rule.empty()) j["delta_rule"] = c.delta_rule;
  if (c.window) j["alpha_window"] = *c.window;
  return lab::scenario_from_json(j);
}

lab::RunOptions options(const Common& c, std::vector<std::string> only = {}) {
  lab::RunOptions o;
  o.use_cache = !c.no_cache;
  o.threads = c.threads;
  o.only = std::move(only);
  return o;
}

fs::path out_dir(const Common& c, const lab::Scenario& s) { return c.out.empty() ? fs::path("out") / s.name : fs::path(c.out); }

int report_stages(const lab::RunManifest& m) {
  for (const auto& st : m.stages) {
    std::printf("  %-11s %-9s", st.name.c_str(), st.status.c_str());
    if (!st.error.empty() && st.status != "skipped") std::printf(" %s", st.error.c_str());
    std::printf("\n");
  }
  return m.failure() ? kNumericError : kOk;
}

void print_gap(const json& gap) {
  std::printf("gap table (%s): %s\n", gap["delta_rule"].get<std::string>().c_str(),
              gap["verdict"].get<std::string>().c_str());
  for (const auto& r : gap["rows"])
    std::printf("  hbar=%-8g delta=%-10.4e min_beta=%-12.6e ratio=%-10.6f count=%d\n", r["hbar"].get<double>(),
                r["delta"].get<double>(), r["min_beta"].get<double>(), r["min_beta_over_delta"].get<double>(),
                r["count"].get<int>());
}

int cmd_run(const Common& c, std::vector<std::string> only) {
  const lab::Scenario s = prepare(c);
  lab::RunManifest m = lab::run_pipeline(s, options(c, std::move(only)));
  std::printf("scenario %s  hash %s\n", s.name.c_str(), m.scenario_hash.c_str());
  const int code = report_stages(m);
  const fs::path dir = out_dir(c, s);
  lab::emit(m, dir, c.format);
  const json sum = lab::summary(m);
  if (!sum["control"].is_null())
    std::printf("control: %s  invariance=%s  eps0=%.6e  strong: %s\n",
                sum["control"]["satisfied"].get<bool>() ? "satisfied" : "not satisfied",
                sum["control"]["invariance_flag"].get<bool>() ? "yes" : "no", sum["control"]["eps0"].get<double>(),
                sum["control"]["strong_relation"].get<std::string>().c_str());
  if (!sum["gap_table"].is_null()) {
    print_gap(sum["gap_table"]);
    std::printf("strip: %s (%d checked, %d violations)\n", sum["strip"]["passed"].get<bool>() ? "passed" : "FAILED",
                sum["strip"]["checked"].get<int>(), sum["strip"]["violations"].get<int>());
  }
  if (!sum["normalform"].is_null()) {
    if (sum["normalform"]["fit_defined"].get<bool>())
      std::printf("conjugation residual power: %.4f\n", sum["normalform"]["fitted_power"].get<double>());
    else
      std::printf("conjugation residual: negligible at every hbar (fit undefined)\n");
  }
  if (!sum["damping"].is_null())
    std::printf("damping certificate: %.6e at eps=%g (positive=%s)\n", sum["damping"]["certificate"].get<double>(),
                sum["damping"]["best_eps"].get<double>(), sum["damping"]["positive"].get<bool>() ? "yes" : "no");
  std::printf("wrote %s\n", dir.string().c_str());
  return code;
}

int cmd_resolvent(const Common& c) {
  lab::Scenario s = prepare(c);
  json j = lab::to_json(s);
  if (!c.hbar.empty()) j["resolvent"]["hbar"] = c.hbar;
  j["resolvent"]["enabled"] = true;
  s = lab::scenario_from_json(j);
  lab::RunManifest m = lab::run_pipeline(s, options(c, {"resolvent"}));
  const int code = report_stages(m);
  if (const auto* st = m.stage("resolvent"); st && !m.failure())
    for (const auto& sc : st->output["scans"])
      std::printf("hbar=%g delta=%g sup 1/sigma_min=%.6e eps_fit=%.6e finite=%s\n", sc["hbar"].get<double>(),
                  sc["delta"].get<double>(), sc["sup_inv"].get<double>(), sc["eps_fit"].get<double>(),
                  sc["finite"].get<bool>() ? "yes" : "no");
  lab::emit(m, out_dir(c, s), c.format);
  return code;
}

int cmd_egorov(double hbar, const std::string& out) {
  json doc;
  auto basis = make_basis(FockBasis::degree_cap(1, hbar, 20, {1.0}));
  const WickSymbol n = WickSymbol::monomial({1}, {1}, 1.0);
  const WickSymbol G = n * n, a = WickSymbol::zeta(1, 0);
  const auto r6 = egorov_check(G, a, 0.2, hbar, basis, 6);
  const auto r12 = egorov_check(G, a, 0.2, hbar, basis, 12);
  std::printf("matrix vs series, G=|z|^4, a=z, t=0.2: J=6 %.3e  J=12 %.3e  (%s)\n", r6.discrepancy, r12.discrepancy,
              r12.discrepancy < r6.discrepancy ? "decreasing" : "NOT decreasing");
  doc["matrix"] = {{"J6", r6.discrepancy}, {"J12", r12.discrepancy}};

  PlaneWaveSymbol Gp(1), ap(1);
  Gp.add_term({1.0, 0.0}, 0.05);
  Gp.add_term({-1.0, 0.0}, 0.05);
  ap.add_term({0.0, 1.0}, 0.5);
  ap.add_term({0.0, -1.0}, 0.5);
  std::vector<double> ts;
  for (int k = 1; k <= 10; ++k) ts.push_back(0.01 * k);
  const auto items = egorov_items(Gp, ap, ts, hbar, 14, {1.0, 0.5});
  json rows = json::array();
  for (const auto& r : items.rows) {
    std::printf("  t=%.2f item2 %.4e item3 %.4e\n", r.t, r.item2_ratio, r.item3_ratio);
    rows.push_back({{"t", r.t}, {"item2", r.item2_ratio}, {"item3", r.item3_ratio}});
  }
  std::printf("item ratios bounded: %s (max %.4e, %.4e)\n", items.bounded ? "yes" : "no", items.max_item2,
              items.max_item3);
  doc["items"] = rows;

  const ExactWickSymbol ca = ExactWickSymbol::monomial({2}, {1}, GaussRational(1));
  const ExactWickSymbol cb = ExactWickSymbol::monomial({1}, {2}, GaussRational(1));
  const auto slope = commutator_vs_poisson_slope(ca, cb, {0.1, 0.05, 0.025});
  std::printf("commutator vs Poisson slope (z^2 zbar, z zbar^2): %.4f\n", slope.slope);
  doc["slope"] = slope.slope;
  if (!out.empty()) {
    fs::create_directories(out);
    std::FILE* f = std::fopen((fs::path(out) / "egorov.json").c_str(), "w");
    if (!f) throw Error("cannot write " + (fs::path(out) / "egorov.json").string());
    const std::string text = lab::dump_stable(doc);
    std::fwrite(text.data(), 1, text.size(), f);
    std::fclose(f);
  }
  return items.bounded && r12.discrepancy < r6.discrepancy ? kOk : kNumericError;
}

int cmd_list() {
  for (const auto& name : lab::builtin_names()) {
    const auto s = lab::builtin(name);
    std::string w;
    for (const auto& x : s.omega) w += (w.empty() ? "" : ",") + x;
    std::printf("%-7s omega=(%s)  terms A=%zu V=%zu  hash %s\n", name.c_str(), w.c_str(), s.A.size(), s.V.size(),
                lab::scenario_hash(s).substr(0, 16).c_str());
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"oscgap: spectral gaps of damped perturbed oscillators"};
  app.require_subcommand(1);

  Common run_c, sweep_c, ctl_c, res_c;
  auto* run = app.add_subcommand("run", "Run every pipeline stage and emit tables");
  add_common(run, run_c);
  auto* sweep = app.add_subcommand("sweep", "Spectra over the hbar list with gap and strip statistics");
  add_common(sweep, sweep_c);
  auto* ctl = app.add_subcommand("check-control", "Geometric control check of the averaged symbols");
  add_common(ctl, ctl_c);
  auto* res = app.add_subcommand("resolvent-scan", "Resolvent norm along alpha0 + i hbar b, b in [0, delta]");
  add_common(res, res_c);
  double eg_hbar = 0.1;
  std::string eg_out;
  auto* eg = app.add_subcommand("egorov-verify", "Analytic Egorov and commutator checks on fixed instances");
  eg->add_option("--hbar", eg_hbar, "Semiclassical parameter")->check(CLI::PositiveNumber);
  eg->add_option("--out", eg_out, "Directory for egorov.json");
  auto* list = app.add_subcommand("list-scenarios", "Built-in scenarios");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(run_c, {});
    if (*sweep) return cmd_run(sweep_c, {"spectra", "gap"});
    if (*ctl) return cmd_run(ctl_c, {"control"});
    if (*res) return cmd_resolvent(res_c);
    if (*eg) return cmd_egorov(eg_hbar, eg_out);
    if (*list) return cmd_list();
  } catch (const ScenarioError& e) {
    std::fprintf(stderr, "scenario error: %s\n", e.what());
    return kScenarioError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kNumericError;
  }
  return kOk;
}
