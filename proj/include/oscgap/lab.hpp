#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "oscgap/control.hpp"
#include "oscgap/frequencies.hpp"
#include "oscgap/wick.hpp"

namespace oscgap::lab {

inline constexpr const char* kToolVersion = "0.1.0";

struct BasisConfig {
  /// "energy_window" (E, W) or "degree_cap" (N).
  std::string kind = "energy_window";
  double E = 1.0;
  double W = 0.25;
  int N = 0;
};

struct Scenario {
  std::string name;
  /// Entries as "p/q", integers or decimals; decimals make the vector approximate.
  std::vector<std::string> omega;
  ExactWickSymbol A{1};
  ExactWickSymbol V{1};
  std::string delta_rule = "hbar";
  double delta_eps = 1.0;
  std::vector<double> hbar_list{0.1, 0.05, 0.025};
  BasisConfig basis;
  double alpha_window = 0.1;
  double strip_tol = 0.05;
  double edge_tol = 1e-6;
  ControlOptions control;
  std::vector<double> normalform_hbar{0.2, 0.1, 0.05};
  double normalform_E_max = 1.0;
  double damping_t0 = 0.3;
  int damping_J = 8;
  std::vector<double> damping_eps{0.02, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3};
  int damping_n_action = 41;
  int damping_n_angle = 16;
  bool resolvent = false;
  std::vector<double> resolvent_hbar{0.05};
  double resolvent_alpha0 = 1.0;
  int resolvent_nb = 21;
  unsigned seed = 0;

  FrequencyVector frequencies() const;
  std::vector<double> omega_values() const;
};

/// Canonical serialization: every field explicit, coefficients as exact rational strings.
nlohmann::json to_json(const Scenario& s);
/// Validates and fills defaults; throws ScenarioError with the offending field path.
Scenario scenario_from_json(const nlohmann::json& j);
/// SHA-256 hex digest of the canonical serialization.
std::string scenario_hash(const Scenario& s);

/// File path or built-in name (AL2, AL2_V0, NR12).
Scenario load_scenario(const std::string& path_or_name);
std::vector<std::string> builtin_names();
Scenario builtin(const std::string& name);

std::string sha256_hex(const std::string& data);
/// Byte-stable JSON text: sorted keys, floats as %.12e, two-space indent.
std::string dump_stable(const nlohmann::json& j);

struct StageRecord {
  std::string name;
  /// "computed", "cached", "failed" or "skipped".
  std::string status;
  std::string error;
  /// SHA-256 of the stage output's canonical dump.
  std::string digest;
  double seconds = 0.0;
  nlohmann::json output;
};

struct RunManifest {
  std::string scenario_name;
  std::string scenario_hash;
  std::string tool_version = kToolVersion;
  std::string started;
  std::string finished;
  std::vector<StageRecord> stages;
  /// Emitted files and their digests (filled by emit).
  std::vector<std::pair<std::string, std::string>> files;

  bool complete() const;
  int cache_hits() const;
  const StageRecord* stage(const std::string& name) const;
  /// First failed stage, if any.
  const StageRecord* failure() const;
};

inline const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names{"averaging", "control", "cohomology", "spectra",
                                              "gap",       "normalform", "damping", "resolvent"};
  return names;
}

struct RunOptions {
  bool use_cache = true;
  /// Defaults to $LAB_CACHE_DIR, then <tmp>/oscgap-cache.
  std::optional<std::filesystem::path> cache_dir;
  int threads = 1;
  /// Run only these stages and what they depend on; empty runs all.
  std::vector<std::string> only;
};

std::filesystem::path default_cache_dir();

/// Stages in order: averaging, control, cohomology (F₁, F₂, F₃), spectra, gap and
/// strip, conjugation residual, effective damping, resolvent scans. A failed stage
/// marks every later stage as skipped.
RunManifest run_pipeline(const Scenario& s, const RunOptions& opts = {});

/// Writes spectrum/resolvent/normalform/control tables (csv or json) plus
/// summary.json and manifest.json into out_dir. Throws Error naming the path on IO failure.
void emit(RunManifest& manifest, const std::filesystem::path& out_dir, const std::string& format);
/// Summary document: gap table, strip verdict, control verdict, ε-certificate.
nlohmann::json summary(const RunManifest& manifest);
/// Every file listed in out_dir/manifest.json exists and matches its digest.
bool verify_manifest(const std::filesystem::path& out_dir, std::string* problem = nullptr);

nlohmann::json wick_to_json(const WickSymbol& a);
WickSymbol wick_from_json(const nlohmann::json& j, int dim);

}  // namespace oscgap::lab
