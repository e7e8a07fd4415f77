#include "oscgap/lab.hpp"

#include <openssl/evp.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <future>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <unistd.h>

#include "oscgap/cohomology.hpp"
#include "oscgap/error.hpp"
#include "oscgap/normalform.hpp"
#include "oscgap/quantize.hpp"
#include "oscgap/spectral.hpp"
#include "oscgap/symbols.hpp"

namespace oscgap::lab {

using json = nlohmann::json;

namespace {

// ---------------------------------------------------------------- parsing

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw ScenarioError("scenario." + path + ": " + msg);
}

Rational parse_exact(const std::string& text, const std::string& path) {
  std::string s = text;
  if (s.empty()) fail(path, "empty number");
  try {
    const auto slash = s.find('/');
    if (slash != std::string::npos) {
      const BigInt p(s.substr(0, slash)), q(s.substr(slash + 1));
      if (q == 0) fail(path, "zero denominator in '" + text + "'");
      return Rational(p, q);
    }
    bool neg = false;
    if (s[0] == '-' || s[0] == '+') {
      neg = s[0] == '-';
      s = s.substr(1);
    }
    const auto dot = s.find('.');
    std::string ip = dot == std::string::npos ? s : s.substr(0, dot);
    std::string fp = dot == std::string::npos ? "" : s.substr(dot + 1);
    if (ip.empty()) ip = "0";
    auto digits = [](const std::string& d) { return d.find_first_not_of("0123456789") == std::string::npos; };
    if (!digits(ip) || !digits(fp) || (ip.empty() && fp.empty())) fail(path, "cannot parse number '" + text + "'");
    BigInt den = 1;
    for (std::size_t i = 0; i < fp.size(); ++i) den *= 10;
    Rational r(BigInt(ip + fp), den);
    return neg ? Rational(-r) : r;
  } catch (const ScenarioError&) {
    throw;
  } catch (const std::exception&) {
    fail(path, "cannot parse number '" + text + "'");
  }
}

Rational exact_from(const json& v, const std::string& path) {
  if (v.is_string()) return parse_exact(v.get<std::string>(), path);
  if (v.is_number_integer()) return Rational(v.get<long long>());
  if (v.is_number_float()) {
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(path, "non-finite number");
    return Rational(x);
  }
  fail(path, "expected a number or a rational string");
}

std::string rational_string(const Rational& r) {
  std::ostringstream os;
  os << numerator(r);
  if (denominator(r) != 1) os << '/' << denominator(r);
  return os.str();
}

json exact_wick_to_json(const ExactWickSymbol& a) {
  json out = json::array();
  const int d = a.dim();
  for (const auto& [k, c] : a.terms()) {
    json t;
    t["alpha"] = std::vector<int>(k.begin(), k.begin() + d);
    t["beta"] = std::vector<int>(k.begin() + d, k.end());
    t["re"] = rational_string(c.re);
    t["im"] = rational_string(c.im);
    out.push_back(t);
  }
  return out;
}

ExactWickSymbol exact_wick_from_json(const json& j, int dim, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of monomials");
  ExactWickSymbol a(dim);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    const json& t = j[i];
    if (!t.is_object()) fail(p, "expected an object with alpha, beta, re, im");
    for (auto it = t.begin(); it != t.end(); ++it)
      if (it.key() != "alpha" && it.key() != "beta" && it.key() != "re" && it.key() != "im")
        fail(p + "." + it.key(), "unknown field");
    auto index = [&](const char* name) {
      if (!t.contains(name) || !t[name].is_array()) fail(p + "." + name, "expected an integer array");
      std::vector<int> v;
      for (const auto& x : t[name]) {
        if (!x.is_number_integer() || x.get<long long>() < 0) fail(p + "." + name, "entries must be nonnegative integers");
        v.push_back(x.get<int>());
      }
      if (static_cast<int>(v.size()) != dim)
        fail(p + "." + name, "length " + std::to_string(v.size()) + " does not match omega dimension " +
                                 std::to_string(dim));
      return v;
    };
    const auto alpha = index("alpha"), beta = index("beta");
    if (!t.contains("re")) fail(p + ".re", "missing");
    const Rational re = exact_from(t["re"], p + ".re");
    const Rational im = t.contains("im") ? exact_from(t["im"], p + ".im") : Rational(0);
    a.add_term(ExactWickSymbol::make_key(alpha, beta), GaussRational(re, im));
  }
  return a;
}

template <class T>
T get_field(const json& j, const std::string& key, const std::string& path, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(path + key, "wrong type");
  }
}

std::vector<double> positive_list(const json& j, const std::string& key, const std::string& path,
                                  std::vector<double> fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_array()) fail(path + key, "expected an array of numbers");
  std::vector<double> v;
  for (const auto& x : j[key]) {
    if (!x.is_number()) fail(path + key, "expected an array of numbers");
    const double d = x.get<double>();
    if (!(d > 0) || !std::isfinite(d)) fail(path + key, "entries must be positive");
    v.push_back(d);
  }
  return v;
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& path) {
  if (!j.is_object()) fail(path.empty() ? "root" : path.substr(0, path.size() - 1), "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) fail(path + it.key(), "unknown field");
}

// ---------------------------------------------------------------- json helpers

void write_number(std::ostream& os, double x) {
  if (!std::isfinite(x)) {
    os << "null";
    return;
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12e", x);
  os << buf;
}

void dump_rec(std::ostream& os, const json& j, int indent) {
  const std::string pad(static_cast<std::size_t>(indent + 2), ' '), close(static_cast<std::size_t>(indent), ' ');
  switch (j.type()) {
    case json::value_t::number_float:
      write_number(os, j.get<double>());
      break;
    case json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        break;
      }
      os << "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << ",\n";
        first = false;
        os << pad << json(it.key()).dump() << ": ";
        dump_rec(os, it.value(), indent + 2);
      }
      os << "\n" << close << "}";
      break;
    }
    case json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        break;
      }
      os << "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) os << ",\n";
        os << pad;
        dump_rec(os, j[i], indent + 2);
      }
      os << "\n" << close << "]";
      break;
    }
    default:
      os << j.dump();
  }
}

std::string fmt(double x) {
  std::ostringstream os;
  write_number(os, x);
  return os.str();
}

std::string now_iso() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  static std::atomic<unsigned long> counter{0};
  std::error_code ec;
  std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw Error("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  const auto tmp = path.parent_path() /
                   (path.filename().string() + ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++));
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw Error("cannot write " + tmp.string());
    f << text;
    if (!f) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error("cannot rename into " + path.string());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot read " + path.string());
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

// ---------------------------------------------------------------- pipeline context

struct Context {
  Scenario s;
  std::string hash;
  FrequencyVector w;
  std::vector<double> omega;
  WickSymbol A, V, H;
  int threads = 1;
};

const json& need(const std::map<std::string, json>& outputs, const std::string& name) {
  auto it = outputs.find(name);
  if (it == outputs.end()) throw Error("stage output '" + name + "' unavailable");
  return it->second;
}

json stage_averaging(const Context& c) {
  const ResonanceModule m = c.w.is_exact() ? resonance_module(c.w) : detect_resonances_approx(c.w, 8, 1e-9);
  const WickSymbol avgA = average(c.A, m), avgV = average(c.V, m);
  json out;
  out["approximate"] = m.approximate;
  out["module_rank"] = m.rank();
  out["avgA"] = wick_to_json(avgA);
  out["avgV"] = wick_to_json(avgV);
  out["A_resonant"] = (avgA - c.A).l1_norm() == 0.0;
  out["V_resonant"] = (avgV - c.V).l1_norm() == 0.0;
  return out;
}

json stage_control(const Context& c, const json& avg) {
  const int d = c.w.dim();
  const WickSymbol avgA = wick_from_json(avg["avgA"], d), avgV = wick_from_json(avg["avgV"], d);
  const auto& o = c.s.control;
  const ControlReport r = check_control(avgA, avgV, c.w, o);
  const auto zeros = zero_set(sample_shell(c.w, o.E, o.n_action, o.n_angle), avgA, o.tol_zero);
  const StrongReport strong = check_strong(avgA, avgV, zeros, r);
  json out;
  out["satisfied"] = r.satisfied;
  out["T1"] = r.T1;
  out["eps0"] = r.eps0;
  out["invariance_flag"] = r.invariance_flag;
  out["zero_set_size"] = r.zero_set_size;
  out["sample_size"] = r.sample_size;
  out["tol_zero"] = r.tol_zero;
  out["T_max"] = r.T_max;
  out["strong_holds"] = strong.holds;
  out["strong_relation"] = strong.relation;
  out["strong_min_abs_bracket"] = strong.min_abs_bracket;
  json pts = json::array();
  for (std::size_t i = 0; i < r.points.size(); ++i)
    pts.push_back({{"index", i},
                   {"T1_local", r.points[i].T1_local},
                   {"integral_value", r.points[i].integral_value},
                   {"max_A", r.points[i].max_A}});
  out["points"] = pts;
  json sens = json::array();
  for (const auto& [mult, size, sat] : r.sensitivity)
    sens.push_back({{"tol_multiplier", mult}, {"zero_set_size", size}, {"satisfied", sat}});
  out["sensitivity"] = sens;
  return out;
}

json stage_cohomology(const Context& c, const json& avg) {
  const ResonanceModule m = resonance_module(c.w);
  const auto F = build_F12(c.s.A, c.s.V, c.w, m);
  const int d = c.w.dim();
  const WickSymbol avgA = wick_from_json(avg["avgA"], d), avgV = wick_from_json(avg["avgV"], d);
  const auto F3 = build_F3(avgA, avgV, Complex(c.s.damping_t0, 0.0), c.s.damping_J);
  json out;
  out["F1"] = wick_to_json(to_floating(F.F1));
  out["F2"] = wick_to_json(to_floating(F.F2));
  out["F3"] = wick_to_json(F3.F3);
  out["F3_tail"] = F3.tail_indicator;
  out["F3_warning"] = F3.warning ? *F3.warning : std::string();
  return out;
}

SpectrumRecord spectrum_at(const Context& c, double h, double delta, double W) {
  const auto& b = c.s.basis;
  if (b.kind == "energy_window") return windowed_spectrum(c.H, c.V, c.A, c.omega, h, delta, b.E, W, c.hash, c.s.edge_tol);
  auto basis = make_basis(FockBasis::degree_cap(c.w.dim(), h, b.N, c.omega));
  auto ref = make_basis(FockBasis::degree_cap(c.w.dim(), h, static_cast<int>(std::ceil(1.5 * b.N)), c.omega));
  const Eigen::VectorXcd refvals = eigen_decompose(build_P(c.H, c.V, c.A, delta, h, ref).matrix, false).values;
  return spectrum_record(build_P(c.H, c.V, c.A, delta, h, basis), h, delta, refvals, c.hash, c.s.edge_tol);
}

json record_to_json(const SpectrumRecord& r) {
  json entries = json::array();
  for (const auto& e : r.entries)
    entries.push_back({{"re", e.lambda.real()},
                       {"im", e.lambda.imag()},
                       {"alpha", e.alpha},
                       {"beta", e.beta},
                       {"edge", e.edge_flag}});
  return {{"hbar", r.hbar},
          {"delta", r.delta},
          {"basis", r.basis},
          {"max_residual", r.max_residual},
          {"entries", entries}};
}

SpectrumRecord record_from_json(const json& j) {
  SpectrumRecord r;
  r.hbar = j["hbar"].get<double>();
  r.delta = j["delta"].get<double>();
  r.basis = j["basis"].get<std::string>();
  r.max_residual = j["max_residual"].get<double>();
  for (const auto& e : j["entries"]) {
    SpectrumEntry s;
    s.lambda = Complex(e["re"].get<double>(), e["im"].get<double>());
    s.alpha = e["alpha"].get<double>();
    s.beta = e["beta"].get<double>();
    s.edge_flag = e["edge"].get<bool>();
    r.entries.push_back(s);
  }
  return r;
}

template <class F>
std::vector<json> parallel_map(std::size_t n, int threads, F&& f) {
  std::vector<json> out(n);
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::future<void>> workers;
  for (int t = 0; t < std::min<int>(threads, static_cast<int>(n)); ++t)
    workers.push_back(std::async(std::launch::async, [&] {
      for (std::size_t i = next++; i < n; i = next++) out[i] = f(i);
    }));
  for (auto& w : workers) w.get();
  return out;
}

json stage_spectra(const Context& c) {
  const DeltaRule rule = parse_delta_rule(c.s.delta_rule);
  auto recs = parallel_map(c.s.hbar_list.size(), c.threads, [&](std::size_t i) {
    const double h = c.s.hbar_list[i];
    return record_to_json(spectrum_at(c, h, delta_of(rule, h, c.s.delta_eps), c.s.basis.W));
  });
  return {{"records", recs}};
}

json stage_gap(const Context& c, const json& avg, const json& spectra) {
  const int d = c.w.dim();
  const WickSymbol avgA = wick_from_json(avg["avgA"], d);
  std::vector<SpectrumRecord> recs;
  for (const auto& r : spectra["records"]) recs.push_back(record_from_json(r));
  const GapTable g = gap_statistics(recs, c.s.delta_rule, c.s.alpha_window);
  json rows = json::array();
  for (const auto& r : g.rows)
    rows.push_back({{"hbar", r.hbar},
                    {"delta", r.delta},
                    {"min_beta", r.min_beta},
                    {"min_beta_over_delta", r.ratio},
                    {"count", r.count}});
  const auto ext = shell_extrema(avgA, sample_shell(c.w, c.s.control.E, c.s.control.n_action, c.s.control.n_angle));
  json strip_rows = json::array();
  int checked = 0, violations = 0;
  for (const auto& r : recs) {
    const StripReport sr = strip_check(r, ext.A_minus, ext.A_plus, c.s.strip_tol, c.s.alpha_window);
    checked += sr.checked;
    violations += static_cast<int>(sr.violations.size());
    strip_rows.push_back({{"hbar", r.hbar}, {"checked", sr.checked}, {"violations", sr.violations.size()}});
  }
  json out;
  out["gap_table"] = {{"delta_rule", g.delta_rule},
                      {"verdict", g.verdict},
                      {"monotone", g.monotone},
                      {"growth_factor", g.growth_factor},
                      {"rows", rows}};
  out["strip"] = {{"A_minus", ext.A_minus},
                  {"A_plus", ext.A_plus},
                  {"tol", c.s.strip_tol},
                  {"window", c.s.alpha_window},
                  {"checked", checked},
                  {"violations", violations},
                  {"passed", violations == 0},
                  {"per_hbar", strip_rows}};
  return out;
}

json stage_normalform(const Context& c, const json& avg, const json& coh) {
  const int d = c.w.dim();
  const WickSymbol avgA = wick_from_json(avg["avgA"], d), avgV = wick_from_json(avg["avgV"], d);
  const WickSymbol F1 = wick_from_json(coh["F1"], d), F2 = wick_from_json(coh["F2"], d);
  ConjugationOptions opts;
  opts.E_max = c.s.normalform_E_max;
  const auto sweep = conjugation_residual(c.omega, c.V, c.A, F1, F2, avgV, avgA, c.s.normalform_hbar, opts);
  json rows = json::array();
  for (const auto& r : sweep.rows)
    rows.push_back({{"hbar", r.hbar},
                    {"residual_norm", r.residual_norm},
                    {"basis_size", r.basis_size},
                    {"subset_size", r.subset_size},
                    {"negligible", r.negligible}});
  json out;
  out["rows"] = rows;
  out["fit_defined"] = sweep.fit_defined;
  out["fitted_power"] = sweep.fit_defined ? json(sweep.fitted_power) : json(nullptr);
  return out;
}

json stage_damping(const Context& c, const json& avg, const json& coh) {
  const int d = c.w.dim();
  const WickSymbol avgA = wick_from_json(avg["avgA"], d), avgV = wick_from_json(avg["avgV"], d);
  const WickSymbol F3 = wick_from_json(coh["F3"], d);
  const auto shell = sample_shell(c.omega, 1.0, c.s.damping_n_action, c.s.damping_n_angle);
  const auto sweep = effective_damping_sweep(avgA, avgV, F3, c.s.damping_eps, shell);
  json rows = json::array();
  for (const auto& r : sweep.rows) rows.push_back({{"eps", r.eps}, {"shell_min", r.shell_min}});
  return {{"rows", rows},
          {"samples", shell.size()},
          {"best_eps", sweep.best_eps},
          {"best_min", sweep.best_min},
          {"certificate", sweep.certificate},
          {"positive", sweep.positive}};
}

json stage_resolvent(const Context& c) {
  const DeltaRule rule = parse_delta_rule(c.s.delta_rule);
  auto scans = parallel_map(c.s.resolvent_hbar.size(), c.threads, [&](std::size_t i) {
    const double h = c.s.resolvent_hbar[i];
    const double delta = delta_of(rule, h, c.s.delta_eps);
    const auto& b = c.s.basis;
    FockBasisPtr basis = b.kind == "energy_window"
                             ? make_basis(FockBasis::energy_window(c.omega, h, b.E, b.W))
                             : make_basis(FockBasis::degree_cap(c.w.dim(), h, b.N, c.omega));
    const FockOperator P = build_P(c.H, c.V, c.A, delta, h, basis);
    std::vector<double> grid;
    const int nb = std::max(2, c.s.resolvent_nb);
    for (int k = 0; k < nb; ++k) grid.push_back(delta * k / (nb - 1));
    const Eigen::VectorXcd spec = eigen_decompose(P.matrix, false).values;
    const ResolventScan r = resolvent_scan(P, h, delta, c.s.resolvent_alpha0, grid, spec);
    json rows = json::array();
    for (std::size_t k = 0; k < r.b.size(); ++k)
      rows.push_back({{"b", r.b[k]}, {"sigma_min", r.sigma_min[k]}, {"distance", r.distance[k]}});
    return json{{"hbar", h},
                {"delta", delta},
                {"alpha0", r.alpha0},
                {"sup_inv", r.sup_inv},
                {"eps_fit", r.eps_fit},
                {"finite", r.finite},
                {"rows", rows}};
  });
  return {{"scans", scans}};
}

const std::map<std::string, std::vector<std::string>>& dependencies() {
  static const std::map<std::string, std::vector<std::string>> deps{
      {"averaging", {}},
      {"control", {"averaging"}},
      {"cohomology", {"averaging"}},
      {"spectra", {}},
      {"gap", {"averaging", "spectra"}},
      {"normalform", {"averaging", "cohomology"}},
      {"damping", {"averaging", "cohomology"}},
      {"resolvent", {}}};
  return deps;
}

std::set<std::string> closure(const std::vector<std::string>& only) {
  std::set<std::string> out;
  std::function<void(const std::string&)> add = [&](const std::string& n) {
    auto it = dependencies().find(n);
    if (it == dependencies().end()) throw ScenarioError("unknown stage '" + n + "'");
    if (!out.insert(n).second) return;
    for (const auto& d : it->second) add(d);
  };
  for (const auto& n : only) add(n);
  return out;
}

WickSymbol unit_harmonic(const std::vector<double>& omega) {
  std::vector<Complex> w;
  for (double x : omega) w.emplace_back(x, 0.0);
  return WickSymbol::harmonic(w);
}

}  // namespace

// ---------------------------------------------------------------- scenario

FrequencyVector Scenario::frequencies() const {
  try {
    return FrequencyVector::parse(omega);
  } catch (const DomainError& e) {
    throw ScenarioError(std::string("scenario.omega: ") + e.what());
  }
}

std::vector<double> Scenario::omega_values() const { return frequencies().values(); }

json to_json(const Scenario& s) {
  json j;
  j["name"] = s.name;
  j["omega"] = s.omega;
  j["A"] = exact_wick_to_json(s.A);
  j["V"] = exact_wick_to_json(s.V);
  j["delta_rule"] = s.delta_rule;
  j["delta_eps"] = s.delta_eps;
  j["hbar_list"] = s.hbar_list;
  j["basis"] = {{"kind", s.basis.kind}, {"E", s.basis.E}, {"W", s.basis.W}, {"N", s.basis.N}};
  j["alpha_window"] = s.alpha_window;
  j["strip_tol"] = s.strip_tol;
  j["edge_tol"] = s.edge_tol;
  j["control"] = {{"E", s.control.E},
                  {"T_max", s.control.T_max},
                  {"dt", s.control.dt},
                  {"n_action", s.control.n_action},
                  {"n_angle", s.control.n_angle},
                  {"tol_zero", s.control.tol_zero},
                  {"sensitivity", s.control.sensitivity}};
  j["normalform"] = {{"hbar_sweep", s.normalform_hbar}, {"E_max", s.normalform_E_max}};
  j["damping"] = {{"t0", s.damping_t0},
                  {"J", s.damping_J},
                  {"eps", s.damping_eps},
                  {"n_action", s.damping_n_action},
                  {"n_angle", s.damping_n_angle}};
  j["resolvent"] = {{"enabled", s.resolvent},
                    {"hbar", s.resolvent_hbar},
                    {"alpha0", s.resolvent_alpha0},
                    {"n_b", s.resolvent_nb}};
  j["seed"] = s.seed;
  return j;
}

Scenario scenario_from_json(const json& j) {
  check_keys(j,
             {"name", "omega", "A", "V", "delta_rule", "delta_eps", "hbar_list", "basis", "alpha_window", "strip_tol",
              "edge_tol", "control", "normalform", "damping", "resolvent", "seed"},
             "");
  Scenario s;
  if (!j.contains("name") || !j["name"].is_string() || j["name"].get<std::string>().empty())
    fail("name", "required non-empty string");
  s.name = j["name"].get<std::string>();
  if (!j.contains("omega") || !j["omega"].is_array() || j["omega"].empty()) fail("omega", "required non-empty array");
  s.omega.clear();
  for (const auto& x : j["omega"]) {
    if (x.is_string())
      s.omega.push_back(x.get<std::string>());
    else if (x.is_number_integer())
      s.omega.push_back(std::to_string(x.get<long long>()));
    else if (x.is_number_float()) {
      std::ostringstream os;
      os << std::setprecision(17) << x.get<double>();
      std::string t = os.str();
      if (t.find('.') == std::string::npos && t.find('e') == std::string::npos) t += ".0";
      s.omega.push_back(t);
    } else
      fail("omega", "entries must be numbers or rational strings");
  }
  const FrequencyVector w = s.frequencies();
  const int d = w.dim();
  if (!j.contains("A")) fail("A", "required");
  s.A = exact_wick_from_json(j["A"], d, "A");
  s.V = j.contains("V") ? exact_wick_from_json(j["V"], d, "V") : ExactWickSymbol(d);
  if (!s.A.is_real()) fail("A", "symbol is not real-valued");
  if (!s.V.is_real()) fail("V", "symbol is not real-valued");

  s.delta_rule = get_field<std::string>(j, "delta_rule", "", s.delta_rule);
  try {
    parse_delta_rule(s.delta_rule);
  } catch (const ScenarioError& e) {
    fail("delta_rule", e.what());
  }
  s.delta_eps = get_field<double>(j, "delta_eps", "", s.delta_eps);
  if (!(s.delta_eps > 0)) fail("delta_eps", "must be positive");
  s.hbar_list = positive_list(j, "hbar_list", "", s.hbar_list);
  if (s.hbar_list.empty()) fail("hbar_list", "must be non-empty");
  for (std::size_t i = 1; i < s.hbar_list.size(); ++i)
    if (!(s.hbar_list[i] < s.hbar_list[i - 1])) fail("hbar_list", "must be strictly decreasing");

  if (j.contains("basis")) {
    const json& b = j["basis"];
    check_keys(b, {"kind", "E", "W", "N"}, "basis.");
    s.basis.kind = get_field<std::string>(b, "kind", "basis.", s.basis.kind);
    s.basis.E = get_field<double>(b, "E", "basis.", s.basis.E);
    s.basis.W = get_field<double>(b, "W", "basis.", s.basis.W);
    s.basis.N = get_field<int>(b, "N", "basis.", s.basis.N);
  }
  if (s.basis.kind == "energy_window") {
    if (!(s.basis.W > 0)) fail("basis.W", "must be positive");
  } else if (s.basis.kind == "degree_cap") {
    if (s.basis.N < 1) fail("basis.N", "must be >= 1 for a degree_cap basis");
  } else {
    fail("basis.kind", "must be energy_window or degree_cap");
  }
  s.alpha_window = get_field<double>(j, "alpha_window", "", s.alpha_window);
  s.strip_tol = get_field<double>(j, "strip_tol", "", s.strip_tol);
  s.edge_tol = get_field<double>(j, "edge_tol", "", s.edge_tol);
  if (!(s.alpha_window > 0)) fail("alpha_window", "must be positive");
  if (s.strip_tol < 0) fail("strip_tol", "must be nonnegative");
  if (!(s.edge_tol > 0)) fail("edge_tol", "must be positive");

  if (j.contains("control")) {
    const json& c = j["control"];
    check_keys(c, {"E", "T_max", "dt", "n_action", "n_angle", "tol_zero", "sensitivity"}, "control.");
    auto& o = s.control;
    o.E = get_field<double>(c, "E", "control.", o.E);
    o.T_max = get_field<double>(c, "T_max", "control.", o.T_max);
    o.dt = get_field<double>(c, "dt", "control.", o.dt);
    o.n_action = get_field<int>(c, "n_action", "control.", o.n_action);
    o.n_angle = get_field<int>(c, "n_angle", "control.", o.n_angle);
    o.tol_zero = get_field<double>(c, "tol_zero", "control.", o.tol_zero);
    o.sensitivity = get_field<bool>(c, "sensitivity", "control.", o.sensitivity);
    if (!(o.E > 0) || !(o.T_max > 0) || !(o.dt > 0) || o.n_action < 2 || o.n_angle < 1 || !(o.tol_zero > 0))
      fail("control", "E, T_max, dt, tol_zero must be positive, n_action >= 2, n_angle >= 1");
  }
  if (j.contains("normalform")) {
    const json& n = j["normalform"];
    check_keys(n, {"hbar_sweep", "E_max"}, "normalform.");
    s.normalform_hbar = positive_list(n, "hbar_sweep", "normalform.", s.normalform_hbar);
    s.normalform_E_max = get_field<double>(n, "E_max", "normalform.", s.normalform_E_max);
    if (s.normalform_hbar.size() < 3) fail("normalform.hbar_sweep", "needs at least 3 values for the fit");
  }
  if (j.contains("damping")) {
    const json& dm = j["damping"];
    check_keys(dm, {"t0", "J", "eps", "n_action", "n_angle"}, "damping.");
    s.damping_t0 = get_field<double>(dm, "t0", "damping.", s.damping_t0);
    s.damping_J = get_field<int>(dm, "J", "damping.", s.damping_J);
    s.damping_eps = positive_list(dm, "eps", "damping.", s.damping_eps);
    s.damping_n_action = get_field<int>(dm, "n_action", "damping.", s.damping_n_action);
    s.damping_n_angle = get_field<int>(dm, "n_angle", "damping.", s.damping_n_angle);
    if (s.damping_J < 2) fail("damping.J", "must be >= 2");
    if (s.damping_eps.empty()) fail("damping.eps", "must be non-empty");
  }
  if (j.contains("resolvent")) {
    const json& r = j["resolvent"];
    check_keys(r, {"enabled", "hbar", "alpha0", "n_b"}, "resolvent.");
    s.resolvent = get_field<bool>(r, "enabled", "resolvent.", s.resolvent);
    s.resolvent_hbar = positive_list(r, "hbar", "resolvent.", s.resolvent_hbar);
    s.resolvent_alpha0 = get_field<double>(r, "alpha0", "resolvent.", s.resolvent_alpha0);
    s.resolvent_nb = get_field<int>(r, "n_b", "resolvent.", s.resolvent_nb);
    if (s.resolvent_nb < 2) fail("resolvent.n_b", "must be >= 2");
  }
  s.seed = get_field<unsigned>(j, "seed", "", s.seed);
  return s;
}

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 computation failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

std::string scenario_hash(const Scenario& s) { return sha256_hex(to_json(s).dump()); }

std::string dump_stable(const json& j) {
  std::ostringstream os;
  dump_rec(os, j, 0);
  os << "\n";
  return os.str();
}

std::vector<std::string> builtin_names() { return {"AL2", "AL2_V0", "NR12"}; }

Scenario builtin(const std::string& name) {
  Scenario s;
  s.name = name;
  const ExactWickSymbol A = ExactWickSymbol::monomial({1, 0}, {1, 0}, GaussRational(1));
  const ExactWickSymbol V =
      ExactWickSymbol::monomial({1, 0}, {0, 1}, GaussRational(1)) + ExactWickSymbol::monomial({0, 1}, {1, 0}, GaussRational(1));
  s.A = A;
  if (name == "AL2") {
    s.omega = {"1", "1"};
    s.V = V;
    s.resolvent = true;
  } else if (name == "AL2_V0") {
    s.omega = {"1", "1"};
    s.V = ExactWickSymbol(2);
  } else if (name == "NR12") {
    s.omega = {"1", "2"};
    s.V = V;
  } else {
    throw ScenarioError("unknown built-in scenario '" + name + "'");
  }
  return s;
}

Scenario load_scenario(const std::string& path_or_name) {
  for (const auto& n : builtin_names())
    if (n == path_or_name) return builtin(n);
  const std::filesystem::path p(path_or_name);
  if (!std::filesystem::exists(p)) throw ScenarioError("scenario '" + path_or_name + "' is neither a file nor a built-in");
  json j;
  try {
    j = json::parse(read_file(p));
  } catch (const json::parse_error& e) {
    throw ScenarioError(path_or_name + ": " + e.what());
  }
  return scenario_from_json(j);
}

json wick_to_json(const WickSymbol& a) {
  json out = json::array();
  const int d = a.dim();
  for (const auto& [k, c] : a.terms())
    out.push_back({{"alpha", std::vector<int>(k.begin(), k.begin() + d)},
                   {"beta", std::vector<int>(k.begin() + d, k.end())},
                   {"re", c.real()},
                   {"im", c.imag()}});
  return out;
}

WickSymbol wick_from_json(const json& j, int dim) {
  WickSymbol a(dim);
  for (const auto& t : j)
    a.add_term(WickSymbol::make_key(t["alpha"].get<std::vector<int>>(), t["beta"].get<std::vector<int>>()),
               Complex(t["re"].get<double>(), t["im"].get<double>()));
  return a;
}

// ---------------------------------------------------------------- manifest

bool RunManifest::complete() const {
  for (const auto& st : stages)
    if (st.status != "computed" && st.status != "cached") return false;
  return !stages.empty();
}

int RunManifest::cache_hits() const {
  int n = 0;
  for (const auto& st : stages) n += st.status == "cached";
  return n;
}

const StageRecord* RunManifest::stage(const std::string& name) const {
  for (const auto& st : stages)
    if (st.name == name) return &st;
  return nullptr;
}

const StageRecord* RunManifest::failure() const {
  for (const auto& st : stages)
    if (st.status == "failed") return &st;
  return nullptr;
}

std::filesystem::path default_cache_dir() {
  if (const char* env = std::getenv("LAB_CACHE_DIR"); env && *env) return env;
  return std::filesystem::temp_directory_path() / "oscgap-cache";
}

RunManifest run_pipeline(const Scenario& s, const RunOptions& opts) {
  Context c{s, scenario_hash(s), s.frequencies(), {}, {}, {}, {}, std::max(1, opts.threads)};
  c.omega = c.w.values();
  c.A = to_floating(s.A);
  c.V = to_floating(s.V);
  c.H = unit_harmonic(c.omega);

  RunManifest m;
  m.scenario_name = s.name;
  m.scenario_hash = c.hash;
  m.started = now_iso();
  const auto selected = opts.only.empty() ? std::set<std::string>(stage_names().begin(), stage_names().end())
                                          : closure(opts.only);
  const auto cache_root = opts.cache_dir ? *opts.cache_dir : default_cache_dir();
  std::map<std::string, json> outputs;
  std::string failed;

  for (const auto& name : stage_names()) {
    StageRecord rec;
    rec.name = name;
    if (!selected.count(name)) {
      rec.status = "skipped";
      rec.error = "not requested";
      m.stages.push_back(rec);
      continue;
    }
    if (name == "resolvent" && !s.resolvent && opts.only.empty()) {
      rec.status = "skipped";
      rec.error = "disabled in scenario";
      m.stages.push_back(rec);
      continue;
    }
    if (!failed.empty()) {
      rec.status = "skipped";
      rec.error = "upstream stage '" + failed + "' failed";
      m.stages.push_back(rec);
      continue;
    }
    const auto cache_file = cache_root / c.hash / (name + ".json");
    const auto t0 = std::chrono::steady_clock::now();
    bool hit = false;
    if (opts.use_cache && std::filesystem::exists(cache_file)) {
      try {
        const json cached = json::parse(read_file(cache_file));
        if (cached.at("tool_version") == kToolVersion && cached.at("stage") == name &&
            cached.at("scenario_hash") == c.hash) {
          rec.output = cached.at("output");
          hit = true;
        }
      } catch (const std::exception&) {
        hit = false;
      }
    }
    if (!hit) {
      try {
        if (name == "averaging")
          rec.output = stage_averaging(c);
        else if (name == "control")
          rec.output = stage_control(c, need(outputs, "averaging"));
        else if (name == "cohomology")
          rec.output = stage_cohomology(c, need(outputs, "averaging"));
        else if (name == "spectra")
          rec.output = stage_spectra(c);
        else if (name == "gap")
          rec.output = stage_gap(c, need(outputs, "averaging"), need(outputs, "spectra"));
        else if (name == "normalform")
          rec.output = stage_normalform(c, need(outputs, "averaging"), need(outputs, "cohomology"));
        else if (name == "damping")
          rec.output = stage_damping(c, need(outputs, "averaging"), need(outputs, "cohomology"));
        else
          rec.output = stage_resolvent(c);
        // round trip so fresh and cached outputs are the same document
        rec.output = json::parse(rec.output.dump());
      } catch (const std::exception& e) {
        rec.status = "failed";
        rec.error = e.what();
        failed = name;
        m.stages.push_back(rec);
        continue;
      }
      if (opts.use_cache)
        write_file_atomic(cache_file, json{{"tool_version", kToolVersion},
                                           {"stage", name},
                                           {"scenario_hash", c.hash},
                                           {"output", rec.output}}
                                          .dump());
    }
    rec.status = hit ? "cached" : "computed";
    rec.digest = sha256_hex(rec.output.dump());
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    outputs[name] = rec.output;
    m.stages.push_back(rec);
  }
  m.finished = now_iso();
  return m;
}

json summary(const RunManifest& m) {
  json out;
  out["scenario"] = m.scenario_name;
  out["scenario_hash"] = m.scenario_hash;
  out["tool_version"] = m.tool_version;
  json stages = json::object();
  for (const auto& st : m.stages)
    stages[st.name] = st.status == "computed" || st.status == "cached" ? std::string("ok") : st.status;
  out["stages"] = stages;
  auto ok = [&](const char* n) -> const json* {
    const StageRecord* st = m.stage(n);
    return st && (st->status == "computed" || st->status == "cached") ? &st->output : nullptr;
  };
  if (const json* c = ok("control"))
    out["control"] = {{"satisfied", (*c)["satisfied"]},
                      {"invariance_flag", (*c)["invariance_flag"]},
                      {"T1", (*c)["T1"]},
                      {"eps0", (*c)["eps0"]},
                      {"zero_set_size", (*c)["zero_set_size"]},
                      {"strong_holds", (*c)["strong_holds"]},
                      {"strong_relation", (*c)["strong_relation"]}};
  else
    out["control"] = nullptr;
  if (const json* g = ok("gap")) {
    out["gap_table"] = (*g)["gap_table"];
    json strip = (*g)["strip"];
    strip.erase("per_hbar");
    out["strip"] = strip;
  } else {
    out["gap_table"] = nullptr;
    out["strip"] = nullptr;
  }
  if (const json* d = ok("damping"))
    out["damping"] = {{"best_eps", (*d)["best_eps"]},
                      {"best_min", (*d)["best_min"]},
                      {"certificate", (*d)["certificate"]},
                      {"positive", (*d)["positive"]}};
  else
    out["damping"] = nullptr;
  if (const json* n = ok("normalform"))
    out["normalform"] = {{"fit_defined", (*n)["fit_defined"]}, {"fitted_power", (*n)["fitted_power"]}};
  else
    out["normalform"] = nullptr;
  return out;
}

namespace {

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<json>> rows;
};

std::string cell(const json& v) {
  if (v.is_number_float()) return fmt(v.get<double>());
  if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return "";
  return v.dump();
}

std::string table_csv(const Table& t) {
  std::ostringstream os;
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << "\n";
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << cell(r[i]);
    os << "\n";
  }
  return os.str();
}

json table_json(const Table& t) {
  json arr = json::array();
  for (const auto& r : t.rows) {
    json o;
    for (std::size_t i = 0; i < r.size(); ++i) o[t.columns[i]] = r[i];
    arr.push_back(o);
  }
  return arr;
}

std::map<std::string, Table> tables(const RunManifest& m) {
  std::map<std::string, Table> out;
  const json hash = m.scenario_hash;
  Table spec{{"scenario_hash", "hbar", "delta", "re_lambda", "im_lambda", "alpha", "beta", "edge_flag"}, {}};
  if (const auto* st = m.stage("spectra"); st && !st->output.is_null())
    for (const auto& r : st->output["records"])
      for (const auto& e : r["entries"])
        spec.rows.push_back({hash, r["hbar"], r["delta"], e["re"], e["im"], e["alpha"], e["beta"], e["edge"]});
  out["spectrum"] = spec;
  Table res{{"scenario_hash", "hbar", "alpha0", "b", "sigma_min"}, {}};
  if (const auto* st = m.stage("resolvent"); st && !st->output.is_null())
    for (const auto& sc : st->output["scans"])
      for (const auto& r : sc["rows"]) res.rows.push_back({hash, sc["hbar"], sc["alpha0"], r["b"], r["sigma_min"]});
  out["resolvent"] = res;
  Table nf{{"scenario_hash", "hbar", "residual_norm", "fitted_power"}, {}};
  if (const auto* st = m.stage("normalform"); st && !st->output.is_null())
    for (const auto& r : st->output["rows"])
      nf.rows.push_back({hash, r["hbar"], r["residual_norm"], st->output["fitted_power"]});
  out["normalform"] = nf;
  Table ctl{{"scenario_hash", "point_index", "T1_local", "integral_value", "invariance_flag"}, {}};
  if (const auto* st = m.stage("control"); st && !st->output.is_null())
    for (const auto& p : st->output["points"])
      ctl.rows.push_back({hash, p["index"], p["T1_local"], p["integral_value"], st->output["invariance_flag"]});
  out["control"] = ctl;
  return out;
}

}  // namespace

void emit(RunManifest& m, const std::filesystem::path& out_dir, const std::string& format) {
  if (format != "csv" && format != "json") throw ScenarioError("format must be csv or json, got '" + format + "'");
  m.files.clear();
  auto put = [&](const std::string& name, const std::string& text) {
    write_file_atomic(out_dir / name, text);
    m.files.emplace_back(name, sha256_hex(text));
  };
  for (const auto& [name, t] : tables(m)) {
    if (format == "csv")
      put(name + ".csv", table_csv(t));
    else
      put(name + ".json", dump_stable(table_json(t)));
  }
  put("summary.json", dump_stable(summary(m)));

  json man;
  man["scenario"] = m.scenario_name;
  man["scenario_hash"] = m.scenario_hash;
  man["tool_version"] = m.tool_version;
  json stages = json::array();
  for (const auto& st : m.stages)
    stages.push_back({{"name", st.name},
                      {"status", st.status == "computed" || st.status == "cached" ? std::string("ok") : st.status},
                      {"digest", st.digest},
                      {"error", st.error}});
  man["stages"] = stages;
  json files = json::array();
  for (const auto& [n, d] : m.files) files.push_back({{"path", n}, {"sha256", d}});
  man["files"] = files;
  write_file_atomic(out_dir / "manifest.json", dump_stable(man));

  json log;
  log["started"] = m.started;
  log["finished"] = m.finished;
  json st = json::array();
  for (const auto& s : m.stages) st.push_back({{"name", s.name}, {"status", s.status}, {"seconds", s.seconds}});
  log["stages"] = st;
  write_file_atomic(out_dir / "run_log.json", dump_stable(log));
}

bool verify_manifest(const std::filesystem::path& out_dir, std::string* problem) {
  auto report = [&](const std::string& msg) {
    if (problem) *problem = msg;
    return false;
  };
  json man;
  try {
    man = json::parse(read_file(out_dir / "manifest.json"));
  } catch (const std::exception& e) {
    return report(e.what());
  }
  for (const auto& f : man["files"]) {
    const auto p = out_dir / f["path"].get<std::string>();
    if (!std::filesystem::exists(p)) return report("missing " + p.string());
    if (sha256_hex(read_file(p)) != f["sha256"].get<std::string>()) return report("digest mismatch for " + p.string());
  }
  return true;
}

}  // namespace oscgap::lab
