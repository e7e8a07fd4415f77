#include "oscgap/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "oscgap/error.hpp"
#include "oscgap/symbols.hpp"

namespace oscgap {

namespace {

// All compositions of n into d nonnegative parts, lexicographic.
void compositions(int n, int d, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == d - 1) {
    cur.push_back(n);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (int c = n; c >= 0; --c) {
    cur.push_back(c);
    compositions(n - c, d, cur, out);
    cur.pop_back();
  }
}

double harmonic_energy(const std::vector<double>& omega, const PhasePoint& p) {
  double h = 0.0;
  for (std::size_t j = 0; j < omega.size(); ++j) h += omega[j] * std::norm(p.zeta(static_cast<int>(j)));
  return h;
}

double real_eval(const WickSymbol& a, const PhasePoint& p) { return a.eval(p).real(); }

void require_real(const WickSymbol& a, const char* what) {
  if (!a.is_real_approx(1e-12)) throw DomainError(std::string(what) + " must be a real symbol");
}

}  // namespace

std::string ShellSample::describe() const {
  std::ostringstream os;
  os << "shell E=" << E << " d=" << omega.size() << " action_grid=" << n_action << " angle_lattice=" << n_angle
     << " points=" << points.size();
  return os.str();
}

ShellSample sample_shell(const FrequencyVector& omega, double E, int n_action, int n_angle) {
  return sample_shell(omega.values(), E, n_action, n_angle);
}

ShellSample sample_shell(const std::vector<double>& omega, double E, int n_action, int n_angle) {
  if (n_action < 1 || n_angle < 1) throw DomainError("sample_shell counts must be >= 1");
  if (!(E > 0.0)) throw DomainError("sample_shell needs E > 0");
  if (omega.empty()) throw DomainError("sample_shell needs d >= 1");
  for (double w : omega)
    if (!(w > 0.0)) throw DomainError("sample_shell needs positive frequencies");
  const int d = static_cast<int>(omega.size());
  ShellSample s;
  s.omega = omega;
  s.E = E;
  s.n_action = n_action;
  s.n_angle = n_angle;

  std::vector<std::vector<double>> action_points;
  if (d == 1) {
    action_points.push_back({E / omega[0]});
  } else if (n_action == 1) {
    std::vector<double> I(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) I[static_cast<std::size_t>(j)] = E / (d * omega[static_cast<std::size_t>(j)]);
    action_points.push_back(I);
  } else {
    std::vector<std::vector<int>> comps;
    std::vector<int> cur;
    compositions(n_action - 1, d, cur, comps);
    for (const auto& c : comps) {
      std::vector<double> I(static_cast<std::size_t>(d));
      for (int j = 0; j < d; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        I[uj] = E * c[uj] / ((n_action - 1) * omega[uj]);
      }
      action_points.push_back(I);
    }
  }

  for (const auto& I : action_points) {
    std::vector<int> counts(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) counts[static_cast<std::size_t>(j)] = I[static_cast<std::size_t>(j)] > 0.0 ? n_angle : 1;
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    while (true) {
      std::vector<Complex> zeta(static_cast<std::size_t>(d));
      for (int j = 0; j < d; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        const double theta = 2.0 * std::numbers::pi * idx[uj] / counts[uj];
        zeta[uj] = std::sqrt(I[uj]) * std::exp(Complex(0.0, -theta));
      }
      s.points.push_back(PhasePoint::from_zeta(zeta));
      s.actions.push_back(I);
      int j = d - 1;
      while (j >= 0 && ++idx[static_cast<std::size_t>(j)] == counts[static_cast<std::size_t>(j)]) {
        idx[static_cast<std::size_t>(j)] = 0;
        --j;
      }
      if (j < 0) break;
    }
  }
  return s;
}

std::vector<PhasePoint> zero_set(const ShellSample& sample, const WickSymbol& avgA, double tol_zero,
                                 double tol_negative) {
  require_real(avgA, "<A>");
  std::vector<PhasePoint> out;
  double worst = 0.0;
  for (const auto& p : sample.points) {
    const double a = real_eval(avgA, p);
    worst = std::min(worst, a);
    if (a <= tol_zero) out.push_back(p);
  }
  if (worst < -tol_negative)
    throw ScenarioError("hypothesis A >= 0 violated: <A> = " + std::to_string(worst) + " on the shell sample");
  return out;
}

VectorField::VectorField(const WickSymbol& V) : dim_(V.dim()) {
  require_real(V, "<V>");
  for (int j = 0; j < dim_; ++j) dzeta_.push_back(V.derivative_zeta(j));
}

std::vector<double> VectorField::operator()(const std::vector<double>& z) const {
  std::vector<Complex> zeta(static_cast<std::size_t>(dim_));
  const double r = 1.0 / std::sqrt(2.0);
  for (int j = 0; j < dim_; ++j) {
    const auto uj = static_cast<std::size_t>(j);
    zeta[uj] = Complex(z[2 * uj], z[2 * uj + 1]) * r;
  }
  std::vector<double> out(z.size());
  const double s2 = std::sqrt(2.0);
  for (int j = 0; j < dim_; ++j) {
    const auto uj = static_cast<std::size_t>(j);
    // real V: ∂_x V = √2 Re ∂_ζV, ∂_ξ V = −√2 Im ∂_ζV
    const Complex g = dzeta_[uj].eval_zeta(zeta);
    out[2 * uj] = -s2 * g.imag();
    out[2 * uj + 1] = -s2 * g.real();
  }
  return out;
}

Trajectory integrate_flow(const WickSymbol& avgV, const PhasePoint& z0, double T, double dt,
                          const std::vector<double>& omega, double drift_tol) {
  if (!(dt > 0.0)) throw DomainError("integrate_flow needs dt > 0");
  if (!(T >= 0.0)) throw DomainError("integrate_flow needs T >= 0");
  if (z0.dim() != avgV.dim()) throw DomainError("dimension mismatch in integrate_flow");
  if (!omega.empty() && static_cast<int>(omega.size()) != avgV.dim())
    throw DomainError("dimension mismatch between omega and <V>");
  const VectorField f(avgV);
  const double V0 = real_eval(avgV, z0);
  const double H0 = omega.empty() ? 0.0 : harmonic_energy(omega, z0);
  const std::size_t n = z0.z.size();

  double step = dt;
  for (int halving = 0; halving <= 3; ++halving, step /= 2) {
    const long long steps = std::max<long long>(1, static_cast<long long>(std::ceil(T / step - 1e-9)));
    const double h = T > 0.0 ? T / static_cast<double>(steps) : 0.0;
    Trajectory tr;
    tr.dt = h;
    tr.halvings = halving;
    tr.t.push_back(0.0);
    tr.z.push_back(z0);
    if (T == 0.0) return tr;
    std::vector<double> z = z0.z, tmp(n);
    bool ok = true;
    for (long long s = 0; s < steps; ++s) {
      const auto k1 = f(z);
      for (std::size_t i = 0; i < n; ++i) tmp[i] = z[i] + 0.5 * h * k1[i];
      const auto k2 = f(tmp);
      for (std::size_t i = 0; i < n; ++i) tmp[i] = z[i] + 0.5 * h * k2[i];
      const auto k3 = f(tmp);
      for (std::size_t i = 0; i < n; ++i) tmp[i] = z[i] + h * k3[i];
      const auto k4 = f(tmp);
      for (std::size_t i = 0; i < n; ++i) z[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      PhasePoint p(z);
      const double dV = std::abs(real_eval(avgV, p) - V0);
      const double dH = omega.empty() ? 0.0 : std::abs(harmonic_energy(omega, p) - H0);
      tr.drift_V = std::max(tr.drift_V, dV);
      tr.drift_H = std::max(tr.drift_H, dH);
      if (!std::isfinite(dV) || dV > drift_tol || dH > drift_tol) {
        ok = false;
        break;
      }
      tr.t.push_back(static_cast<double>(s + 1) * h);
      tr.z.push_back(std::move(p));
    }
    if (ok) return tr;
  }
  throw NumericError("integrate_flow: conservation drift above " + std::to_string(drift_tol) +
                     " after 3 step halvings (dt=" + std::to_string(dt) + ", T=" + std::to_string(T) + ")");
}

namespace {

// Cumulative integral on a uniform grid: composite Simpson on even nodes,
// Simpson up to the previous node plus a trapezoid on odd ones.
std::vector<double> running_integral(const std::vector<double>& f, double h) {
  std::vector<double> I(f.size(), 0.0);
  for (std::size_t k = 1; k < f.size(); ++k) {
    if (k % 2 == 0)
      I[k] = I[k - 2] + h / 3.0 * (f[k - 2] + 4.0 * f[k - 1] + f[k]);
    else
      I[k] = I[k - 1] + 0.5 * h * (f[k - 1] + f[k]);
  }
  return I;
}

double interpolate(const std::vector<double>& t, const std::vector<double>& y, double x) {
  if (x <= t.front()) return y.front();
  if (x >= t.back()) return y.back();
  const auto it = std::upper_bound(t.begin(), t.end(), x);
  const std::size_t k = static_cast<std::size_t>(it - t.begin());
  const double w = (x - t[k - 1]) / (t[k] - t[k - 1]);
  return (1.0 - w) * y[k - 1] + w * y[k];
}

struct FlowSample {
  std::vector<double> t;
  std::vector<double> A;
  std::vector<double> I;
};

struct ControlCore {
  bool satisfied = false;
  bool invariance = false;
  double T1 = 0.0;
  double eps0 = 0.0;
  PhasePoint worst;
  std::vector<PointControl> points;
};

ControlCore control_core(const WickSymbol& avgA, const WickSymbol& avgV, const std::vector<double>& omega,
                         const ShellSample& shell, const std::vector<PhasePoint>& zeros, const ControlOptions& o,
                         double tol_zero) {
  ControlCore c;
  if (zeros.empty()) {
    // vacuous: ⟨A⟩ > tol_zero on the whole sample already at t = 0
    double amin = std::numeric_limits<double>::infinity();
    for (const auto& p : shell.points) {
      const double a = real_eval(avgA, p);
      if (a < amin) {
        amin = a;
        c.worst = p;
      }
    }
    c.satisfied = amin > 0.0;
    c.T1 = o.dt;
    c.eps0 = amin * o.dt;
    return c;
  }
  std::vector<FlowSample> flows;
  double maxA = 0.0;
  bool all_exit = true;
  for (const auto& z0 : zeros) {
    const auto tr = integrate_flow(avgV, z0, o.T_max, o.dt, omega);
    FlowSample fs;
    fs.t = tr.t;
    for (const auto& p : tr.z) fs.A.push_back(real_eval(avgA, p));
    fs.I = running_integral(fs.A, tr.dt);
    PointControl pc;
    pc.z0 = z0;
    pc.integral_value = fs.I.back();
    pc.max_A = *std::max_element(fs.A.begin(), fs.A.end());
    for (std::size_t k = 0; k < fs.A.size(); ++k)
      if (fs.A[k] > tol_zero) {
        pc.T1_local = fs.t[k];
        break;
      }
    if (pc.T1_local < 0.0) all_exit = false;
    maxA = std::max(maxA, pc.max_A);
    c.points.push_back(pc);
    flows.push_back(std::move(fs));
  }
  c.invariance = maxA <= tol_zero;
  if (all_exit) {
    for (const auto& pc : c.points) c.T1 = std::max(c.T1, pc.T1_local);
    c.eps0 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < flows.size(); ++i) {
      const double v = interpolate(flows[i].t, flows[i].I, c.T1);
      if (v < c.eps0) {
        c.eps0 = v;
        c.worst = c.points[i].z0;
      }
    }
    c.satisfied = c.eps0 > 0.0;
  } else {
    c.T1 = o.T_max;
    c.eps0 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < c.points.size(); ++i)
      if (c.points[i].integral_value < c.eps0) {
        c.eps0 = c.points[i].integral_value;
        c.worst = c.points[i].z0;
      }
    c.satisfied = false;
  }
  return c;
}

}  // namespace

ControlReport check_control(const WickSymbol& avgA, const WickSymbol& avgV, const FrequencyVector& omega,
                            const ControlOptions& opts) {
  avgA.check_dim(avgV);
  if (omega.dim() != avgA.dim()) throw DomainError("dimension mismatch between omega and symbols");
  if (!(opts.T_max > 0.0)) throw DomainError("check_control needs T_max > 0");
  if (!(opts.tol_zero >= 0.0)) throw DomainError("check_control needs tol_zero >= 0");
  const auto shell = sample_shell(omega, opts.E, opts.n_action, opts.n_angle);
  const auto& w = omega.values();

  const auto zeros = zero_set(shell, avgA, opts.tol_zero);
  auto core = control_core(avgA, avgV, w, shell, zeros, opts, opts.tol_zero);
  ControlReport r;
  r.satisfied = core.satisfied;
  r.T1 = core.T1;
  r.eps0 = core.eps0;
  r.worst_point = core.worst;
  r.zero_set_size = static_cast<int>(zeros.size());
  r.invariance_flag = core.invariance;
  r.tol_zero = opts.tol_zero;
  r.T_max = opts.T_max;
  r.sample_size = static_cast<int>(shell.size());
  r.points = std::move(core.points);
  if (opts.sensitivity) {
    for (double m : {0.5, 2.0}) {
      const double tol = m * opts.tol_zero;
      const auto zs = zero_set(shell, avgA, tol);
      const auto alt = control_core(avgA, avgV, w, shell, zs, opts, tol);
      r.sensitivity.emplace_back(m, static_cast<int>(zs.size()), alt.satisfied);
    }
  }
  return r;
}

StrongReport check_strong(const WickSymbol& avgA, const WickSymbol& avgV, const std::vector<PhasePoint>& zeros,
                          double tol) {
  require_real(avgA, "<A>");
  require_real(avgV, "<V>");
  const auto bracket = poisson(avgA, avgV);
  StrongReport r;
  r.zero_set_size = static_cast<int>(zeros.size());
  if (zeros.empty()) {
    r.holds = true;
    r.min_abs_bracket = std::numeric_limits<double>::infinity();
    r.relation = "vacuous (empty zero set)";
    return r;
  }
  r.min_abs_bracket = std::numeric_limits<double>::infinity();
  for (const auto& p : zeros) r.min_abs_bracket = std::min(r.min_abs_bracket, std::abs(real_eval(bracket, p)));
  r.holds = r.min_abs_bracket > tol;
  r.relation = r.holds ? "strong holds" : "strong fails";
  return r;
}

StrongReport check_strong(const WickSymbol& avgA, const WickSymbol& avgV, const std::vector<PhasePoint>& zeros,
                          const ControlReport& control, double tol) {
  auto r = check_strong(avgA, avgV, zeros, tol);
  if (r.holds && !control.satisfied)
    throw Error("strong control condition holds but the control check failed (strong implies control)");
  if (r.holds)
    r.relation = "strong holds, control holds";
  else
    r.relation = control.satisfied ? "strong fails, control holds" : "strong fails, control fails";
  return r;
}

ShellExtrema shell_extrema(const WickSymbol& avgA, const ShellSample& sample, double change_tol,
                           int max_refinements) {
  require_real(avgA, "<A>");
  if (sample.points.empty()) throw DomainError("shell_extrema needs a nonempty sample");
  auto scan = [&](const ShellSample& s) {
    ShellExtrema e;
    e.A_minus = std::numeric_limits<double>::infinity();
    e.A_plus = -std::numeric_limits<double>::infinity();
    for (const auto& p : s.points) {
      const double a = real_eval(avgA, p);
      if (a < e.A_minus) {
        e.A_minus = a;
        e.argmin = p;
      }
      if (a > e.A_plus) {
        e.A_plus = a;
        e.argmax = p;
      }
    }
    return e;
  };
  auto best = scan(sample);
  int na = sample.n_action, nt = sample.n_angle;
  for (int r = 1; r <= max_refinements; ++r) {
    na = 2 * na - 1;
    nt *= 2;
    const auto next = scan(sample_shell(sample.omega, sample.E, std::max(na, 2), nt));
    const double change = std::max(std::abs(next.A_minus - best.A_minus), std::abs(next.A_plus - best.A_plus));
    if (next.A_minus < best.A_minus) {
      best.A_minus = next.A_minus;
      best.argmin = next.argmin;
    }
    if (next.A_plus > best.A_plus) {
      best.A_plus = next.A_plus;
      best.argmax = next.argmax;
    }
    best.refinements = r;
    if (change < change_tol) break;
  }
  return best;
}

}  // namespace oscgap
