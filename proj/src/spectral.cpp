#include "oscgap/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "oscgap/error.hpp"

namespace oscgap {

Eigenpairs eigenpairs(const Eigen::MatrixXcd& P, double tol) {
  if (P.rows() != P.cols()) throw DomainError("eigenpairs needs a square matrix");
  Eigenpairs out;
  auto dec = eigen_decompose(P, true);
  out.values = std::move(dec.values);
  out.vectors = std::move(dec.vectors);
  out.norm = operator_norm(P);
  const Eigen::MatrixXcd R = P * out.vectors - out.vectors * out.values.asDiagonal();
  const double scale = out.norm > 0.0 ? out.norm : 1.0;
  out.residuals.resize(static_cast<std::size_t>(P.cols()));
  for (Eigen::Index k = 0; k < P.cols(); ++k) {
    const double r = R.col(k).norm() / scale;
    out.residuals[static_cast<std::size_t>(k)] = r;
    out.max_residual = std::max(out.max_residual, r);
  }
  if (out.max_residual > tol) {
    std::ostringstream os;
    os << "eigenpairs: residual " << out.max_residual << " above " << tol << " on a " << P.rows() << "x" << P.cols()
       << " matrix with norm " << out.norm << " (" << dec.blocks << " blocks)";
    throw NumericError(os.str());
  }
  return out;
}

Eigenpairs eigenpairs(const FockOperator& P, double tol) { return eigenpairs(P.matrix, tol); }

SpectrumRecord spectrum_record(const FockOperator& P, double hbar, double delta,
                               const std::optional<Eigen::VectorXcd>& reference, const std::string& scenario_hash,
                               double edge_tol) {
  if (!(hbar > 0.0)) throw DomainError("spectrum_record needs hbar > 0");
  auto ep = eigenpairs(P);
  SpectrumRecord rec;
  rec.hbar = hbar;
  rec.delta = delta;
  rec.scenario_hash = scenario_hash;
  rec.basis_ptr = P.basis;
  rec.basis = P.basis ? P.basis->describe() : std::string("unspecified");
  rec.max_residual = ep.max_residual;
  for (Eigen::Index k = 0; k < ep.values.size(); ++k) {
    SpectrumEntry e;
    e.lambda = ep.values(k);
    e.alpha = e.lambda.real();
    e.beta = e.lambda.imag() / hbar;
    e.column = static_cast<std::size_t>(k);
    if (reference) {
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < reference->size(); ++j) best = std::min(best, std::abs((*reference)(j)-e.lambda));
      e.edge_flag = best > edge_tol * std::max(1.0, std::abs(e.lambda));
    }
    rec.entries.push_back(e);
  }
  std::stable_sort(rec.entries.begin(), rec.entries.end(), [](const SpectrumEntry& a, const SpectrumEntry& b) {
    const double da = std::abs(a.alpha - 1.0), db = std::abs(b.alpha - 1.0);
    if (da != db) return da < db;
    if (a.alpha != b.alpha) return a.alpha < b.alpha;
    return a.beta < b.beta;
  });
  rec.vectors = std::move(ep.vectors);
  return rec;
}

SpectrumRecord windowed_spectrum(const WickSymbol& H, const WickSymbol& V, const WickSymbol& A,
                                 const std::vector<double>& omega, double hbar, double delta, double E, double W,
                                 const std::string& scenario_hash, double edge_tol) {
  auto basis = make_basis(FockBasis::energy_window(omega, hbar, E, W));
  auto wide = make_basis(FockBasis::energy_window(omega, hbar, E, 1.5 * W));
  const auto P = build_P(H, V, A, delta, hbar, basis);
  const auto Pwide = build_P(H, V, A, delta, hbar, wide);
  const Eigen::VectorXcd ref = eigen_decompose(Pwide.matrix, false).values;
  return spectrum_record(P, hbar, delta, ref, scenario_hash, edge_tol);
}

StripReport strip_check(const SpectrumRecord& rec, double A_minus, double A_plus, double tol, double window) {
  StripReport r;
  r.A_minus = A_minus;
  r.A_plus = A_plus;
  r.tol = tol;
  r.window = window;
  for (const auto& e : rec.entries) {
    if (e.edge_flag || std::abs(e.alpha - 1.0) > window) continue;
    ++r.checked;
    if (e.beta < A_minus - tol || e.beta > A_plus + tol) r.violations.push_back({e.lambda, e.alpha, e.beta});
  }
  if (r.checked == 0) throw DomainError("strip_check: no unflagged eigenvalue in the alpha window");
  return r;
}

StripReport strip_check(const SpectrumRecord& rec, const WickSymbol& avgA, const ShellSample& shell, double tol,
                        double window) {
  const auto ex = shell_extrema(avgA, shell);
  return strip_check(rec, ex.A_minus, ex.A_plus, tol, window);
}

double delta_of(DeltaRule rule, double hbar, double eps) {
  switch (rule) {
    case DeltaRule::Hbar:
      return hbar;
    case DeltaRule::Hbar32:
      return std::pow(hbar, 1.5);
    case DeltaRule::EpsHbar2:
      return eps * hbar * hbar;
  }
  return hbar;
}

std::string to_string(DeltaRule rule) {
  switch (rule) {
    case DeltaRule::Hbar:
      return "hbar";
    case DeltaRule::Hbar32:
      return "hbar_3_2";
    case DeltaRule::EpsHbar2:
      return "eps_hbar2";
  }
  return "hbar";
}

DeltaRule parse_delta_rule(const std::string& s) {
  if (s == "hbar") return DeltaRule::Hbar;
  if (s == "hbar_3_2") return DeltaRule::Hbar32;
  if (s == "eps_hbar2") return DeltaRule::EpsHbar2;
  throw ScenarioError("unknown delta rule '" + s + "' (expected hbar, hbar_3_2 or eps_hbar2)");
}

GapTable gap_statistics(const std::vector<SpectrumRecord>& records, const std::string& delta_rule, double window,
                        double tie_tol) {
  if (records.empty()) throw DomainError("gap_statistics needs at least one spectrum record");
  GapTable t;
  t.delta_rule = delta_rule;
  for (const auto& rec : records) {
    GapRow row;
    row.hbar = rec.hbar;
    row.delta = rec.delta;
    row.min_beta = std::numeric_limits<double>::infinity();
    for (const auto& e : rec.entries) {
      if (e.edge_flag || std::abs(e.alpha - 1.0) > window) continue;
      ++row.count;
      row.min_beta = std::min(row.min_beta, e.beta);
    }
    if (row.count == 0) {
      std::ostringstream os;
      os << "gap_statistics: empty alpha window at hbar=" << rec.hbar;
      throw DomainError(os.str());
    }
    row.ratio = row.min_beta / row.delta;
    t.rows.push_back(row);
  }
  std::stable_sort(t.rows.begin(), t.rows.end(), [](const GapRow& a, const GapRow& b) { return a.hbar > b.hbar; });
  if (t.rows.size() < 2) {
    t.verdict = "insufficient sweep";
    return t;
  }
  t.monotone = true;
  for (std::size_t i = 1; i < t.rows.size(); ++i)
    if (t.rows[i].min_beta < t.rows[i - 1].min_beta - tie_tol) t.monotone = false;
  t.verdict = t.monotone ? "nondecreasing" : "not monotone";
  t.growth_factor = t.rows.back().min_beta / t.rows.front().min_beta;
  return t;
}

ResolventScan resolvent_scan(const FockOperator& P, double hbar, double delta, double alpha0,
                             const std::vector<double>& b_grid, const std::optional<Eigen::VectorXcd>& spectrum) {
  if (!(hbar > 0.0) || !(delta > 0.0)) throw DomainError("resolvent_scan needs hbar > 0 and delta > 0");
  if (b_grid.empty()) throw DomainError("resolvent_scan needs a nonempty beta grid");
  ResolventScan s;
  s.hbar = hbar;
  s.delta = delta;
  s.alpha0 = alpha0;
  s.b = b_grid;
  const auto blocks = connected_blocks(P.matrix);
  const double singular = 1e-13 * std::max(1.0, operator_norm(P.matrix));
  s.eps_fit = std::numeric_limits<double>::infinity();
  for (double b : b_grid) {
    const Complex lam(alpha0, hbar * b);
    double sig = sigma_min_shifted(P.matrix, lam, blocks);
    double inv;
    if (sig <= singular) {
      sig = 0.0;
      inv = std::numeric_limits<double>::infinity();
      s.finite = false;
    } else {
      inv = 1.0 / sig;
    }
    s.lambda.push_back(lam);
    s.sigma_min.push_back(sig);
    s.inv_sigma.push_back(inv);
    s.sup_inv = std::max(s.sup_inv, inv);
    s.eps_fit = std::min(s.eps_fit, sig / (hbar * delta));
    if (spectrum) {
      double d = std::numeric_limits<double>::infinity();
      for (Eigen::Index k = 0; k < spectrum->size(); ++k) d = std::min(d, std::abs((*spectrum)(k)-lam));
      s.distance.push_back(d);
    }
  }
  return s;
}

QuasimodeReport quasimode_residual(const FockOperator& P, Complex lambda, const Eigen::VectorXcd& v) {
  if (v.size() != P.matrix.cols()) throw DomainError("quasimode_residual: vector size mismatch");
  const double n = v.norm();
  if (!(n > 0.0)) throw DomainError("quasimode_residual needs a nonzero vector");
  const Eigen::VectorXcd u = v / n;
  return {lambda, (P.matrix * u - lambda * u).norm(), n};
}

HusimiResult husimi(const Eigen::VectorXcd& v, const FockBasis& basis, const std::vector<PhasePoint>& points) {
  if (static_cast<std::size_t>(v.size()) != basis.size()) throw DomainError("husimi: vector size mismatch");
  const int d = basis.dim();
  const double h = basis.hbar();
  const auto& nmax = basis.max_occupation();
  HusimiResult r;
  double total = 0.0;
  std::vector<std::vector<Complex>> coef(static_cast<std::size_t>(d));
  for (const auto& p : points) {
    if (p.dim() != d) throw DomainError("husimi: point dimension mismatch");
    for (int j = 0; j < d; ++j) {
      const auto uj = static_cast<std::size_t>(j);
      const Complex zj = p.zeta(j);
      auto& c = coef[uj];
      c.assign(static_cast<std::size_t>(nmax[uj]) + 1, Complex(0.0));
      c[0] = std::exp(-std::norm(zj) / (2.0 * h));
      for (int n = 1; n <= nmax[uj]; ++n)
        c[static_cast<std::size_t>(n)] = c[static_cast<std::size_t>(n - 1)] * zj / std::sqrt(h * n);
    }
    Complex overlap(0.0);
    double inside = 0.0;
    for (std::size_t i = 0; i < basis.size(); ++i) {
      const auto& n = basis.state(i);
      Complex c(1.0);
      for (int j = 0; j < d; ++j) c *= coef[static_cast<std::size_t>(j)][static_cast<std::size_t>(n[static_cast<std::size_t>(j)])];
      overlap += std::conj(c) * v(static_cast<Eigen::Index>(i));
      inside += std::norm(c);
    }
    if (inside < 0.99) ++r.leaking_points;
    const double val = std::norm(overlap);
    r.raw.push_back(val);
    total += val;
  }
  r.values = r.raw;
  if (total > 0.0)
    for (auto& x : r.values) x /= total;
  if (r.leaking_points > 0)
    r.warnings.push_back("husimi: " + std::to_string(r.leaking_points) +
                         " points have more than 1% of their coherent-state mass outside the basis");
  return r;
}

std::vector<PhasePoint> action_angle_grid(int dim, double I_max, int n_action, int n_angle) {
  if (dim < 1 || n_action < 1 || n_angle < 1 || !(I_max > 0.0)) throw DomainError("action_angle_grid: bad parameters");
  const int per_mode = n_action * n_angle;
  long long total = 1;
  for (int j = 0; j < dim; ++j) total *= per_mode;
  std::vector<Complex> mode(static_cast<std::size_t>(per_mode));
  for (int a = 0; a < n_action; ++a)
    for (int t = 0; t < n_angle; ++t) {
      const double I = (a + 0.5) * I_max / n_action;
      const double theta = 2.0 * std::numbers::pi * t / n_angle;
      mode[static_cast<std::size_t>(a * n_angle + t)] = std::sqrt(I) * std::exp(Complex(0.0, -theta));
    }
  std::vector<PhasePoint> out;
  out.reserve(static_cast<std::size_t>(total));
  std::vector<Complex> zeta(static_cast<std::size_t>(dim));
  for (long long i = 0; i < total; ++i) {
    long long r = i;
    for (int j = dim - 1; j >= 0; --j) {
      zeta[static_cast<std::size_t>(j)] = mode[static_cast<std::size_t>(r % per_mode)];
      r /= per_mode;
    }
    out.push_back(PhasePoint::from_zeta(zeta));
  }
  return out;
}

ActionSetDistance::ActionSetDistance(const WickSymbol& avgA, const std::vector<double>& omega, double E,
                                     double A_tol, int n_grid) {
  const int d = static_cast<int>(omega.size());
  if (avgA.dim() != d) throw DomainError("ActionSetDistance: dimension mismatch");
  for (const auto& [key, c] : avgA.terms())
    for (int j = 0; j < d; ++j)
      if (avgA.alpha(key, j) != avgA.beta(key, j))
        throw DomainError("ActionSetDistance needs a symbol that depends on the actions only");
  if (d >= 3) n_grid = std::min(n_grid, 201);
  const auto shell = sample_shell(omega, E, std::max(n_grid, 2), 1);
  for (std::size_t i = 0; i < shell.size(); ++i) {
    if (avgA.eval(shell.points[i]).real() > A_tol) continue;
    std::vector<double> r(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) r[static_cast<std::size_t>(j)] = std::sqrt(2.0 * shell.actions[i][static_cast<std::size_t>(j)]);
    radii_.push_back(std::move(r));
  }
  if (radii_.empty()) throw DomainError("ActionSetDistance: the set {H=E, <A> <= tol} is empty on the grid");
}

double ActionSetDistance::operator()(const PhasePoint& z) const {
  const int d = z.dim();
  std::vector<double> r(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) r[static_cast<std::size_t>(j)] = std::hypot(z.x(j), z.xi(j));
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : radii_) {
    double acc = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) acc += (r[j] - s[j]) * (r[j] - s[j]);
    best = std::min(best, acc);
  }
  return std::sqrt(best);
}

double mass_within(const std::vector<double>& weights, const std::vector<PhasePoint>& points,
                   const ActionSetDistance& dist, double radius) {
  if (weights.size() != points.size()) throw DomainError("mass_within: size mismatch");
  double total = 0.0, near = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    total += weights[i];
    if (dist(points[i]) <= radius) near += weights[i];
  }
  return total > 0.0 ? near / total : 0.0;
}

}  // namespace oscgap
