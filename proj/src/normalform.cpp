#include "oscgap/normalform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "oscgap/error.hpp"
#include "oscgap/symbols.hpp"

namespace oscgap {

namespace {

const Complex I(0.0, 1.0);

void require_real(const WickSymbol& a, const char* what) {
  if (!a.is_real_approx(1e-12)) throw DomainError(std::string(what) + " must be real");
}

Eigen::MatrixXcd principal(const Eigen::MatrixXcd& M, const std::vector<std::size_t>& idx) {
  const auto n = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXcd B(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      B(i, j) = M(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(i)]),
                  static_cast<Eigen::Index>(idx[static_cast<std::size_t>(j)]));
  return B;
}

Eigen::MatrixXcd checked_exp(const Eigen::MatrixXcd& M, const char* what) {
  Eigen::MatrixXcd E = matrix_exp(M);
  if (!E.allFinite()) throw NumericError(std::string("matrix exponential of ") + what + " did not converge");
  return E;
}

}  // namespace

ConjugatedOperator conjugate_operator(const FockOperator& P, const WickSymbol& F1, const WickSymbol& F2) {
  require_real(F1, "F1");
  require_real(F2, "F2");
  ConjugatedOperator out;
  out.Q.basis = P.basis;
  out.Q.warnings = P.warnings;
  const Eigen::MatrixXcd Fhat = op_weyl(F1 + I * F2, P.basis).matrix;
  const Eigen::MatrixXcd U = checked_exp(I * Fhat, "iF");
  const Eigen::MatrixXcd Uinv = checked_exp(-I * Fhat, "-iF");
  out.Q.matrix = U * P.matrix * Uinv;
  out.group_norm = operator_norm(U);
  out.group_bound = std::exp(operator_norm(op_weyl(F2, P.basis).matrix));
  out.bound_holds = out.group_norm <= out.group_bound * (1.0 + 1e-10);
  if (!out.bound_holds) {
    std::ostringstream os;
    os << "‖e^{iF}‖ = " << out.group_norm << " exceeds e^{‖Op(F2)‖} = " << out.group_bound;
    out.Q.warnings.push_back(os.str());
  }
  return out;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DomainError("loglog_slope: size mismatch");
  if (x.size() < 3) throw DomainError("log-log fit needs at least 3 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0) || !(y[i] > 0)) throw DomainError("log-log fit needs positive data");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = n * sxx - sx * sx;
  if (den <= 0) throw DomainError("log-log fit needs distinct abscissae");
  return (n * sxy - sx * sy) / den;
}

ConjugationSweep conjugation_residual(const std::vector<double>& omega, const WickSymbol& V, const WickSymbol& A,
                                      const WickSymbol& F1, const WickSymbol& F2, const WickSymbol& avgV,
                                      const WickSymbol& avgA, const std::vector<double>& hbar_sweep,
                                      const ConjugationOptions& opts) {
  if (hbar_sweep.size() < 3) throw DomainError("conjugation_residual needs at least 3 sweep points for the fit");
  if (omega.empty()) throw DomainError("conjugation_residual needs frequencies");
  const double wmin = *std::min_element(omega.begin(), omega.end());
  std::vector<Complex> w;
  for (double x : omega) w.emplace_back(x, 0.0);
  const WickSymbol H = WickSymbol::harmonic(w);
  ConjugationSweep out;
  for (double h : hbar_sweep) {
    if (!(h > 0)) throw DomainError("hbar must be positive");
    const int N = static_cast<int>(std::ceil(opts.cap_factor * opts.E_max / (h * wmin)));
    auto basis = make_basis(FockBasis::degree_cap(static_cast<int>(omega.size()), h, N, omega));
    const FockOperator P = build_P(H, V, A, h, h, basis);
    const auto conj = conjugate_operator(P, F1, F2);
    const Eigen::MatrixXcd target = op_weyl(H + Complex(h, 0.0) * avgV + Complex(0.0, h) * avgA, basis).matrix;
    const auto idx = basis->energy_below(opts.E_max);
    if (idx.empty()) throw DomainError("no states below E_max in the truncation");
    const double r = operator_norm(principal(conj.Q.matrix - target, idx));
    const double scale = std::max(1.0, operator_norm(principal(target, idx)));
    out.rows.push_back({h, r, basis->size(), idx.size(), r <= 1e-12 * scale});
  }
  std::vector<double> xs, ys;
  for (const auto& row : out.rows)
    if (!row.negligible) {
      xs.push_back(row.hbar);
      ys.push_back(row.residual_norm);
    }
  if (xs.size() < 3) {
    out.fit_defined = false;
    out.fitted_power = std::numeric_limits<double>::quiet_NaN();
  } else {
    out.fitted_power = loglog_slope(xs, ys);
  }
  return out;
}

PsiSeriesResult<WickSymbol> psi_series(const WickSymbol& G, const WickSymbol& a, double t, double hbar, int J) {
  if (J < 1) throw DomainError("psi_series needs J >= 1");
  if (!(hbar > 0)) throw DomainError("hbar must be positive");
  G.check_dim(a);
  PsiSeriesResult<WickSymbol> out{a, J, 0.0};
  WickSymbol term = a;
  const Complex h(hbar, 0.0);
  for (int j = 1; j <= J; ++j) {
    term = commutator_h(G, term, h) * (I * t / (hbar * j));
    out.symbol += term;
  }
  out.tail_indicator = term.l1_norm();
  return out;
}

PsiSeriesResult<PlaneWaveSymbol> psi_series(const PlaneWaveSymbol& G, const PlaneWaveSymbol& a, double t,
                                            double hbar, int J, const PlaneWaveNorms& norms) {
  if (J < 1) throw DomainError("psi_series needs J >= 1");
  if (!(hbar > 0)) throw DomainError("hbar must be positive");
  if (!(norms.sigma > 0) || norms.sigma > norms.s) throw DomainError("psi_series needs 0 < sigma <= s");
  G.check_dim(a);
  const double gnorm = norm_As(G, norms.s);
  const double bound = norms.sigma * norms.sigma / (2.0 * gnorm);
  if (gnorm > 0 && !(std::abs(t) < bound)) {
    std::ostringstream os;
    os << "psi_series: |t| = " << std::abs(t) << " violates the smallness condition |t| < sigma^2/(2‖G‖_s) = "
       << bound;
    throw DomainError(os.str());
  }
  PsiSeriesResult<PlaneWaveSymbol> out{a, J, 0.0};
  PlaneWaveSymbol term = a;
  for (int j = 1; j <= J; ++j) {
    term = commutator_h(G, term, hbar) * (I * t / (hbar * j));
    term = term.pruned(1e-300);
    out.symbol += term;
  }
  out.tail_indicator = norm_As(term, norms.s - norms.sigma);
  return out;
}

EgorovReport egorov_check(const WickSymbol& G, const WickSymbol& a, double t, double hbar, const FockBasisPtr& basis,
                          int J, int interior_layers) {
  require_real(G, "G");
  const auto psi = psi_series(G, a, t, hbar, J);
  const Eigen::MatrixXcd X = (I * t / hbar) * op_weyl(G, basis).matrix;
  const Eigen::MatrixXcd lhs = checked_exp(X, "(it/ħ)Op(G)") * op_weyl(a, basis).matrix * checked_exp(-X, "-(it/ħ)Op(G)");
  const Eigen::MatrixXcd rhs = op_weyl(psi.symbol, basis).matrix;
  const auto idx = basis->interior_indices(interior_layers);
  if (idx.empty()) throw DomainError("egorov_check: empty basis interior");
  EgorovReport out;
  out.discrepancy = operator_norm(principal(lhs - rhs, idx));
  out.tail_indicator = psi.tail_indicator;
  out.J = J;
  out.interior_size = idx.size();
  return out;
}

EgorovItems egorov_items(const PlaneWaveSymbol& G, const PlaneWaveSymbol& a, const std::vector<double>& t_list,
                         double hbar, int J, const PlaneWaveNorms& norms) {
  const double s2 = norms.s - norms.sigma;
  const double scale = norm_As(G, norms.s) * norm_As(a, norms.s);
  if (!(scale > 0)) throw DomainError("egorov_items needs nonzero G and a");
  const PlaneWaveSymbol bracket = poisson(G, a);
  EgorovItems out;
  for (double t : t_list) {
    if (t == 0.0) throw DomainError("egorov_items needs t != 0");
    const auto psi = psi_series(G, a, t, hbar, J, norms);
    const PlaneWaveSymbol d1 = psi.symbol - a;
    const PlaneWaveSymbol d2 = d1 - t * Complex(1.0, 0.0) * bracket;
    EgorovItemRow row{t, norm_As(d1, s2) / (std::abs(t) * scale), norm_As(d2, s2) / (t * t * scale)};
    out.max_item2 = std::max(out.max_item2, row.item2_ratio);
    out.max_item3 = std::max(out.max_item3, row.item3_ratio);
    out.rows.push_back(row);
  }
  out.bounded = std::isfinite(out.max_item2) && std::isfinite(out.max_item3);
  return out;
}

namespace {

SlopeReport finish_slope(SlopeReport r) {
  bool all_zero = true, any_zero = false;
  for (double e : r.deviation) {
    if (e > 0) all_zero = false;
    else any_zero = true;
  }
  if (all_zero) {
    r.exact = true;
    r.slope = std::numeric_limits<double>::quiet_NaN();
    r.note = "exact, slope undefined";
    return r;
  }
  if (any_zero) throw NumericError("commutator deviation vanishes at some but not all hbar values");
  r.slope = loglog_slope(r.hbar, r.deviation);
  return r;
}

}  // namespace

SlopeReport commutator_vs_poisson_slope(const ExactWickSymbol& a, const ExactWickSymbol& b,
                                        const std::vector<double>& hbar_list) {
  if (hbar_list.size() < 3) throw DomainError("commutator_vs_poisson_slope needs at least 3 hbar values");
  a.check_dim(b);
  const ExactWickSymbol pb = poisson(a, b);
  SlopeReport r;
  for (double h : hbar_list) {
    if (!(h > 0)) throw DomainError("hbar must be positive");
    const GaussRational hq{Rational(h)};
    const GaussRational factor = GaussRational(Rational(0), Rational(1)) / hq;
    const ExactWickSymbol e = commutator_h(a, b, hq) * factor - pb;
    r.hbar.push_back(h);
    r.deviation.push_back(e.l1_norm());
  }
  return finish_slope(std::move(r));
}

SlopeReport commutator_vs_poisson_slope(const PlaneWaveSymbol& a, const PlaneWaveSymbol& b,
                                        const std::vector<double>& hbar_list, double s_minus_sigma) {
  if (hbar_list.size() < 3) throw DomainError("commutator_vs_poisson_slope needs at least 3 hbar values");
  a.check_dim(b);
  const PlaneWaveSymbol pb = poisson(a, b);
  SlopeReport r;
  for (double h : hbar_list) {
    if (!(h > 0)) throw DomainError("hbar must be positive");
    const PlaneWaveSymbol e = commutator_h(a, b, h) * (I / h) - pb;
    r.hbar.push_back(h);
    r.deviation.push_back(norm_As(e.pruned(1e-14 * std::max(1.0, pb.l1_norm())), s_minus_sigma));
  }
  return finish_slope(std::move(r));
}

DampingResult effective_damping(const WickSymbol& avgA, const WickSymbol& avgV, const WickSymbol& F3, double eps,
                                const ShellSample& shell) {
  if (!(eps > 0)) throw DomainError("effective_damping needs eps > 0");
  if (shell.points.empty()) throw DomainError("effective_damping needs a nonempty shell sample");
  DampingResult out;
  out.eps = eps;
  out.D = avgA + Complex(eps, 0.0) * poisson(avgV, F3);
  out.shell_min = std::numeric_limits<double>::infinity();
  for (const auto& z : shell.points) {
    const double v = out.D.eval(z).real();
    if (v < out.shell_min) {
      out.shell_min = v;
      out.argmin = z;
    }
  }
  return out;
}

DampingSweep effective_damping_sweep(const WickSymbol& avgA, const WickSymbol& avgV, const WickSymbol& F3,
                                     const std::vector<double>& eps_list, const ShellSample& shell) {
  if (eps_list.empty()) throw DomainError("effective_damping_sweep needs eps values");
  DampingSweep out;
  out.best_min = -std::numeric_limits<double>::infinity();
  for (double eps : eps_list) {
    out.rows.push_back(effective_damping(avgA, avgV, F3, eps, shell));
    if (out.rows.back().shell_min > out.best_min) {
      out.best_min = out.rows.back().shell_min;
      out.best_eps = eps;
    }
  }
  out.positive = out.best_min > 0;
  out.certificate = out.positive ? out.best_eps * out.best_min : 0.0;
  return out;
}

}  // namespace oscgap
