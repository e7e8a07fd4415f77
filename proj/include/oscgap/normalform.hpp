#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "oscgap/control.hpp"
#include "oscgap/planewave.hpp"
#include "oscgap/quantize.hpp"
#include "oscgap/wick.hpp"

namespace oscgap {

struct ConjugatedOperator {
  FockOperator Q;
  /// ‖e^{iF̂}‖ and the bound e^{‖Op(F₂)‖}.
  double group_norm = 0.0;
  double group_bound = 0.0;
  bool bound_holds = false;
};

/// Q̂ = e^{iF̂} P̂ e^{−iF̂} with F̂ = Op(F₁ + iF₂) on P's basis.
ConjugatedOperator conjugate_operator(const FockOperator& P, const WickSymbol& F1, const WickSymbol& F2);

struct ConjugationReport {
  double hbar = 0.0;
  double residual_norm = 0.0;
  std::size_t basis_size = 0;
  std::size_t subset_size = 0;
  /// Residual at rounding level relative to the target norm; excluded from the fit.
  bool negligible = false;
};

struct ConjugationSweep {
  std::vector<ConjugationReport> rows;
  double fitted_power = 0.0;
  /// False when every residual vanishes (power undefined).
  bool fit_defined = true;
};

struct ConjugationOptions {
  /// Residual measured on states with energy ≤ E_max.
  double E_max = 1.0;
  /// Degree cap N = ceil(cap_factor·E_max/(ħ min ω)).
  double cap_factor = 1.5;
};

/// ‖Q̂ − Ĥ − ħOp(⟨V⟩) − iħOp(⟨A⟩)‖ restricted to the low-energy subset, with δ = ħ,
/// for each ħ in the sweep, and the log-log slope across the sweep.
ConjugationSweep conjugation_residual(const std::vector<double>& omega, const WickSymbol& V, const WickSymbol& A,
                                      const WickSymbol& F1, const WickSymbol& F2, const WickSymbol& avgV,
                                      const WickSymbol& avgA, const std::vector<double>& hbar_sweep,
                                      const ConjugationOptions& opts = {});

/// Least-squares slope of log y against log x. Throws when fewer than 3 points.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

template <class Sym>
struct PsiSeriesResult {
  Sym symbol;
  int J = 0;
  /// Norm of the last retained term.
  double tail_indicator = 0.0;
};

/// Σ_{j≤J} (1/j!)(it/ħ)^j Ad^j_G(a) with Ad_G(a) = [G,a]_ħ. Tail measured in ℓ¹.
PsiSeriesResult<WickSymbol> psi_series(const WickSymbol& G, const WickSymbol& a, double t, double hbar, int J);

struct PlaneWaveNorms {
  double s = 1.0;
  double sigma = 0.5;
};

/// Plane-wave version; requires |t| < σ²/(2‖G‖_s) and measures the tail in A_{s−σ}.
PsiSeriesResult<PlaneWaveSymbol> psi_series(const PlaneWaveSymbol& G, const PlaneWaveSymbol& a, double t,
                                            double hbar, int J, const PlaneWaveNorms& norms);

struct EgorovReport {
  double discrepancy = 0.0;
  double tail_indicator = 0.0;
  int J = 0;
  std::size_t interior_size = 0;
};

/// ‖e^{(it/ħ)Op(G)} Op(a) e^{−(it/ħ)Op(G)} − Op(Ψ_t a)‖ on the basis interior.
EgorovReport egorov_check(const WickSymbol& G, const WickSymbol& a, double t, double hbar, const FockBasisPtr& basis,
                          int J, int interior_layers = 2);

struct EgorovItemRow {
  double t = 0.0;
  double item2_ratio = 0.0;
  double item3_ratio = 0.0;
};

struct EgorovItems {
  std::vector<EgorovItemRow> rows;
  double max_item2 = 0.0;
  double max_item3 = 0.0;
  bool bounded = false;
};

/// Norm ratios ‖Ψ_t a − a‖_{s−σ}/(|t|‖G‖_s‖a‖_s) and
/// ‖Ψ_t a − a − t{G,a}‖_{s−σ}/(t²‖G‖_s‖a‖_s) over a t-sweep.
EgorovItems egorov_items(const PlaneWaveSymbol& G, const PlaneWaveSymbol& a, const std::vector<double>& t_list,
                         double hbar, int J, const PlaneWaveNorms& norms);

struct SlopeReport {
  std::vector<double> hbar;
  std::vector<double> deviation;
  double slope = 0.0;
  bool exact = false;
  std::string note;
};

/// e(ħ) = ‖(i/ħ)[a,b]_ħ − {a,b}‖ in coefficient ℓ¹, fitted against ħ. Computed in
/// exact rational arithmetic (ħ taken as the exact binary value of the double).
SlopeReport commutator_vs_poisson_slope(const ExactWickSymbol& a, const ExactWickSymbol& b,
                                        const std::vector<double>& hbar_list);

/// Plane-wave version with the A_{s−σ} norm.
SlopeReport commutator_vs_poisson_slope(const PlaneWaveSymbol& a, const PlaneWaveSymbol& b,
                                        const std::vector<double>& hbar_list, double s_minus_sigma);

struct DampingResult {
  WickSymbol D;
  double eps = 0.0;
  double shell_min = 0.0;
  PhasePoint argmin;
};

/// D_ε = ⟨A⟩ + ε{⟨V⟩, F₃} and its minimum over the shell sample.
DampingResult effective_damping(const WickSymbol& avgA, const WickSymbol& avgV, const WickSymbol& F3, double eps,
                                const ShellSample& shell);

struct DampingSweep {
  std::vector<DampingResult> rows;
  /// ε maximizing the shell minimum, and that minimum.
  double best_eps = 0.0;
  double best_min = 0.0;
  /// best_eps·best_min when best_min > 0, else 0.
  double certificate = 0.0;
  bool positive = false;
};

DampingSweep effective_damping_sweep(const WickSymbol& avgA, const WickSymbol& avgV, const WickSymbol& F3,
                                     const std::vector<double>& eps_list, const ShellSample& shell);

}  // namespace oscgap
