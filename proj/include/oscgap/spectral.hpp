#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "oscgap/control.hpp"
#include "oscgap/linalg.hpp"
#include "oscgap/quantize.hpp"

namespace oscgap {

struct Eigenpairs {
  Eigen::VectorXcd values;
  Eigen::MatrixXcd vectors;
  /// ‖Pv − λv‖/‖P‖ per pair.
  std::vector<double> residuals;
  double max_residual = 0.0;
  double norm = 0.0;
};

/// Full eigendecomposition with the per-pair residual contract
/// ‖Pv − λv‖ ≤ tol·‖P‖ enforced (NumericError otherwise).
Eigenpairs eigenpairs(const FockOperator& P, double tol = 1e-8);
Eigenpairs eigenpairs(const Eigen::MatrixXcd& P, double tol = 1e-8);

struct SpectrumEntry {
  Complex lambda;
  double alpha = 0.0;
  double beta = 0.0;
  bool edge_flag = false;
  /// Column of the eigenvector in SpectrumRecord::vectors.
  std::size_t column = 0;
};

struct SpectrumRecord {
  double hbar = 0.0;
  double delta = 0.0;
  /// Sorted by |α − 1|.
  std::vector<SpectrumEntry> entries;
  std::string basis;
  std::string scenario_hash;
  FockBasisPtr basis_ptr;
  Eigen::MatrixXcd vectors;
  double max_residual = 0.0;
};

/// Eigenvalues of P with α = Re λ, β = Im λ/ħ. An eigenvalue is edge-flagged
/// when the reference spectrum (a larger truncation) has nothing within
/// edge_tol·max(1,|λ|).
SpectrumRecord spectrum_record(const FockOperator& P, double hbar, double delta,
                               const std::optional<Eigen::VectorXcd>& reference = std::nullopt,
                               const std::string& scenario_hash = "", double edge_tol = 1e-6);

/// Builds P on the energy window (E, W) and the reference window (E, 1.5W)
/// and returns the flagged record.
SpectrumRecord windowed_spectrum(const WickSymbol& H, const WickSymbol& V, const WickSymbol& A,
                                 const std::vector<double>& omega, double hbar, double delta, double E, double W,
                                 const std::string& scenario_hash = "", double edge_tol = 1e-6);

struct StripViolation {
  Complex lambda;
  double alpha = 0.0;
  double beta = 0.0;
};

struct StripReport {
  double A_minus = 0.0;
  double A_plus = 0.0;
  double tol = 0.0;
  double window = 0.0;
  int checked = 0;
  std::vector<StripViolation> violations;
  bool passed() const { return violations.empty(); }
};

/// β ∈ [A₋ − tol, A₊ + tol] for every unflagged eigenvalue with |α−1| ≤ window.
StripReport strip_check(const SpectrumRecord& rec, double A_minus, double A_plus, double tol, double window = 0.1);
StripReport strip_check(const SpectrumRecord& rec, const WickSymbol& avgA, const ShellSample& shell, double tol,
                        double window = 0.1);

enum class DeltaRule { Hbar, Hbar32, EpsHbar2 };
double delta_of(DeltaRule rule, double hbar, double eps = 1.0);
std::string to_string(DeltaRule rule);
DeltaRule parse_delta_rule(const std::string& s);

struct GapRow {
  double hbar = 0.0;
  double delta = 0.0;
  double min_beta = 0.0;
  double ratio = 0.0;
  int count = 0;
};

struct GapTable {
  std::vector<GapRow> rows;
  std::string delta_rule;
  /// "insufficient sweep", "nondecreasing" or "not monotone".
  std::string verdict;
  bool monotone = false;
  /// min β at the smallest ħ over min β at the largest.
  double growth_factor = 1.0;
};

/// Per-ħ minimum of β over unflagged eigenvalues in the α-window, rows sorted
/// by decreasing ħ. Monotonicity allows ties within tie_tol.
GapTable gap_statistics(const std::vector<SpectrumRecord>& records, const std::string& delta_rule,
                        double window = 0.1, double tie_tol = 1e-6);

struct ResolventScan {
  double hbar = 0.0;
  double delta = 0.0;
  double alpha0 = 0.0;
  std::vector<double> b;
  std::vector<Complex> lambda;
  std::vector<double> sigma_min;
  /// 1/σ_min, +∞ where the pencil is singular to machine precision.
  std::vector<double> inv_sigma;
  /// Distance from each λ to the nearest computed eigenvalue (when a spectrum is supplied).
  std::vector<double> distance;
  double sup_inv = 0.0;
  /// Largest ε with 1/σ_min ≤ 1/(ε ħ δ) on the grid.
  double eps_fit = 0.0;
  bool finite = true;
};

ResolventScan resolvent_scan(const FockOperator& P, double hbar, double delta, double alpha0,
                             const std::vector<double>& b_grid,
                             const std::optional<Eigen::VectorXcd>& spectrum = std::nullopt);

struct QuasimodeReport {
  Complex lambda;
  double residual = 0.0;
  double norm_v = 0.0;
};

QuasimodeReport quasimode_residual(const FockOperator& P, Complex lambda, const Eigen::VectorXcd& v);

struct HusimiResult {
  /// Renormalized to unit sum over the point set.
  std::vector<double> values;
  std::vector<double> raw;
  /// Points whose coherent state keeps < 99% of its mass inside the basis.
  int leaking_points = 0;
  std::vector<std::string> warnings;
};

/// |⟨coherent(z), v⟩|² with coherent coefficients e^{−|ζ|²/2ħ} ζ^n/√(ħ^n n!) per mode.
HusimiResult husimi(const Eigen::VectorXcd& v, const FockBasis& basis, const std::vector<PhasePoint>& points);

/// Uniform action-angle grid: midpoint actions I_j ∈ (0, I_max) with n_action
/// per mode and n_angle angles per mode. Uniform in Lebesgue measure.
std::vector<PhasePoint> action_angle_grid(int dim, double I_max, int n_action, int n_angle);

/// Distance in ℝ^{2d} from z to {H = E, ⟨A⟩ ≤ A_tol} for ⟨A⟩ depending on the
/// actions only, where the nearest point may keep the angles of z. The set is
/// resolved on an action simplex grid of n_grid points per edge.
class ActionSetDistance {
 public:
  ActionSetDistance(const WickSymbol& avgA, const std::vector<double>& omega, double E, double A_tol,
                    int n_grid = 2001);
  double operator()(const PhasePoint& z) const;
  std::size_t set_size() const { return radii_.size(); }

 private:
  std::vector<std::vector<double>> radii_;
};

/// Fraction of the (normalized) weights at points within `radius` of the set.
double mass_within(const std::vector<double>& weights, const std::vector<PhasePoint>& points,
                   const ActionSetDistance& dist, double radius);

}  // namespace oscgap
