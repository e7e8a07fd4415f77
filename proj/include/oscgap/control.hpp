#pragma once

#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "oscgap/frequencies.hpp"
#include "oscgap/wick.hpp"

namespace oscgap {

/// Points of H^{-1}(E) parametrized by actions I_j = |ζ_j|² on the simplex
/// Σω_j I_j = E and one angle per mode, ζ_j = √I_j e^{−iθ_j}.
struct ShellSample {
  std::vector<PhasePoint> points;
  /// Actions of each point, same order as points.
  std::vector<std::vector<double>> actions;
  std::vector<double> omega;
  double E = 0.0;
  int n_action = 0;
  int n_angle = 0;

  std::size_t size() const { return points.size(); }
  std::string describe() const;
};

ShellSample sample_shell(const FrequencyVector& omega, double E, int n_action, int n_angle);
ShellSample sample_shell(const std::vector<double>& omega, double E, int n_action, int n_angle);

/// Points with ⟨A⟩ ≤ tol_zero. Throws ScenarioError when ⟨A⟩ < −tol_negative somewhere.
std::vector<PhasePoint> zero_set(const ShellSample& sample, const WickSymbol& avgA, double tol_zero,
                                 double tol_negative = 1e-10);

/// Hamiltonian vector field ż = (∂_ξ V, −∂_x V) of a real Wick symbol.
class VectorField {
 public:
  explicit VectorField(const WickSymbol& V);
  int dim() const { return dim_; }
  std::vector<double> operator()(const std::vector<double>& z) const;

 private:
  int dim_;
  std::vector<WickSymbol> dzeta_;
};

struct Trajectory {
  std::vector<double> t;
  std::vector<PhasePoint> z;
  double dt = 0.0;
  int halvings = 0;
  double drift_V = 0.0;
  double drift_H = 0.0;
};

/// Fixed-step RK4 for the flow of avgV. When omega is nonempty the harmonic
/// energy is monitored as well. A drift above drift_tol halves dt (at most
/// three times) before throwing NumericError.
Trajectory integrate_flow(const WickSymbol& avgV, const PhasePoint& z0, double T, double dt,
                          const std::vector<double>& omega = {}, double drift_tol = 1e-6);

struct PointControl {
  PhasePoint z0;
  /// First time ⟨A⟩∘φ_t exceeds tol_zero; negative when it never does.
  double T1_local = -1.0;
  /// ∫₀^{T_max} ⟨A⟩∘φ_τ dτ.
  double integral_value = 0.0;
  double max_A = 0.0;
};

struct ControlReport {
  bool satisfied = false;
  double T1 = 0.0;
  double eps0 = 0.0;
  PhasePoint worst_point;
  int zero_set_size = 0;
  bool invariance_flag = false;
  double tol_zero = 0.0;
  double T_max = 0.0;
  int sample_size = 0;
  std::vector<PointControl> points;
  /// (tol_zero multiplier, zero set size, satisfied) at 0.5× and 2×.
  std::vector<std::tuple<double, int, bool>> sensitivity;
};

struct ControlOptions {
  double E = 1.0;
  double T_max = 5.0;
  double dt = 1e-2;
  int n_action = 11;
  int n_angle = 16;
  double tol_zero = 1e-3;
  bool sensitivity = true;
};

/// Geometric control check on the sampled zero set: every point must leave
/// {⟨A⟩ ≤ tol_zero} along the ⟨V⟩ flow before T_max. T1 is the largest exit
/// time and eps0 the smallest ∫₀^{T1} ⟨A⟩∘φ_τ dτ over the zero set.
ControlReport check_control(const WickSymbol& avgA, const WickSymbol& avgV, const FrequencyVector& omega,
                            const ControlOptions& opts = {});

struct StrongReport {
  bool holds = false;
  double min_abs_bracket = 0.0;
  int zero_set_size = 0;
  std::string relation;
};

/// min |{⟨A⟩,⟨V⟩}| over the zero set against tol. An empty zero set makes the
/// condition vacuous.
StrongReport check_strong(const WickSymbol& avgA, const WickSymbol& avgV, const std::vector<PhasePoint>& zeros,
                          double tol = 1e-8);
/// Same, and throws Error when strong holds while the control report fails.
StrongReport check_strong(const WickSymbol& avgA, const WickSymbol& avgV, const std::vector<PhasePoint>& zeros,
                          const ControlReport& control, double tol = 1e-8);

struct ShellExtrema {
  double A_minus = 0.0;
  double A_plus = 0.0;
  PhasePoint argmin;
  PhasePoint argmax;
  int refinements = 0;
};

/// Min and max of ⟨A⟩ over the sample, refined by doubling the sampling
/// until both change by less than change_tol.
ShellExtrema shell_extrema(const WickSymbol& avgA, const ShellSample& sample, double change_tol = 1e-4,
                           int max_refinements = 4);

}  // namespace oscgap
