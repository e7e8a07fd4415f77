#pragma once

#include <span>
#include <string>
#include <vector>

#include "oscgap/scalar.hpp"

namespace oscgap {

using IntVector = std::vector<long long>;
using BigIntVector = std::vector<BigInt>;

/// Frequency vector ω ∈ (ℝ₊*)^d of the harmonic oscillator.
///
/// Exact mode stores lowest-terms rationals; approximate mode stores doubles
/// and every module derived from it is flagged approximate.
class FrequencyVector {
 public:
  static FrequencyVector exact(std::vector<Rational> entries);
  static FrequencyVector approximate(std::vector<double> entries);
  /// Parses "p/q", "p" or decimal strings. Any decimal entry forces approximate mode.
  static FrequencyVector parse(const std::vector<std::string>& entries);

  int dim() const { return static_cast<int>(values_.size()); }
  bool is_exact() const { return exact_; }

  /// Exact entries; throws DomainError in approximate mode.
  const std::vector<Rational>& rationals() const;
  const std::vector<double>& values() const { return values_; }

  double dot(std::span<const long long> k) const;
  Rational dot_exact(std::span<const long long> k) const;
  /// Lowest common multiple of the denominators (exact mode).
  BigInt denominator_lcm() const;

  std::vector<std::string> to_strings() const;

  friend bool operator==(const FrequencyVector& a, const FrequencyVector& b);

 private:
  FrequencyVector() = default;
  bool exact_ = true;
  std::vector<Rational> rationals_;
  std::vector<double> values_;
};

/// Integer lattice Λ_ω = {k ∈ ℤ^d : ω·k = 0}, given by a row basis.
struct ResonanceModule {
  int dim = 0;
  std::vector<BigIntVector> basis;
  bool approximate = false;

  int rank() const { return static_cast<int>(basis.size()); }
  int d_omega() const { return dim - rank(); }
  /// Basis rows narrowed to 64-bit integers (throws on overflow).
  std::vector<IntVector> basis_ll() const;
};

struct DiophantineEstimate {
  double C = 0.0;
  double nu = 0.0;
  bool exact = false;
  int search_radius = 0;
  /// |ω·k|⁻¹ ≤ C|k|^ν checked on every nonresonant k with |k|∞ ≤ search_radius.
  bool verified = false;
  /// min |ω·k| over the scanned nonresonant k.
  double min_nonresonant = 0.0;
};

ResonanceModule resonance_module(const FrequencyVector& omega);
ResonanceModule detect_resonances_approx(const FrequencyVector& omega, int K, double tol);
DiophantineEstimate diophantine_constants(const FrequencyVector& omega, int K);
bool is_resonant(const ResonanceModule& module, std::span<const long long> k);

/// Basis of the saturated lattice orthogonal to the module: integer
/// directions spanning the minimal torus T_ω.
std::vector<IntVector> torus_directions(const ResonanceModule& module);

namespace lattice {
/// Basis of {k ∈ ℤ^d : M k = 0} for an integer matrix M given by rows.
std::vector<BigIntVector> integer_kernel(const std::vector<BigIntVector>& rows, int dim);
/// Row basis of the lattice generated by the given integer vectors.
std::vector<BigIntVector> lattice_basis(const std::vector<BigIntVector>& generators, int dim);
/// Pairwise size reduction of a lattice basis (keeps the lattice).
void size_reduce(std::vector<BigIntVector>& basis);
}  // namespace lattice

/// Calls f(k) for every k ∈ ℤ^d with |k|∞ ≤ K.
template <class F>
void for_each_box_vector(int dim, int K, F&& f) {
  IntVector k(static_cast<std::size_t>(dim), -K);
  while (true) {
    f(static_cast<const IntVector&>(k));
    int j = 0;
    while (j < dim && k[static_cast<std::size_t>(j)] == K) {
      k[static_cast<std::size_t>(j)] = -K;
      ++j;
    }
    if (j == dim) return;
    ++k[static_cast<std::size_t>(j)];
  }
}

}  // namespace oscgap
