#pragma once

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "oscgap/error.hpp"
#include "oscgap/frequencies.hpp"
#include "oscgap/planewave.hpp"
#include "oscgap/symbols.hpp"
#include "oscgap/wick.hpp"

namespace oscgap {

using Occupation = std::vector<int>;

/// Truncated Fock basis |n⟩, n ∈ ℤ₊^d, of the oscillator eigenbasis.
///
/// Degree-cap bases keep |n|₁ ≤ N. Energy-window bases keep
/// |ħω·(n+½) − E| ≤ W. States are ordered lexicographically.
class FockBasis {
 public:
  enum class Kind { DegreeCap, EnergyWindow };

  static FockBasis degree_cap(int dim, double hbar, int N, std::vector<double> omega = {});
  static FockBasis energy_window(std::vector<double> omega, double hbar, double E, double W);
  static FockBasis energy_window(const FrequencyVector& omega, double hbar, double E, double W) {
    return energy_window(omega.values(), hbar, E, W);
  }

  int dim() const { return dim_; }
  double hbar() const { return hbar_; }
  Kind kind() const { return kind_; }
  int cap() const { return cap_; }
  double E() const { return E_; }
  double W() const { return W_; }
  const std::vector<double>& omega() const { return omega_; }
  std::size_t size() const { return states_.size(); }
  const std::vector<Occupation>& states() const { return states_; }
  const Occupation& state(std::size_t i) const { return states_[i]; }
  /// Largest occupation of each mode present in the basis.
  const std::vector<int>& max_occupation() const { return nmax_; }

  std::optional<std::size_t> index_of(const Occupation& n) const;
  /// ħ Σ ω_j (n_j + ½); needs frequencies.
  double energy(std::size_t i) const;
  /// States whose ℓ¹-neighbourhood of radius `layers` lies inside the basis.
  std::vector<bool> interior(int layers) const;
  std::vector<std::size_t> interior_indices(int layers) const;
  /// Indices of states with energy ≤ E_max.
  std::vector<std::size_t> energy_below(double E_max) const;
  std::string describe() const;

 private:
  FockBasis() = default;
  void finalize();

  int dim_ = 1;
  double hbar_ = 1.0;
  Kind kind_ = Kind::DegreeCap;
  int cap_ = 0;
  double E_ = 0.0, W_ = 0.0;
  std::vector<double> omega_;
  std::vector<Occupation> states_;
  std::vector<int> nmax_;
  std::vector<long long> strides_;
  std::vector<long long> lookup_;  // dense box index → state index or −1
};

using FockBasisPtr = std::shared_ptr<const FockBasis>;

/// Dense matrix on a truncated Fock basis.
struct FockOperator {
  FockBasisPtr basis;
  Eigen::MatrixXcd matrix;
  std::vector<std::string> warnings;

  std::size_t size() const { return static_cast<std::size_t>(matrix.rows()); }
  /// max |M − M†|.
  double hermitian_defect() const;
  /// Principal submatrix on the given indices.
  Eigen::MatrixXcd block(const std::vector<std::size_t>& idx) const;
};

FockBasisPtr make_basis(FockBasis basis);

FockOperator harmonic_matrix(const std::vector<double>& omega, const FockBasisPtr& basis);
FockOperator harmonic_matrix(const FrequencyVector& omega, const FockBasisPtr& basis);

/// Normal symbol of Op^w(a): the Wick polynomial whose monomial ζ^ν ζ̄^μ stands for
/// a†^μ a^ν. Built by the linear-factor recursion
/// Op(ζ_j s) = a_j Op(s) − (ħ/2) Op(∂_{ζ̄_j} s),  Op(ζ̄_j s) = a_j† Op(s) + (ħ/2) Op(∂_{ζ_j} s).
template <class S>
WickPolynomial<S> normal_order(const WickPolynomial<S>& weyl, const S& hbar);

/// Matrix of Σ c a†^μ a^ν with a_j|n⟩ = √(ħ n_j)|n − e_j⟩ (exact compression).
FockOperator op_normal(const WickSymbol& normal_symbol, const FockBasisPtr& basis);
FockOperator op_weyl(const WickSymbol& a, const FockBasisPtr& basis);
/// Annihilation operator a_j on the basis.
FockOperator annihilation(const FockBasisPtr& basis, int j);

/// Σ c_j e^{i w_j·(x̂, ξ̂)}, each mode factor a matrix exponential on an
/// enlarged per-mode cap. Warns when the displacement leaks > 1% of the norm.
FockOperator op_weyl_planewave(const PlaneWaveSymbol& a, const FockBasisPtr& basis);

/// P̂ = Op(H) + δ Op(V) + iħ Op(A).
FockOperator build_P(const WickSymbol& H, const WickSymbol& V, const WickSymbol& A, double delta, double hbar,
                     const FockBasisPtr& basis);

/// Largest singular value: blockwise LAPACK SVD up to dimension 4000, block
/// power iteration on M†M beyond.
double operator_norm(const Eigen::MatrixXcd& M, double rel_tol = 1e-8, int max_iter = 100000);
inline double operator_norm(const FockOperator& op, double rel_tol = 1e-8) { return operator_norm(op.matrix, rel_tol); }

/// Scaling-and-squaring Padé matrix exponential.
Eigen::MatrixXcd matrix_exp(const Eigen::MatrixXcd& M);

// ---------------------------------------------------------------------------

template <class S>
WickPolynomial<S> normal_order(const WickPolynomial<S>& weyl, const S& hbar) {
  using Ops = ScalarOps<S>;
  using Poly = WickPolynomial<S>;
  using Key = typename Poly::Key;
  const int d = weyl.dim();
  const S half_h = hbar * Ops::from_rational(Rational(1, 2));
  std::map<Key, Poly> memo;

  // a_j · N and a_j† · N in the normal-ordered algebra
  auto left_a = [&](const Poly& n, int j) {
    Poly out(d);
    for (const auto& [k, c] : n.terms()) {
      Key up = k;
      ++up[static_cast<std::size_t>(j)];
      out.add_term(up, c);
      const int mu = k[static_cast<std::size_t>(d + j)];
      if (mu > 0) {
        Key down = k;
        --down[static_cast<std::size_t>(d + j)];
        out.add_term(down, c * hbar * Ops::from_int(mu));
      }
    }
    return out;
  };
  auto left_adag = [&](const Poly& n, int j) {
    Poly out(d);
    for (const auto& [k, c] : n.terms()) {
      Key up = k;
      ++up[static_cast<std::size_t>(d + j)];
      out.add_term(up, c);
    }
    return out;
  };

  std::function<Poly(const Key&)> rec = [&](const Key& key) -> Poly {
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    Poly result(d);
    int j = -1;
    bool bar = false;
    for (int i = 0; i < d && j < 0; ++i)
      if (key[static_cast<std::size_t>(i)] > 0) j = i;
    if (j < 0)
      for (int i = 0; i < d && j < 0; ++i)
        if (key[static_cast<std::size_t>(d + i)] > 0) {
          j = i;
          bar = true;
        }
    if (j < 0) {
      result = Poly::constant(d, Ops::one());
    } else if (!bar) {
      Key s = key;
      --s[static_cast<std::size_t>(j)];
      result = left_a(rec(s), j);
      const int b = s[static_cast<std::size_t>(d + j)];
      if (b > 0) {
        Key ds = s;
        --ds[static_cast<std::size_t>(d + j)];
        result -= rec(ds) * (half_h * Ops::from_int(b));
      }
    } else {
      // every α is zero here, so ∂_ζ s vanishes
      Key s = key;
      --s[static_cast<std::size_t>(d + j)];
      result = left_adag(rec(s), j);
    }
    memo.emplace(key, result);
    return result;
  };

  Poly out(d);
  for (const auto& [k, c] : weyl.terms()) out += rec(k) * c;
  return out;
}

}  // namespace oscgap
