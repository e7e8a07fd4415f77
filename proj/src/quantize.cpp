#include "oscgap/quantize.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "oscgap/linalg.hpp"

namespace oscgap {

namespace {

// √(ħ^k · n!/(n−k)!)
double ladder_factor(int n, int k, double hbar) {
  double f = 1.0;
  for (int i = 0; i < k; ++i) f *= hbar * (n - i);
  return std::sqrt(f);
}

void require_hbar(const FockBasisPtr& basis, double hbar) {
  if (!basis) throw DomainError("null Fock basis");
  if (std::abs(basis->hbar() - hbar) > 1e-15 * std::max(1.0, hbar))
    throw DomainError("operator ħ does not match the basis ħ");
}

}  // namespace

FockBasis FockBasis::degree_cap(int dim, double hbar, int N, std::vector<double> omega) {
  if (dim < 1) throw DomainError("Fock basis needs d >= 1");
  if (!(hbar > 0.0)) throw DomainError("Fock basis needs ħ > 0");
  if (N < 0) throw DomainError("degree cap must be nonnegative");
  if (!omega.empty() && static_cast<int>(omega.size()) != dim) throw DomainError("frequency dimension mismatch");
  FockBasis b;
  b.dim_ = dim;
  b.hbar_ = hbar;
  b.kind_ = Kind::DegreeCap;
  b.cap_ = N;
  b.omega_ = std::move(omega);
  Occupation n(static_cast<std::size_t>(dim), 0);
  // enumerate |n|₁ ≤ N in lexicographic order
  std::function<void(int, int)> rec = [&](int j, int left) {
    if (j == dim) {
      b.states_.push_back(n);
      return;
    }
    for (int v = 0; v <= left; ++v) {
      n[static_cast<std::size_t>(j)] = v;
      rec(j + 1, left - v);
    }
    n[static_cast<std::size_t>(j)] = 0;
  };
  rec(0, N);
  b.finalize();
  return b;
}

FockBasis FockBasis::energy_window(std::vector<double> omega, double hbar, double E, double W) {
  if (omega.empty()) throw DomainError("Fock basis needs d >= 1");
  if (!(hbar > 0.0)) throw DomainError("Fock basis needs ħ > 0");
  if (!(W > 0.0)) throw DomainError("energy window needs W > 0");
  for (double w : omega)
    if (!(w > 0.0)) throw DomainError("frequencies must be positive");
  FockBasis b;
  b.dim_ = static_cast<int>(omega.size());
  b.hbar_ = hbar;
  b.kind_ = Kind::EnergyWindow;
  b.E_ = E;
  b.W_ = W;
  b.omega_ = std::move(omega);
  const int d = b.dim_;
  Occupation n(static_cast<std::size_t>(d), 0);
  std::function<void(int, double)> rec = [&](int j, double energy) {
    if (j == d) {
      if (std::abs(energy - E) <= W) b.states_.push_back(n);
      return;
    }
    const double step = hbar * b.omega_[static_cast<std::size_t>(j)];
    for (int v = 0;; ++v) {
      const double e = energy + step * (v + 0.5);
      // remaining modes add at least their zero-point energy
      double rest = 0.0;
      for (int i = j + 1; i < d; ++i) rest += 0.5 * hbar * b.omega_[static_cast<std::size_t>(i)];
      if (e + rest > E + W) break;
      n[static_cast<std::size_t>(j)] = v;
      rec(j + 1, e);
    }
    n[static_cast<std::size_t>(j)] = 0;
  };
  rec(0, 0.0);
  if (b.states_.empty()) throw DomainError("energy window contains no Fock states");
  b.finalize();
  return b;
}

void FockBasis::finalize() {
  std::sort(states_.begin(), states_.end());
  states_.erase(std::unique(states_.begin(), states_.end()), states_.end());
  nmax_.assign(static_cast<std::size_t>(dim_), 0);
  for (const auto& s : states_)
    for (int j = 0; j < dim_; ++j) nmax_[static_cast<std::size_t>(j)] = std::max(nmax_[static_cast<std::size_t>(j)], s[static_cast<std::size_t>(j)]);
  strides_.assign(static_cast<std::size_t>(dim_), 1);
  long long total = 1;
  for (int j = dim_ - 1; j >= 0; --j) {
    strides_[static_cast<std::size_t>(j)] = total;
    total *= nmax_[static_cast<std::size_t>(j)] + 1;
  }
  lookup_.assign(static_cast<std::size_t>(total), -1);
  for (std::size_t i = 0; i < states_.size(); ++i) {
    long long pos = 0;
    for (int j = 0; j < dim_; ++j) pos += strides_[static_cast<std::size_t>(j)] * states_[i][static_cast<std::size_t>(j)];
    lookup_[static_cast<std::size_t>(pos)] = static_cast<long long>(i);
  }
}

std::optional<std::size_t> FockBasis::index_of(const Occupation& n) const {
  if (static_cast<int>(n.size()) != dim_) return std::nullopt;
  long long pos = 0;
  for (int j = 0; j < dim_; ++j) {
    const int v = n[static_cast<std::size_t>(j)];
    if (v < 0 || v > nmax_[static_cast<std::size_t>(j)]) return std::nullopt;
    pos += strides_[static_cast<std::size_t>(j)] * v;
  }
  const long long i = lookup_[static_cast<std::size_t>(pos)];
  if (i < 0) return std::nullopt;
  return static_cast<std::size_t>(i);
}

double FockBasis::energy(std::size_t i) const {
  if (omega_.empty()) throw DomainError("basis carries no frequencies");
  double e = 0.0;
  for (int j = 0; j < dim_; ++j) e += omega_[static_cast<std::size_t>(j)] * (states_[i][static_cast<std::size_t>(j)] + 0.5);
  return hbar_ * e;
}

std::vector<bool> FockBasis::interior(int layers) const {
  std::vector<bool> inside(states_.size(), true);
  if (layers <= 0) return inside;
  for (std::size_t i = 0; i < states_.size(); ++i) {
    // check every m with |m − n|₁ ≤ layers
    Occupation m = states_[i];
    bool ok = true;
    std::function<void(int, int)> rec = [&](int j, int left) {
      if (!ok) return;
      if (j == dim_) {
        for (int v : m)
          if (v < 0) return;
        if (!index_of(m)) ok = false;
        return;
      }
      const int base = states_[i][static_cast<std::size_t>(j)];
      for (int delta = -left; delta <= left; ++delta) {
        m[static_cast<std::size_t>(j)] = base + delta;
        rec(j + 1, left - std::abs(delta));
      }
      m[static_cast<std::size_t>(j)] = base;
    };
    rec(0, layers);
    inside[i] = ok;
  }
  return inside;
}

std::vector<std::size_t> FockBasis::interior_indices(int layers) const {
  const auto mask = interior(layers);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) idx.push_back(i);
  return idx;
}

std::vector<std::size_t> FockBasis::energy_below(double E_max) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < states_.size(); ++i)
    if (energy(i) <= E_max) idx.push_back(i);
  return idx;
}

std::string FockBasis::describe() const {
  std::ostringstream os;
  os << "d=" << dim_ << " hbar=" << hbar_ << " size=" << states_.size();
  if (kind_ == Kind::DegreeCap)
    os << " degree_cap=" << cap_;
  else
    os << " window E=" << E_ << " W=" << W_;
  return os.str();
}

FockBasisPtr make_basis(FockBasis basis) { return std::make_shared<const FockBasis>(std::move(basis)); }

double FockOperator::hermitian_defect() const { return (matrix - matrix.adjoint()).cwiseAbs().maxCoeff(); }

Eigen::MatrixXcd FockOperator::block(const std::vector<std::size_t>& idx) const {
  Eigen::MatrixXcd out(idx.size(), idx.size());
  for (std::size_t c = 0; c < idx.size(); ++c)
    for (std::size_t r = 0; r < idx.size(); ++r)
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          matrix(static_cast<Eigen::Index>(idx[r]), static_cast<Eigen::Index>(idx[c]));
  return out;
}

FockOperator harmonic_matrix(const std::vector<double>& omega, const FockBasisPtr& basis) {
  if (static_cast<int>(omega.size()) != basis->dim()) throw DomainError("frequency dimension mismatch");
  const auto n = static_cast<Eigen::Index>(basis->size());
  FockOperator op{basis, Eigen::MatrixXcd::Zero(n, n), {}};
  for (Eigen::Index i = 0; i < n; ++i) {
    double e = 0.0;
    const auto& s = basis->state(static_cast<std::size_t>(i));
    for (std::size_t j = 0; j < omega.size(); ++j) e += omega[j] * (s[j] + 0.5);
    op.matrix(i, i) = basis->hbar() * e;
  }
  return op;
}

FockOperator harmonic_matrix(const FrequencyVector& omega, const FockBasisPtr& basis) {
  return harmonic_matrix(omega.values(), basis);
}

FockOperator op_normal(const WickSymbol& normal_symbol, const FockBasisPtr& basis) {
  if (normal_symbol.dim() != basis->dim()) throw DomainError("symbol and basis dimensions differ");
  const int d = basis->dim();
  const double hbar = basis->hbar();
  const auto n = static_cast<Eigen::Index>(basis->size());
  FockOperator op{basis, Eigen::MatrixXcd::Zero(n, n), {}};
  Occupation target(static_cast<std::size_t>(d));
  for (const auto& [key, c] : normal_symbol.terms()) {
    for (Eigen::Index col = 0; col < n; ++col) {
      const auto& m = basis->state(static_cast<std::size_t>(col));
      double f = 1.0;
      bool ok = true;
      for (int j = 0; j < d && ok; ++j) {
        const int nu = normal_symbol.alpha(key, j), mu = normal_symbol.beta(key, j);
        const int mj = m[static_cast<std::size_t>(j)];
        if (mj < nu) {
          ok = false;
          break;
        }
        const int k = mj - nu;
        target[static_cast<std::size_t>(j)] = k + mu;
        f *= ladder_factor(mj, nu, hbar) * ladder_factor(k + mu, mu, hbar);
      }
      if (!ok) continue;
      if (auto row = basis->index_of(target)) op.matrix(static_cast<Eigen::Index>(*row), col) += c * f;
    }
  }
  return op;
}

FockOperator op_weyl(const WickSymbol& a, const FockBasisPtr& basis) {
  return op_normal(normal_order(a, Complex(basis->hbar(), 0.0)), basis);
}

FockOperator annihilation(const FockBasisPtr& basis, int j) {
  if (j < 0 || j >= basis->dim()) throw DomainError("mode index out of range");
  return op_normal(WickSymbol::zeta(basis->dim(), j), basis);
}

FockOperator op_weyl_planewave(const PlaneWaveSymbol& a, const FockBasisPtr& basis) {
  const int d = basis->dim();
  if (a.dim() != d) throw DomainError("symbol and basis dimensions differ");
  const double hbar = basis->hbar();
  const auto n = static_cast<Eigen::Index>(basis->size());
  FockOperator op{basis, Eigen::MatrixXcd::Zero(n, n), {}};
  const auto& nmax = basis->max_occupation();
  double worst_leak = 0.0;

  for (const auto& [w, c] : a.terms()) {
    // Per mode: i(u x̂ + v ξ̂) = α a† − ᾱ a with α = (iu − v)/√2; in units of
    // the unit-ħ ladder b = a/√ħ the displacement is α√ħ.
    std::vector<Eigen::MatrixXcd> factors(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) {
      const double u = w[2 * static_cast<std::size_t>(j)], v = w[2 * static_cast<std::size_t>(j) + 1];
      const Complex alpha = Complex(-v, u) * std::sqrt(hbar / 2.0);
      const double r = std::abs(alpha);
      const int keep = nmax[static_cast<std::size_t>(j)] + 1;
      if (r == 0.0) {
        factors[static_cast<std::size_t>(j)] = Eigen::MatrixXcd::Identity(keep, keep);
        continue;
      }
      const int cap = keep + static_cast<int>(std::ceil(r * r + 10.0 * r + 20.0));
      Eigen::MatrixXcd gen = Eigen::MatrixXcd::Zero(cap, cap);
      for (int k = 1; k < cap; ++k) {
        const double s = std::sqrt(static_cast<double>(k));
        gen(k, k - 1) = alpha * s;             // α b†
        gen(k - 1, k) = -std::conj(alpha) * s;  // −ᾱ b
      }
      factors[static_cast<std::size_t>(j)] = matrix_exp(gen).topLeftCorner(keep, keep);
    }
    for (Eigen::Index col = 0; col < n; ++col) {
      const auto& m = basis->state(static_cast<std::size_t>(col));
      for (Eigen::Index row = 0; row < n; ++row) {
        const auto& s = basis->state(static_cast<std::size_t>(row));
        Complex f = c;
        for (int j = 0; j < d; ++j) f *= factors[static_cast<std::size_t>(j)](s[static_cast<std::size_t>(j)], m[static_cast<std::size_t>(j)]);
        op.matrix(row, col) += f;
      }
    }
    // median column-norm deficit of this unitary factor on the basis
    std::vector<double> leaks(static_cast<std::size_t>(n));
    for (Eigen::Index col = 0; col < n; ++col) {
      const auto& m = basis->state(static_cast<std::size_t>(col));
      double kept = 0.0;
      for (Eigen::Index row = 0; row < n; ++row) {
        const auto& s = basis->state(static_cast<std::size_t>(row));
        Complex f = 1.0;
        for (int j = 0; j < d; ++j) f *= factors[static_cast<std::size_t>(j)](s[static_cast<std::size_t>(j)], m[static_cast<std::size_t>(j)]);
        kept += std::norm(f);
      }
      leaks[static_cast<std::size_t>(col)] = 1.0 - kept;
    }
    std::nth_element(leaks.begin(), leaks.begin() + n / 2, leaks.end());
    worst_leak = std::max(worst_leak, leaks[static_cast<std::size_t>(n / 2)]);
  }
  if (worst_leak > 0.01) {
    std::ostringstream os;
    os << "displacement leaks " << worst_leak * 100 << "% of the norm out of the truncation (basis too small for |w|)";
    op.warnings.push_back(os.str());
  }
  return op;
}

FockOperator build_P(const WickSymbol& H, const WickSymbol& V, const WickSymbol& A, double delta, double hbar,
                     const FockBasisPtr& basis) {
  require_hbar(basis, hbar);
  if (!(delta >= 0.0)) throw DomainError("build_P needs δ >= 0");
  if (!V.is_real_approx(1e-12) || !A.is_real_approx(1e-12)) throw DomainError("build_P needs real V and A");
  FockOperator P = op_weyl(H, basis);
  if (delta != 0.0) P.matrix += delta * op_weyl(V, basis).matrix;
  if (!A.is_zero()) P.matrix += Complex(0.0, hbar) * op_weyl(A, basis).matrix;
  return P;
}

double operator_norm(const Eigen::MatrixXcd& M, double rel_tol, int max_iter) {
  if (M.size() == 0) return 0.0;
  if (M.rows() == M.cols() && M.rows() <= 4000) {
    // exact: largest singular value over the decoupled diagonal blocks
    double best = 0.0;
    for (const auto& idx : connected_blocks(M)) {
      const auto n = static_cast<Eigen::Index>(idx.size());
      Eigen::MatrixXcd B(n, n);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
          B(i, j) = M(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(i)]),
                      static_cast<Eigen::Index>(idx[static_cast<std::size_t>(j)]));
      best = std::max(best, singular_values(B)(0));
    }
    return best;
  }
  // Block power iteration on M†M with Rayleigh–Ritz extraction; the block
  // absorbs clusters of nearly equal top singular values.
  const Eigen::Index n = M.cols();
  const Eigen::Index k = std::min<Eigen::Index>(n, 16);
  std::mt19937_64 rng(0x0b5e55ed);
  std::normal_distribution<double> g;
  Eigen::MatrixXcd Q(n, k);
  for (Eigen::Index i = 0; i < Q.size(); ++i) Q.data()[i] = Complex(g(rng), g(rng));
  Q = Eigen::HouseholderQR<Eigen::MatrixXcd>(Q).householderQ() * Eigen::MatrixXcd::Identity(n, k);
  double previous = -1.0;
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::MatrixXcd Z = M.adjoint() * (M * Q);
    const Eigen::MatrixXcd small = Q.adjoint() * Z;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (small + small.adjoint()));
    const double theta = es.eigenvalues()(k - 1);
    if (theta <= 0.0) return 0.0;
    const Eigen::VectorXcd y = es.eigenvectors().col(k - 1);
    const double residual = (Z * y - theta * (Q * y)).norm();
    if (residual <= rel_tol * theta || k == n) return std::sqrt(theta);
    if (previous > 0.0 && std::abs(theta - previous) <= 1e-3 * rel_tol * theta) return std::sqrt(theta);
    previous = theta;
    Q = Eigen::HouseholderQR<Eigen::MatrixXcd>(Z).householderQ() * Eigen::MatrixXcd::Identity(n, k);
  }
  throw NumericError("operator_norm: power iteration did not converge");
}

Eigen::MatrixXcd matrix_exp(const Eigen::MatrixXcd& M) {
  if (M.rows() != M.cols()) throw DomainError("matrix exponential needs a square matrix");
  Eigen::MatrixXcd out = M.exp();
  if (!out.allFinite()) throw NumericError("matrix exponential overflowed");
  return out;
}

}  // namespace oscgap
