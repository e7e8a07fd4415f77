#include "oscgap/frequencies.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "oscgap/error.hpp"

namespace oscgap {

namespace {

bool looks_decimal(const std::string& s) {
  return s.find_first_of(".eE") != std::string::npos;
}

Rational parse_rational(const std::string& s) {
  const auto slash = s.find('/');
  try {
    if (slash == std::string::npos) return Rational(BigInt(s));
    const BigInt p(s.substr(0, slash));
    const BigInt q(s.substr(slash + 1));
    if (q == 0) throw DomainError("frequency '" + s + "' has zero denominator");
    return Rational(p, q);
  } catch (const std::runtime_error&) {
    throw DomainError("cannot parse frequency '" + s + "'");
  }
}

BigInt abs_big(const BigInt& x) { return x < 0 ? BigInt(-x) : x; }

void normalize_sign(BigIntVector& v) {
  for (const auto& e : v) {
    if (e == 0) continue;
    if (e < 0)
      for (auto& x : v) x = -x;
    return;
  }
}

BigInt dot_big(const BigIntVector& a, const BigIntVector& b) {
  BigInt s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

FrequencyVector FrequencyVector::exact(std::vector<Rational> entries) {
  if (entries.empty()) throw DomainError("frequency vector must have d >= 1");
  FrequencyVector w;
  w.exact_ = true;
  for (const auto& e : entries)
    if (e <= 0) throw DomainError("frequencies must be strictly positive");
  w.rationals_ = std::move(entries);
  for (const auto& e : w.rationals_) w.values_.push_back(to_double(e));
  return w;
}

FrequencyVector FrequencyVector::approximate(std::vector<double> entries) {
  if (entries.empty()) throw DomainError("frequency vector must have d >= 1");
  for (double e : entries)
    if (!(e > 0.0) || !std::isfinite(e)) throw DomainError("frequencies must be strictly positive");
  FrequencyVector w;
  w.exact_ = false;
  w.values_ = std::move(entries);
  return w;
}

FrequencyVector FrequencyVector::parse(const std::vector<std::string>& entries) {
  const bool any_decimal = std::any_of(entries.begin(), entries.end(), looks_decimal);
  if (any_decimal) {
    std::vector<double> v;
    for (const auto& s : entries) {
      if (s.find('/') != std::string::npos) {
        v.push_back(to_double(parse_rational(s)));
        continue;
      }
      std::size_t used = 0;
      double x = 0.0;
      try {
        x = std::stod(s, &used);
      } catch (const std::exception&) {
        throw DomainError("cannot parse frequency '" + s + "'");
      }
      if (used != s.size()) throw DomainError("cannot parse frequency '" + s + "'");
      v.push_back(x);
    }
    return approximate(std::move(v));
  }
  std::vector<Rational> r;
  for (const auto& s : entries) r.push_back(parse_rational(s));
  return exact(std::move(r));
}

const std::vector<Rational>& FrequencyVector::rationals() const {
  if (!exact_) throw DomainError("frequency vector is in approximate mode");
  return rationals_;
}

double FrequencyVector::dot(std::span<const long long> k) const {
  if (static_cast<int>(k.size()) != dim()) throw DomainError("dimension mismatch in ω·k");
  double s = 0.0;
  for (std::size_t j = 0; j < k.size(); ++j) s += values_[j] * static_cast<double>(k[j]);
  return s;
}

Rational FrequencyVector::dot_exact(std::span<const long long> k) const {
  if (static_cast<int>(k.size()) != dim()) throw DomainError("dimension mismatch in ω·k");
  const auto& r = rationals();
  Rational s = 0;
  for (std::size_t j = 0; j < k.size(); ++j) s += r[j] * k[j];
  return s;
}

BigInt FrequencyVector::denominator_lcm() const {
  BigInt q = 1;
  for (const auto& r : rationals()) q = boost::multiprecision::lcm(q, denominator(r));
  return q;
}

std::vector<std::string> FrequencyVector::to_strings() const {
  std::vector<std::string> out;
  if (exact_) {
    for (const auto& r : rationals_) {
      std::ostringstream os;
      os << numerator(r);
      if (denominator(r) != 1) os << '/' << denominator(r);
      out.push_back(os.str());
    }
  } else {
    for (double v : values_) {
      std::ostringstream os;
      os.precision(17);
      os << v;
      std::string s = os.str();
      if (!looks_decimal(s)) s += ".0";
      out.push_back(s);
    }
  }
  return out;
}

bool operator==(const FrequencyVector& a, const FrequencyVector& b) {
  if (a.exact_ != b.exact_) return false;
  return a.exact_ ? a.rationals_ == b.rationals_ : a.values_ == b.values_;
}

std::vector<IntVector> ResonanceModule::basis_ll() const {
  std::vector<IntVector> out;
  for (const auto& row : basis) {
    IntVector v;
    for (const auto& e : row) {
      if (abs_big(e) > BigInt(std::numeric_limits<long long>::max()))
        throw DomainError("resonance basis entry exceeds 64-bit range");
      v.push_back(e.convert_to<long long>());
    }
    out.push_back(std::move(v));
  }
  return out;
}

namespace lattice {

std::vector<BigIntVector> integer_kernel(const std::vector<BigIntVector>& rows, int dim) {
  const auto n = static_cast<std::size_t>(dim);
  // Column operations on M are mirrored on U (columns of U are the
  // transformed unit vectors); U stays unimodular.
  std::vector<BigIntVector> M = rows;
  std::vector<BigIntVector> U(n, BigIntVector(n, 0));
  for (std::size_t i = 0; i < n; ++i) U[i][i] = 1;

  auto col_axpy = [&](std::size_t dst, std::size_t src, const BigInt& f) {
    for (auto& r : M) r[dst] -= f * r[src];
    for (auto& r : U) r[dst] -= f * r[src];
  };
  auto col_swap = [&](std::size_t a, std::size_t b) {
    for (auto& r : M) std::swap(r[a], r[b]);
    for (auto& r : U) std::swap(r[a], r[b]);
  };

  std::size_t pivot = 0;
  for (std::size_t i = 0; i < M.size() && pivot < n; ++i) {
    while (true) {
      std::size_t best = n;
      for (std::size_t c = pivot; c < n; ++c) {
        if (M[i][c] == 0) continue;
        if (best == n || abs_big(M[i][c]) < abs_big(M[i][best])) best = c;
      }
      if (best == n) break;
      bool reduced = true;
      for (std::size_t c = pivot; c < n; ++c) {
        if (c == best || M[i][c] == 0) continue;
        const BigInt f = M[i][c] / M[i][best];
        col_axpy(c, best, f);
        if (M[i][c] != 0) reduced = false;
      }
      if (reduced) {
        col_swap(pivot, best);
        ++pivot;
        break;
      }
    }
  }
  std::vector<BigIntVector> kernel;
  for (std::size_t c = pivot; c < n; ++c) {
    BigIntVector v(n);
    for (std::size_t r = 0; r < n; ++r) v[r] = U[r][c];
    normalize_sign(v);
    kernel.push_back(std::move(v));
  }
  size_reduce(kernel);
  return kernel;
}

std::vector<BigIntVector> lattice_basis(const std::vector<BigIntVector>& generators, int dim) {
  const auto n = static_cast<std::size_t>(dim);
  std::vector<BigIntVector> R = generators;
  std::size_t top = 0;
  for (std::size_t c = 0; c < n && top < R.size(); ++c) {
    while (true) {
      std::size_t best = R.size();
      for (std::size_t r = top; r < R.size(); ++r) {
        if (R[r][c] == 0) continue;
        if (best == R.size() || abs_big(R[r][c]) < abs_big(R[best][c])) best = r;
      }
      if (best == R.size()) break;
      bool reduced = true;
      for (std::size_t r = top; r < R.size(); ++r) {
        if (r == best || R[r][c] == 0) continue;
        const BigInt f = R[r][c] / R[best][c];
        for (std::size_t j = 0; j < n; ++j) R[r][j] -= f * R[best][j];
        if (R[r][c] != 0) reduced = false;
      }
      if (reduced) {
        std::swap(R[top], R[best]);
        ++top;
        break;
      }
    }
  }
  R.resize(top);
  for (auto& v : R) normalize_sign(v);
  size_reduce(R);
  return R;
}

void size_reduce(std::vector<BigIntVector>& basis) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < basis.size(); ++i) {
      for (std::size_t j = 0; j < basis.size(); ++j) {
        if (i == j) continue;
        const BigInt bj2 = dot_big(basis[j], basis[j]);
        if (bj2 == 0) continue;
        const BigInt num = dot_big(basis[i], basis[j]);
        // nearest integer to num / bj2
        BigInt mu = (2 * abs_big(num) + bj2) / (2 * bj2);
        if (num < 0) mu = -mu;
        if (mu == 0) continue;
        BigIntVector cand = basis[i];
        for (std::size_t k = 0; k < cand.size(); ++k) cand[k] -= mu * basis[j][k];
        if (dot_big(cand, cand) < dot_big(basis[i], basis[i])) {
          basis[i] = std::move(cand);
          changed = true;
        }
      }
    }
  }
  for (auto& v : basis) normalize_sign(v);
  std::stable_sort(basis.begin(), basis.end(), [](const BigIntVector& a, const BigIntVector& b) {
    const BigInt na = dot_big(a, a), nb = dot_big(b, b);
    if (na != nb) return na < nb;
    return a > b;
  });
}

}  // namespace lattice

ResonanceModule resonance_module(const FrequencyVector& omega) {
  if (!omega.is_exact())
    throw DomainError("resonance_module needs exact frequencies; use detect_resonances_approx");
  const BigInt q = omega.denominator_lcm();
  BigIntVector row;
  for (const auto& r : omega.rationals()) row.push_back(numerator(r) * (q / denominator(r)));
  ResonanceModule m;
  m.dim = omega.dim();
  m.basis = lattice::integer_kernel({row}, omega.dim());
  m.approximate = false;
  return m;
}

ResonanceModule detect_resonances_approx(const FrequencyVector& omega, int K, double tol) {
  if (omega.is_exact()) throw DomainError("detect_resonances_approx expects approximate mode");
  if (K < 1) throw DomainError("search radius K must be >= 1");
  if (!(tol > 0.0)) throw DomainError("resonance tolerance must be > 0");
  std::vector<BigIntVector> gens;
  for_each_box_vector(omega.dim(), K, [&](const IntVector& k) {
    if (std::all_of(k.begin(), k.end(), [](long long x) { return x == 0; })) return;
    if (std::abs(omega.dot(k)) <= tol) gens.emplace_back(k.begin(), k.end());
  });
  ResonanceModule m;
  m.dim = omega.dim();
  m.approximate = true;
  m.basis = lattice::lattice_basis(gens, omega.dim());
  if (m.rank() > omega.dim() - 1)
    throw DomainError("tolerance too coarse: detected resonances span all of Z^d");
  return m;
}

DiophantineEstimate diophantine_constants(const FrequencyVector& omega, int K) {
  const BigInt q = omega.denominator_lcm();
  DiophantineEstimate est;
  est.C = q.convert_to<double>();
  est.nu = 0.0;
  est.exact = true;
  est.search_radius = K;
  est.verified = true;
  const Rational floor_value(1, q);
  Rational best = -1;
  for_each_box_vector(omega.dim(), K, [&](const IntVector& k) {
    const Rational w = omega.dot_exact(k);
    if (w == 0) return;
    const Rational a = w < 0 ? Rational(-w) : w;
    if (best < 0 || a < best) best = a;
    if (a < floor_value) est.verified = false;
  });
  est.min_nonresonant = best < 0 ? 0.0 : to_double(best);
  return est;
}

bool is_resonant(const ResonanceModule& module, std::span<const long long> k) {
  if (static_cast<int>(k.size()) != module.dim) throw DomainError("dimension mismatch in is_resonant");
  const std::size_t n = k.size();
  const std::size_t r = module.basis.size();
  if (r == 0) return std::all_of(k.begin(), k.end(), [](long long x) { return x == 0; });
  // Solve B^T c = k over the rationals, then require integral c.
  std::vector<std::vector<Rational>> A(n, std::vector<Rational>(r + 1));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < r; ++j) A[i][j] = Rational(module.basis[j][i]);
    A[i][r] = Rational(k[i]);
  }
  std::size_t row = 0;
  std::vector<std::size_t> pivots;
  for (std::size_t col = 0; col < r && row < n; ++col) {
    std::size_t p = row;
    while (p < n && A[p][col] == 0) ++p;
    if (p == n) continue;
    std::swap(A[p], A[row]);
    const Rational piv = A[row][col];
    for (auto& e : A[row]) e /= piv;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == row || A[i][col] == 0) continue;
      const Rational f = A[i][col];
      for (std::size_t j = 0; j <= r; ++j) A[i][j] -= f * A[row][j];
    }
    pivots.push_back(col);
    ++row;
  }
  for (std::size_t i = row; i < n; ++i)
    if (A[i][r] != 0) return false;
  for (std::size_t i = 0; i < row; ++i)
    if (denominator(A[i][r]) != 1) return false;
  return true;
}

std::vector<IntVector> torus_directions(const ResonanceModule& module) {
  std::vector<BigIntVector> dirs;
  if (module.rank() == 0) {
    for (int j = 0; j < module.dim; ++j) {
      BigIntVector e(static_cast<std::size_t>(module.dim), 0);
      e[static_cast<std::size_t>(j)] = 1;
      dirs.push_back(std::move(e));
    }
  } else {
    dirs = lattice::integer_kernel(module.basis, module.dim);
  }
  ResonanceModule tmp{module.dim, dirs, module.approximate};
  return tmp.basis_ll();
}

}  // namespace oscgap
