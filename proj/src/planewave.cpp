#include "oscgap/planewave.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "oscgap/error.hpp"

namespace oscgap {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

PlaneWaveSymbol::Wave normalized(PlaneWaveSymbol::Wave w) {
  for (auto& x : w) x += 0.0;  // folds −0 into +0
  return w;
}

double euclid(const PlaneWaveSymbol::Wave& w) {
  double s = 0.0;
  for (double x : w) s += x * x;
  return std::sqrt(s);
}

PlaneWaveSymbol::Wave rotate(const PlaneWaveSymbol::Wave& w, std::span<const double> tau) {
  PlaneWaveSymbol::Wave out(w.size());
  for (std::size_t j = 0; j < tau.size(); ++j) {
    const double u = w[2 * j], v = w[2 * j + 1];
    if (u == 0.0 && v == 0.0) continue;
    const double c = std::cos(tau[j]), s = std::sin(tau[j]);
    out[2 * j] = c * u - s * v;
    out[2 * j + 1] = s * u + c * v;
  }
  return out;
}

// Calls f(τ, weight) over an equal-weight tensor grid in the given directions.
template <class F>
void for_each_torus_node(const std::vector<IntVector>& dirs, int dim, int N, F&& f) {
  const std::size_t m = dirs.size();
  std::vector<int> idx(m, 0);
  std::vector<double> tau(static_cast<std::size_t>(dim));
  const double weight = std::pow(1.0 / N, static_cast<double>(m));
  while (true) {
    std::fill(tau.begin(), tau.end(), 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      const double theta = kTwoPi * idx[i] / N;
      for (int j = 0; j < dim; ++j) tau[static_cast<std::size_t>(j)] += theta * static_cast<double>(dirs[i][static_cast<std::size_t>(j)]);
    }
    f(static_cast<const std::vector<double>&>(tau), weight);
    std::size_t i = 0;
    while (i < m && ++idx[i] == N) {
      idx[i] = 0;
      ++i;
    }
    if (i == m) return;
  }
}

std::vector<IntVector> unit_directions(int dim) {
  std::vector<IntVector> dirs(static_cast<std::size_t>(dim), IntVector(static_cast<std::size_t>(dim), 0));
  for (int j = 0; j < dim; ++j) dirs[static_cast<std::size_t>(j)][static_cast<std::size_t>(j)] = 1;
  return dirs;
}

PlaneWaveSymbol quadrature_average(const PlaneWaveSymbol& a, const std::vector<IntVector>& dirs, int N) {
  PlaneWaveSymbol out(a.dim());
  for_each_torus_node(dirs, a.dim(), N, [&](const std::vector<double>& tau, double w) {
    for (const auto& [wave, c] : a.terms()) out.add_term(rotate(wave, tau), c * w);
  });
  return out.pruned(1e-15 * std::max(1.0, a.l1_norm()));
}

}  // namespace

PlaneWaveSymbol::PlaneWaveSymbol(int dim) : dim_(dim) {
  if (dim < 1) throw DomainError("plane-wave symbol needs d >= 1");
}

PlaneWaveSymbol PlaneWaveSymbol::constant(int dim, Complex c) {
  PlaneWaveSymbol p(dim);
  p.add_term(Wave(2 * static_cast<std::size_t>(dim), 0.0), c);
  return p;
}

PlaneWaveSymbol PlaneWaveSymbol::wave(const Wave& w, Complex c) {
  if (w.empty() || w.size() % 2 != 0) throw DomainError("plane-wave frequency must have even length 2d");
  PlaneWaveSymbol p(static_cast<int>(w.size() / 2));
  p.add_term(w, c);
  return p;
}

void PlaneWaveSymbol::add_term(Wave w, Complex c) {
  if (static_cast<int>(w.size()) != 2 * dim_) throw DomainError("plane-wave frequency has wrong dimension");
  for (double x : w)
    if (!std::isfinite(x)) throw DomainError("plane-wave frequency must be finite");
  if (c == Complex{}) return;
  auto [it, inserted] = terms_.try_emplace(normalized(std::move(w)), c);
  if (!inserted) {
    it->second += c;
    if (it->second == Complex{}) terms_.erase(it);
  }
}

Complex PlaneWaveSymbol::coefficient(const Wave& w) const {
  auto it = terms_.find(normalized(w));
  return it == terms_.end() ? Complex{} : it->second;
}

Complex PlaneWaveSymbol::eval(const PhasePoint& z) const {
  if (z.dim() != dim_) throw DomainError("dimension mismatch in eval");
  Complex sum{};
  for (const auto& [w, c] : terms_) {
    double phase = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) phase += w[i] * z.z[i];
    sum += c * std::polar(1.0, phase);
  }
  return sum;
}

bool PlaneWaveSymbol::is_real(double rel_tol) const {
  const double scale = std::max(1.0, l1_norm());
  for (const auto& [w, c] : terms_) {
    Wave neg(w);
    for (auto& x : neg) x = -x;
    if (std::abs(coefficient(neg) - std::conj(c)) > rel_tol * scale) return false;
  }
  return true;
}

PlaneWaveSymbol PlaneWaveSymbol::conj() const {
  PlaneWaveSymbol out(dim_);
  for (const auto& [w, c] : terms_) {
    Wave neg(w);
    for (auto& x : neg) x = -x;
    out.add_term(neg, std::conj(c));
  }
  return out;
}

double PlaneWaveSymbol::l1_norm() const {
  double s = 0.0;
  for (const auto& [w, c] : terms_) s += std::abs(c);
  return s;
}

PlaneWaveSymbol PlaneWaveSymbol::pruned(double tol) const {
  PlaneWaveSymbol out(dim_);
  for (const auto& [w, c] : terms_)
    if (std::abs(c) > tol) out.terms_.emplace(w, c);
  return out;
}

void PlaneWaveSymbol::check_dim(const PlaneWaveSymbol& o) const {
  if (o.dim_ != dim_) throw DomainError("dimension mismatch between symbols");
}

PlaneWaveSymbol& PlaneWaveSymbol::operator+=(const PlaneWaveSymbol& o) {
  check_dim(o);
  for (const auto& [w, c] : o.terms_) add_term(w, c);
  return *this;
}

PlaneWaveSymbol& PlaneWaveSymbol::operator-=(const PlaneWaveSymbol& o) {
  check_dim(o);
  for (const auto& [w, c] : o.terms_) add_term(w, -c);
  return *this;
}

PlaneWaveSymbol& PlaneWaveSymbol::operator*=(Complex s) {
  if (s == Complex{}) {
    terms_.clear();
    return *this;
  }
  for (auto& [w, c] : terms_) c *= s;
  return *this;
}

PlaneWaveSymbol operator*(const PlaneWaveSymbol& a, const PlaneWaveSymbol& b) {
  a.check_dim(b);
  PlaneWaveSymbol out(a.dim());
  for (const auto& [wa, ca] : a.terms())
    for (const auto& [wb, cb] : b.terms()) {
      PlaneWaveSymbol::Wave w(wa.size());
      for (std::size_t i = 0; i < w.size(); ++i) w[i] = wa[i] + wb[i];
      out.add_term(std::move(w), ca * cb);
    }
  return out;
}

double symplectic(std::span<const double> w, std::span<const double> wp) {
  if (w.size() != wp.size()) throw DomainError("dimension mismatch in symplectic product");
  double s = 0.0;
  for (std::size_t j = 0; j + 1 < w.size(); j += 2) s += w[j + 1] * wp[j] - w[j] * wp[j + 1];
  return s;
}

PlaneWaveSymbol moyal(const PlaneWaveSymbol& a, const PlaneWaveSymbol& b, double hbar) {
  a.check_dim(b);
  PlaneWaveSymbol out(a.dim());
  for (const auto& [wa, ca] : a.terms())
    for (const auto& [wb, cb] : b.terms()) {
      PlaneWaveSymbol::Wave w(wa.size());
      for (std::size_t i = 0; i < w.size(); ++i) w[i] = wa[i] + wb[i];
      out.add_term(std::move(w), ca * cb * std::polar(1.0, 0.5 * hbar * symplectic(wa, wb)));
    }
  return out;
}

PlaneWaveSymbol commutator_h(const PlaneWaveSymbol& a, const PlaneWaveSymbol& b, double hbar) {
  a.check_dim(b);
  PlaneWaveSymbol out(a.dim());
  for (const auto& [wa, ca] : a.terms())
    for (const auto& [wb, cb] : b.terms()) {
      PlaneWaveSymbol::Wave w(wa.size());
      for (std::size_t i = 0; i < w.size(); ++i) w[i] = wa[i] + wb[i];
      const double s = std::sin(0.5 * hbar * symplectic(wa, wb));
      out.add_term(std::move(w), ca * cb * Complex(0.0, 2.0 * s));
    }
  return out;
}

PlaneWaveSymbol poisson(const PlaneWaveSymbol& a, const PlaneWaveSymbol& b) {
  a.check_dim(b);
  PlaneWaveSymbol out(a.dim());
  for (const auto& [wa, ca] : a.terms())
    for (const auto& [wb, cb] : b.terms()) {
      PlaneWaveSymbol::Wave w(wa.size());
      for (std::size_t i = 0; i < w.size(); ++i) w[i] = wa[i] + wb[i];
      out.add_term(std::move(w), -symplectic(wa, wb) * ca * cb);
    }
  return out;
}

PlaneWaveSymbol flow_pullback(const PlaneWaveSymbol& a, std::span<const double> tau) {
  if (static_cast<int>(tau.size()) != a.dim()) throw DomainError("τ dimension mismatch");
  PlaneWaveSymbol out(a.dim());
  for (const auto& [w, c] : a.terms()) out.add_term(rotate(w, tau), c);
  return out;
}

double norm_As(const PlaneWaveSymbol& a, double s) {
  if (s < 0.0) throw DomainError("A_s norm needs s >= 0");
  double n = 0.0;
  for (const auto& [w, c] : a.terms()) n += std::abs(c) * std::exp(s * euclid(w));
  return n;
}

double norm_As(const WickSymbol&, double) {
  throw DomainError("polynomial symbols have no finite A_s norm");
}

PlaneWaveSymbol fourier_mode(const PlaneWaveSymbol& a, std::span<const long long> k, int N) {
  if (static_cast<int>(k.size()) != a.dim()) throw DomainError("mode index dimension mismatch");
  if (N < 1) throw DomainError("quadrature order must be positive");
  PlaneWaveSymbol out(a.dim());
  const double volume = std::pow(kTwoPi, a.dim());
  for_each_torus_node(unit_directions(a.dim()), a.dim(), N, [&](const std::vector<double>& tau, double w) {
    double phase = 0.0;
    for (std::size_t j = 0; j < k.size(); ++j) phase -= static_cast<double>(k[j]) * tau[j];
    const Complex weight = volume * w * std::polar(1.0, phase);
    for (const auto& [wave, c] : a.terms()) out.add_term(rotate(wave, tau), c * weight);
  });
  return out.pruned(1e-13 * volume * std::max(1.0, a.l1_norm()));
}

ArhoNorm norm_Arho_s(const PlaneWaveSymbol& a, const FrequencyVector& omega, double rho, double s, int Kmax,
                     double tail_tol, int N) {
  if (rho <= 0.0 || s <= 0.0) throw DomainError("A_{rho,s} norm needs rho > 0 and s > 0");
  if (!omega.is_exact()) throw DomainError("A_{rho,s} norm needs exact-mode frequencies");
  if (omega.dim() != a.dim()) throw DomainError("frequency dimension mismatch");
  if (Kmax < 0) throw DomainError("Kmax must be nonnegative");
  N = std::max(N, 2 * Kmax + 2);
  const double volume = std::pow(kTwoPi, a.dim());
  ArhoNorm out;
  out.Kmax = Kmax;
  out.quadrature_order = N;
  for_each_box_vector(a.dim(), Kmax, [&](const IntVector& k) {
    long long l1 = 0, linf = 0;
    for (long long x : k) {
      l1 += std::llabs(x);
      linf = std::max(linf, std::llabs(x));
    }
    const double term = norm_As(fourier_mode(a, k, N), s) * std::exp(rho * static_cast<double>(l1)) / volume;
    out.value += term;
    if (linf == Kmax) out.tail += term;
  });
  if (Kmax > 0 && out.tail > tail_tol * out.value)
    throw NumericError("Kmax too small for requested tail tolerance (outer shell carries " +
                       std::to_string(out.tail / out.value) + " of the norm)");
  return out;
}

PlaneWaveAverage average_planewave_quadrature(const PlaneWaveSymbol& a, const FrequencyVector& omega, int N) {
  if (N < 8) throw DomainError("quadrature order must be at least 8");
  if (omega.dim() != a.dim()) throw DomainError("frequency dimension mismatch");
  PlaneWaveAverage out;
  ResonanceModule module = omega.is_exact() ? resonance_module(omega) : detect_resonances_approx(omega, 8, 1e-9);
  out.approximate = module.approximate;
  out.order = N;
  out.d_omega = module.d_omega();
  const auto dirs = torus_directions(module);
  out.approximant = quadrature_average(a, dirs, N);

  const PlaneWaveSymbol fine = quadrature_average(a, dirs, 2 * N);
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  for (int i = 0; i < 16; ++i) {
    PhasePoint z = PhasePoint::zeros(a.dim());
    for (auto& x : z.z) x = unif(rng);
    out.error_estimate = std::max(out.error_estimate, std::abs(out.approximant.eval(z) - fine.eval(z)));
  }
  return out;
}

}  // namespace oscgap
