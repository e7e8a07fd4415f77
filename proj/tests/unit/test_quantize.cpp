#include "doctest.h"

#include <Eigen/SVD>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "oscgap/quantize.hpp"

using namespace oscgap;
using namespace testing;

namespace {

double max_abs(const Eigen::MatrixXcd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

Eigen::MatrixXcd sub(const Eigen::MatrixXcd& m, const std::vector<std::size_t>& idx) {
  Eigen::MatrixXcd out(idx.size(), idx.size());
  for (std::size_t c = 0; c < idx.size(); ++c)
    for (std::size_t r = 0; r < idx.size(); ++r) out(r, c) = m(idx[r], idx[c]);
  return out;
}

// Normal symbol by the closed form exp((ħ/2) Σ_j ∂_{ζ_j}∂_{ζ̄_j}) applied to the Weyl symbol.
ExactWickSymbol normal_by_heat_flow(const ExactWickSymbol& a, const GaussRational& hbar) {
  ExactWickSymbol out = a, term = a;
  const GaussRational half = hbar * GaussRational(Rational(1, 2));
  for (int k = 1; !term.is_zero(); ++k) {
    ExactWickSymbol lap(a.dim());
    for (int j = 0; j < a.dim(); ++j) lap += term.derivative_zeta(j).derivative_zeta_bar(j);
    term = lap * (half / GaussRational(k));
    out += term;
  }
  return out;
}

// ⟨m|D(α)|n⟩ for the unit-ħ displacement D(α) = exp(α b† − ᾱ b).
Complex displacement_element(int m, int n, Complex alpha) {
  const double x = std::norm(alpha);
  if (m >= n) {
    const double pref = std::sqrt(std::tgamma(n + 1.0) / std::tgamma(m + 1.0)) * std::exp(-x / 2);
    return pref * std::pow(alpha, m - n) * std::assoc_laguerre(n, m - n, x);
  }
  const double pref = std::sqrt(std::tgamma(m + 1.0) / std::tgamma(n + 1.0)) * std::exp(-x / 2);
  return pref * std::pow(-std::conj(alpha), n - m) * std::assoc_laguerre(m, n - m, x);
}

}  // namespace

TEST_CASE("harmonic matrix") {
  auto b = make_basis(FockBasis::degree_cap(1, 0.5, 3));
  auto Hm = harmonic_matrix(std::vector<double>{1.0}, b);
  for (int n = 0; n < 4; ++n) CHECK(Hm.matrix(n, n).real() == doctest::Approx(0.25 + 0.5 * n));
  auto b2 = make_basis(FockBasis::degree_cap(2, 1.0, 2));
  auto H2 = harmonic_matrix(std::vector<double>{1.0, 2.0}, b2);
  CHECK(H2.matrix(*b2->index_of({0, 0}), *b2->index_of({0, 0})).real() == doctest::Approx(1.5));

  // commutes with the quantization of flow-invariant symbols
  std::mt19937_64 rng(201);
  auto w = FrequencyVector::parse({"1", "2"});
  auto module = resonance_module(w);
  auto wb = make_basis(FockBasis::energy_window(w, 0.1, 1.5, 0.8));
  auto Hw = harmonic_matrix(w, wb);
  for (int i = 0; i < 10; ++i) {
    auto a = to_floating(average(random_exact(rng, 2, 4, 10), module));
    auto A = op_weyl(a, wb).matrix;
    Eigen::MatrixXcd comm = Hw.matrix * A - A * Hw.matrix;
    CHECK(max_abs(sub(comm, wb->interior_indices(4))) <= 1e-12 * std::max(1.0, max_abs(A)));
  }
}

TEST_CASE("basis construction") {
  auto cap = FockBasis::degree_cap(2, 0.1, 3);
  CHECK(cap.size() == 10);
  CHECK(cap.state(0) == Occupation{0, 0});
  CHECK(cap.state(9) == Occupation{3, 0});
  auto win = FockBasis::energy_window(std::vector<double>{1.0, 1.0}, 0.1, 1.0, 0.25);
  for (std::size_t i = 0; i < win.size(); ++i) CHECK(std::abs(win.energy(i) - 1.0) <= 0.25 + 1e-12);
  // every state in the window is listed
  int count = 0;
  for (int n1 = 0; n1 < 20; ++n1)
    for (int n2 = 0; n2 < 20; ++n2)
      if (std::abs(0.1 * (n1 + n2 + 1) - 1.0) <= 0.25) ++count;
  CHECK(win.size() == static_cast<std::size_t>(count));
  CHECK_THROWS_AS(FockBasis::energy_window(std::vector<double>{1.0}, 0.1, -5.0, 0.1), DomainError);
  CHECK(cap.interior(1)[*cap.index_of({0, 0})]);
  CHECK_FALSE(cap.interior(1)[*cap.index_of({3, 0})]);
}

TEST_CASE("Weyl quantization of polynomials") {
  auto b = make_basis(FockBasis::degree_cap(1, 0.3, 12));
  auto n = op_weyl(WickSymbol::monomial({1}, {1}, 1.0), b);
  CHECK(max_abs(n.matrix - harmonic_matrix(std::vector<double>{1.0}, b).matrix) <= 1e-15);
  CHECK(max_abs(op_weyl(WickSymbol::constant(1, 1.0), b).matrix - Eigen::MatrixXcd::Identity(13, 13)) == 0.0);

  // the normal-ordering recursion equals the heat-flow closed form
  std::mt19937_64 rng(203);
  const GaussRational h(Rational(3, 10));
  for (int i = 0; i < 30; ++i) {
    auto a = random_exact(rng, 2, 5, 6);
    CHECK(normal_order(a, h) == normal_by_heat_flow(a, h));
  }
  // real symbols give Hermitian matrices
  auto b2 = make_basis(FockBasis::degree_cap(2, 0.2, 8));
  for (int i = 0; i < 10; ++i) {
    auto a = random_wick(rng, 2, 4, 6).real_part();
    CHECK(op_weyl(a, b2).hermitian_defect() <= 1e-13 * a.l1_norm());
  }
}

TEST_CASE("convention oracle: Op(a♯b) = Op(a)Op(b) on the interior") {
  const double hbar = 0.1;
  auto b = make_basis(FockBasis::degree_cap(1, hbar, 39));
  const auto inner = b->interior_indices(3);
  std::mt19937_64 rng(207);
  double worst = 0.0;
  for (int i = 0; i < 30; ++i) {
    auto x = random_wick(rng, 1, 3, 4), y = random_wick(rng, 1, 3, 4);
    Eigen::MatrixXcd lhs = op_weyl(moyal(x, y, Complex(hbar)), b).matrix;
    Eigen::MatrixXcd rhs = op_weyl(x, b).matrix * op_weyl(y, b).matrix;
    worst = std::max(worst, max_abs(sub(lhs - rhs, inner)) / max_abs(sub(rhs, inner)));
  }
  CHECK(worst <= 1e-10);

  // [ζ, ζ̄]_ħ = ħ is realized by [a, a†] = ħ
  auto small = make_basis(FockBasis::degree_cap(1, hbar, 9));
  Eigen::MatrixXcd a = op_weyl(WickSymbol::zeta(1, 0), small).matrix;
  Eigen::MatrixXcd ad = op_weyl(WickSymbol::zeta_bar(1, 0), small).matrix;
  Eigen::MatrixXcd comm = a * ad - ad * a;
  const auto in = small->interior_indices(1);
  CHECK(max_abs(sub(comm, in) - hbar * Eigen::MatrixXcd::Identity(in.size(), in.size())) <= 1e-14);
  auto sym = commutator_h(WickSymbol::zeta(1, 0), WickSymbol::zeta_bar(1, 0), Complex(hbar));
  CHECK(std::abs(sym.coefficient({0}, {0}) - hbar) <= 1e-15);

  // Op({a,b}) = (i/ħ)[Op(a), Op(b)] + O(ħ²)
  auto x = WickSymbol::monomial({2}, {1}, 1.0), y = WickSymbol::monomial({1}, {2}, Complex(0.5, 0.3));
  double prev = 0.0;
  for (double hh : {0.1, 0.05}) {
    auto bb = make_basis(FockBasis::degree_cap(1, hh, 30));
    const auto idx = bb->interior_indices(3);
    Eigen::MatrixXcd X = op_weyl(x, bb).matrix, Y = op_weyl(y, bb).matrix;
    Eigen::MatrixXcd lhs = op_weyl(poisson(x, y), bb).matrix;
    Eigen::MatrixXcd rhs = Complex(0, 1.0 / hh) * (X * Y - Y * X);
    // compare on a fixed-energy block (|ζ|² ≲ 1)
    std::vector<std::size_t> low;
    for (std::size_t k : idx)
      if (hh * (bb->state(k)[0] + 0.5) <= 1.0) low.push_back(k);
    const double err = max_abs(sub(lhs - rhs, low));
    if (prev > 0.0) CHECK(err / prev == doctest::Approx(0.25).epsilon(0.05));
    prev = err;
  }
}

TEST_CASE("plane-wave quantization") {
  auto b = make_basis(FockBasis::degree_cap(1, 0.1, 59));
  auto id = op_weyl_planewave(PlaneWaveSymbol::constant(1, 1.0), b);
  CHECK(max_abs(id.matrix - Eigen::MatrixXcd::Identity(60, 60)) == 0.0);

  PlaneWaveSymbol::Wave w{0.6, 0.8}, wp{-0.3, 1.1};
  auto U = op_weyl_planewave(PlaneWaveSymbol::wave(w, 1.0), b);
  CHECK(U.warnings.empty());
  std::vector<std::size_t> inner;
  for (std::size_t i = 0; i < 40; ++i) inner.push_back(i);
  Eigen::MatrixXcd UU = U.matrix.adjoint() * U.matrix;
  CHECK(max_abs(sub(UU, inner) - Eigen::MatrixXcd::Identity(40, 40)) <= 1e-8);

  // closed-form Laguerre matrix elements of the displacement
  const Complex alpha = Complex(-0.8, 0.6) * std::sqrt(0.05);
  double worst = 0.0;
  for (int m = 0; m < 30; ++m)
    for (int n = 0; n < 30; ++n) worst = std::max(worst, std::abs(U.matrix(m, n) - displacement_element(m, n, alpha)));
  CHECK(worst <= 1e-10);

  // composition law with the Moyal phase
  auto V = op_weyl_planewave(PlaneWaveSymbol::wave(wp, 1.0), b);
  auto prod = moyal(PlaneWaveSymbol::wave(w, 1.0), PlaneWaveSymbol::wave(wp, 1.0), 0.1);
  auto W = op_weyl_planewave(prod, b);
  CHECK(max_abs(sub(U.matrix * V.matrix - W.matrix, inner)) <= 1e-8);

  // a coherent displacement that does not fit is reported
  auto tiny = make_basis(FockBasis::degree_cap(1, 1.0, 4));
  auto big = op_weyl_planewave(PlaneWaveSymbol::wave({3.0, 0.0}, 1.0), tiny);
  CHECK_FALSE(big.warnings.empty());

  // ‖Op(a)‖ ≤ ‖a‖_0 since each displacement is a contraction on the truncation
  std::mt19937_64 rng(211);
  for (int i = 0; i < 10; ++i) {
    auto a = random_planewave(rng, 1, 3);
    CHECK(operator_norm(op_weyl_planewave(a, b)) <= norm_As(a, 0.0) * (1 + 1e-8));
  }
}

TEST_CASE("nonselfadjoint model operator") {
  const double hbar = 0.1;
  auto b = make_basis(FockBasis::energy_window(std::vector<double>{1.0, 1.0}, hbar, 1.0, 0.3));
  auto H = WickSymbol::harmonic({Complex(1.0), Complex(1.0)});
  auto V = WickSymbol::monomial({1, 0}, {0, 1}, 1.0) + WickSymbol::monomial({0, 1}, {1, 0}, 1.0);
  auto A = WickSymbol::monomial({1, 0}, {1, 0}, 1.0);
  auto P0 = build_P(H, V, WickSymbol(2), 0.0, hbar, b);
  CHECK(P0.hermitian_defect() <= 1e-15);
  auto P = build_P(H, V, A, hbar, hbar, b);
  Eigen::MatrixXcd anti = (P.matrix - P.matrix.adjoint()) / 2.0;
  CHECK(max_abs(anti - Complex(0, hbar) * op_weyl(A, b).matrix) <= 1e-15);
  Eigen::MatrixXcd herm = (P.matrix + P.matrix.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm);
  CHECK(es.info() == Eigen::Success);
  CHECK_THROWS_AS(build_P(H, V, A, hbar, 0.2, b), DomainError);
  CHECK_THROWS_AS(build_P(H, WickSymbol::zeta(2, 0), A, hbar, hbar, b), DomainError);
}

TEST_CASE("operator norm") {
  CHECK(operator_norm(Eigen::MatrixXcd::Identity(7, 7)) == doctest::Approx(1.0));
  Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(4, 4);
  for (int i = 0; i < 4; ++i) d(i, i) = 0.25 + 0.5 * i;
  CHECK(operator_norm(d) == doctest::Approx(1.75));
  std::mt19937_64 rng(213);
  std::normal_distribution<double> g;
  for (int t = 0; t < 5; ++t) {
    Eigen::MatrixXcd m(50, 50);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = Complex(g(rng), g(rng));
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
    CHECK(std::abs(operator_norm(m) - svd.singularValues()(0)) <= 1e-7 * svd.singularValues()(0));
  }
}
