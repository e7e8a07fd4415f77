#include <complex>
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <algorithm>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

#include "oscgap/error.hpp"
#include "oscgap/linalg.hpp"

namespace oscgap {

namespace {

std::string diagnostics(const Eigen::MatrixXcd& M, lapack_int info, const char* routine) {
  std::ostringstream os;
  os << routine << " failed (info=" << info << ") on a " << M.rows() << "x" << M.cols()
     << " matrix, Frobenius norm " << M.norm() << ", max |entry| " << M.cwiseAbs().maxCoeff();
  return os.str();
}

Eigen::MatrixXcd gather(const Eigen::MatrixXcd& M, const std::vector<std::size_t>& idx) {
  const auto n = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXcd B(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      B(i, j) = M(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(i)]),
                  static_cast<Eigen::Index>(idx[static_cast<std::size_t>(j)]));
  return B;
}

}  // namespace

std::vector<std::vector<std::size_t>> connected_blocks(const Eigen::MatrixXcd& M) {
  if (M.rows() != M.cols()) throw DomainError("connected_blocks needs a square matrix");
  const auto n = static_cast<std::size_t>(M.rows());
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i)
      if (i != j && M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) != std::complex<double>(0.0)) {
        const auto a = find(i), b = find(j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
  std::vector<std::vector<std::size_t>> out;
  std::vector<long long> slot(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = find(i);
    if (slot[r] < 0) {
      slot[r] = static_cast<long long>(out.size());
      out.emplace_back();
    }
    out[static_cast<std::size_t>(slot[r])].push_back(i);
  }
  return out;
}

EigenDecomposition eigen_decompose(const Eigen::MatrixXcd& M, bool want_vectors) {
  if (M.rows() != M.cols()) throw DomainError("eigen_decompose needs a square matrix");
  if (!M.allFinite()) throw NumericError("eigen_decompose: matrix has non-finite entries");
  const auto n = M.rows();
  EigenDecomposition out;
  out.values.resize(n);
  if (want_vectors) out.vectors = Eigen::MatrixXcd::Zero(n, n);
  const auto blocks = connected_blocks(M);
  out.blocks = static_cast<int>(blocks.size());
  Eigen::Index col = 0;
  for (const auto& idx : blocks) {
    Eigen::MatrixXcd B = gather(M, idx);
    const auto m = B.rows();
    const std::complex<double> shift = B.diagonal().mean();
    B.diagonal().array() -= shift;
    Eigen::VectorXcd w(m);
    Eigen::MatrixXcd vr(want_vectors ? m : 1, want_vectors ? m : 1);
    std::complex<double> dummy;
    const lapack_int info =
        LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', want_vectors ? 'V' : 'N', static_cast<lapack_int>(m), B.data(),
                      static_cast<lapack_int>(m), w.data(), &dummy, 1, vr.data(), static_cast<lapack_int>(want_vectors ? m : 1));
    if (info != 0) throw NumericError(diagnostics(gather(M, idx), info, "zgeev"));
    for (Eigen::Index k = 0; k < m; ++k) {
      out.values(col + k) = w(k) + shift;
      if (want_vectors)
        for (Eigen::Index r = 0; r < m; ++r)
          out.vectors(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(r)]), col + k) = vr(r, k);
    }
    col += m;
  }
  return out;
}

Eigen::VectorXd singular_values(const Eigen::MatrixXcd& M) {
  const auto m = M.rows(), n = M.cols();
  const auto k = std::min(m, n);
  Eigen::VectorXd s(k);
  if (k == 0) return s;
  Eigen::MatrixXcd A = M;
  std::complex<double> dummy;
  const lapack_int info = LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'N', static_cast<lapack_int>(m), static_cast<lapack_int>(n),
                                         A.data(), static_cast<lapack_int>(m), s.data(), &dummy, 1, &dummy, 1);
  if (info != 0) throw NumericError(diagnostics(M, info, "zgesdd"));
  return s;
}

double sigma_min_shifted(const Eigen::MatrixXcd& M, std::complex<double> lambda,
                         const std::vector<std::vector<std::size_t>>& blocks) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& idx : blocks) {
    Eigen::MatrixXcd B = gather(M, idx);
    B.diagonal().array() -= lambda;
    const auto s = singular_values(B);
    best = std::min(best, s(s.size() - 1));
  }
  return best;
}

}  // namespace oscgap
