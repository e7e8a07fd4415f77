#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace oscgap {

/// Connected components of the graph with an edge i–j whenever M_ij or M_ji
/// is nonzero. Each component is sorted; components are ordered by first index.
std::vector<std::vector<std::size_t>> connected_blocks(const Eigen::MatrixXcd& M);

struct EigenDecomposition {
  Eigen::VectorXcd values;
  /// Unit-norm right eigenvectors as columns (empty when not requested).
  Eigen::MatrixXcd vectors;
  int blocks = 0;
};

/// Dense nonselfadjoint eigendecomposition (LAPACK zgeev), done block by block
/// on the connected components, each shifted by the mean of its diagonal.
EigenDecomposition eigen_decompose(const Eigen::MatrixXcd& M, bool want_vectors = true);

/// Singular values in descending order (LAPACK zgesdd).
Eigen::VectorXd singular_values(const Eigen::MatrixXcd& M);

/// σ_min(M − λ) as the minimum over the given diagonal blocks (which must
/// cover a block-diagonal permutation of M).
double sigma_min_shifted(const Eigen::MatrixXcd& M, std::complex<double> lambda,
                         const std::vector<std::vector<std::size_t>>& blocks);

}  // namespace oscgap
