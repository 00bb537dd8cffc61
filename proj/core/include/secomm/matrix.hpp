#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace secomm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Compressed-row sparse matrix; the storage form required for adjacency data.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

using Index = Eigen::Index;

inline double density(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return static_cast<double>((m.array() != 0.0).count()) / static_cast<double>(m.size());
}

inline SparseMatrix to_sparse(const Matrix& m) {
  SparseMatrix out(m.rows(), m.cols());
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>((m.array() != 0.0).count()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      if (m(i, j) != 0.0) trips.emplace_back(i, j, m(i, j));
  out.setFromTriplets(trips.begin(), trips.end());
  out.makeCompressed();
  return out;
}

}  // namespace secomm
