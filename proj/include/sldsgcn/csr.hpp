#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <vector>

namespace sldsgcn {

/// Compressed sparse row matrix with double entries. Column indices within
/// each row are strictly increasing. Immutable once built.
struct CsrMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<int> row_ptr;   // size rows + 1
  std::vector<int> col_idx;   // size nnz
  std::vector<double> values; // size nnz

  int nnz() const { return static_cast<int>(col_idx.size()); }

  /// Dense product this * b.
  Eigen::MatrixXd multiply(const Eigen::MatrixXd& b) const;

  /// Dense copy, for tests and small oracles.
  Eigen::MatrixXd to_dense() const;

  CsrMatrix transposed() const;

  /// Builds from (row, col, value) triplets. Duplicate coordinates are
  /// merged by summation.
  static CsrMatrix from_triplets(int rows, int cols,
                                 std::vector<std::array<double, 3>> triplets);

  /// Builds from a dense matrix keeping nonzero entries.
  static CsrMatrix from_dense(const Eigen::MatrixXd& dense);
};

}  // namespace sldsgcn
