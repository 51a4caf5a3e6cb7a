#include "sldsgcn/csr.hpp"

#include <algorithm>

#include "sldsgcn/errors.hpp"

namespace sldsgcn {

Eigen::MatrixXd CsrMatrix::multiply(const Eigen::MatrixXd& b) const {
  if (b.rows() != cols) {
    throw DimensionError("sparse multiply: " + std::to_string(rows) + "x" +
                         std::to_string(cols) + " * " +
                         std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()));
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows, b.cols());
  for (int r = 0; r < rows; ++r) {
    for (int p = row_ptr[r]; p < row_ptr[r + 1]; ++p) {
      out.row(r) += values[p] * b.row(col_idx[p]);
    }
  }
  return out;
}

Eigen::MatrixXd CsrMatrix::to_dense() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int p = row_ptr[r]; p < row_ptr[r + 1]; ++p) {
      out(r, col_idx[p]) += values[p];
    }
  }
  return out;
}

CsrMatrix CsrMatrix::transposed() const {
  CsrMatrix t;
  t.rows = cols;
  t.cols = rows;
  t.row_ptr.assign(cols + 1, 0);
  for (int c : col_idx) t.row_ptr[c + 1]++;
  for (int r = 0; r < cols; ++r) t.row_ptr[r + 1] += t.row_ptr[r];
  t.col_idx.resize(col_idx.size());
  t.values.resize(values.size());
  std::vector<int> cursor(t.row_ptr.begin(), t.row_ptr.end() - 1);
  for (int r = 0; r < rows; ++r) {
    for (int p = row_ptr[r]; p < row_ptr[r + 1]; ++p) {
      int pos = cursor[col_idx[p]]++;
      t.col_idx[pos] = r;
      t.values[pos] = values[p];
    }
  }
  return t;
}

CsrMatrix CsrMatrix::from_triplets(int rows, int cols,
                                   std::vector<std::array<double, 3>> trips) {
  std::sort(trips.begin(), trips.end(),
            [](const auto& a, const auto& b) {
              if (a[0] != b[0]) return a[0] < b[0];
              return a[1] < b[1];
            });
  CsrMatrix m;
  m.rows = rows;
  m.cols = cols;
  m.row_ptr.assign(rows + 1, 0);
  for (size_t i = 0; i < trips.size();) {
    int r = static_cast<int>(trips[i][0]);
    int c = static_cast<int>(trips[i][1]);
    double v = 0.0;
    while (i < trips.size() && static_cast<int>(trips[i][0]) == r &&
           static_cast<int>(trips[i][1]) == c) {
      v += trips[i][2];
      ++i;
    }
    m.col_idx.push_back(c);
    m.values.push_back(v);
    m.row_ptr[r + 1]++;
  }
  for (int r = 0; r < rows; ++r) m.row_ptr[r + 1] += m.row_ptr[r];
  return m;
}

CsrMatrix CsrMatrix::from_dense(const Eigen::MatrixXd& dense) {
  CsrMatrix m;
  m.rows = static_cast<int>(dense.rows());
  m.cols = static_cast<int>(dense.cols());
  m.row_ptr.assign(m.rows + 1, 0);
  for (int r = 0; r < m.rows; ++r) {
    for (int c = 0; c < m.cols; ++c) {
      if (dense(r, c) != 0.0) {
        m.col_idx.push_back(c);
        m.values.push_back(dense(r, c));
        m.row_ptr[r + 1]++;
      }
    }
  }
  for (int r = 0; r < m.rows; ++r) m.row_ptr[r + 1] += m.row_ptr[r];
  return m;
}

}  // namespace sldsgcn
