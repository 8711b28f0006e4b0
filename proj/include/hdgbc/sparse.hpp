#pragma once

#include <vector>

#include "hdgbc/errors.hpp"

namespace hdgbc {

struct Triplet {
  int row;
  int col;
  double value;
};

/// Compressed sparse row matrix. Column indices are sorted and unique per row.
class SparseMatrix {
public:
  SparseMatrix() = default;

  static SparseMatrix from_triplets(int rows, int cols, const std::vector<Triplet>& triplets);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int nnz() const { return static_cast<int>(values_.size()); }

  const std::vector<int>& row_offsets() const { return row_offsets_; }
  const std::vector<int>& column_indices() const { return column_indices_; }
  const std::vector<double>& values() const { return values_; }

  /// Max row sum of absolute values.
  double inf_norm() const;

private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<int> row_offsets_;
  std::vector<int> column_indices_;
  std::vector<double> values_;
};

std::vector<double> spmv(const SparseMatrix& A, const std::vector<double>& x);

/// Direct sparse LU (partial pivoting, fill-reducing column ordering).
/// Throws SingularSystemError on structural or numerical singularity.
std::vector<double> factor_and_solve(const SparseMatrix& A, const std::vector<double>& b);

double norm2(const std::vector<double>& v);

/// ||Ax - b|| / (||A|| ||x|| + ||b||).
double relative_residual(const SparseMatrix& A, const std::vector<double>& x,
                         const std::vector<double>& b);

}  // namespace hdgbc
