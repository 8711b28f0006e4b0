#include "hdgbc/sparse.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace hdgbc {

SparseMatrix SparseMatrix::from_triplets(int rows, int cols,
                                         const std::vector<Triplet>& triplets) {
  SparseMatrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.row_offsets_.assign(rows + 1, 0);

  std::vector<int> count(rows, 0);
  for (const Triplet& t : triplets) ++count[t.row];
  std::vector<int> start(rows + 1, 0);
  for (int r = 0; r < rows; ++r) start[r + 1] = start[r] + count[r];

  // Bucket by row, then sort and merge duplicate columns within each row.
  std::vector<std::pair<int, double>> bucket(triplets.size());
  std::vector<int> cursor(start.begin(), start.end() - 1);
  for (const Triplet& t : triplets) bucket[cursor[t.row]++] = {t.col, t.value};

  m.column_indices_.reserve(triplets.size());
  m.values_.reserve(triplets.size());
  for (int r = 0; r < rows; ++r) {
    auto first = bucket.begin() + start[r];
    auto last = bucket.begin() + start[r + 1];
    std::sort(first, last, [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto it = first; it != last;) {
      const int col = it->first;
      double sum = 0.0;
      while (it != last && it->first == col) sum += (it++)->second;
      m.column_indices_.push_back(col);
      m.values_.push_back(sum);
    }
    m.row_offsets_[r + 1] = static_cast<int>(m.values_.size());
  }
  return m;
}

double SparseMatrix::inf_norm() const {
  double norm = 0.0;
  for (int r = 0; r < rows_; ++r) {
    double s = 0.0;
    for (int i = row_offsets_[r]; i < row_offsets_[r + 1]; ++i) s += std::abs(values_[i]);
    norm = std::max(norm, s);
  }
  return norm;
}

std::vector<double> spmv(const SparseMatrix& A, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != A.cols())
    throw std::invalid_argument("spmv: dimension mismatch");
  std::vector<double> y(A.rows(), 0.0);
  const auto& off = A.row_offsets();
  const auto& col = A.column_indices();
  const auto& val = A.values();
  for (int r = 0; r < A.rows(); ++r) {
    double s = 0.0;
    for (int i = off[r]; i < off[r + 1]; ++i) s += val[i] * x[col[i]];
    y[r] = s;
  }
  return y;
}

std::vector<double> factor_and_solve(const SparseMatrix& A, const std::vector<double>& b) {
  if (A.rows() != A.cols()) throw std::invalid_argument("factor_and_solve: matrix not square");
  if (static_cast<int>(b.size()) != A.rows())
    throw std::invalid_argument("factor_and_solve: right-hand side length mismatch");

  Eigen::SparseMatrix<double> mat(A.rows(), A.cols());
  {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(A.nnz());
    const auto& off = A.row_offsets();
    const auto& col = A.column_indices();
    const auto& val = A.values();
    for (int r = 0; r < A.rows(); ++r)
      for (int i = off[r]; i < off[r + 1]; ++i) trips.emplace_back(r, col[i], val[i]);
    mat.setFromTriplets(trips.begin(), trips.end());
  }
  mat.makeCompressed();

  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(mat);
  lu.factorize(mat);
  if (lu.info() != Eigen::Success)
    throw SingularSystemError("sparse LU factorization failed: " + lu.lastErrorMessage());

  Eigen::Map<const Eigen::VectorXd> rhs(b.data(), b.size());
  Eigen::VectorXd x = lu.solve(rhs);
  if (lu.info() != Eigen::Success) throw SingularSystemError("sparse LU solve failed");
  return {x.data(), x.data() + x.size()};
}

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double relative_residual(const SparseMatrix& A, const std::vector<double>& x,
                         const std::vector<double>& b) {
  std::vector<double> r = spmv(A, x);
  for (size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
  const double denom = A.inf_norm() * norm2(x) + norm2(b);
  return denom > 0.0 ? norm2(r) / denom : norm2(r);
}

}  // namespace hdgbc
