#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

// Small dense Gauss elimination with partial pivoting, used as an independent
// oracle for the normal-equation projection tests.
inline std::vector<double> dense_solve(std::vector<std::vector<double>> A,
                                       std::vector<double> b) {
  const int n = static_cast<int>(b.size());
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(A[r][col]) > std::abs(A[pivot][col])) pivot = r;
    std::swap(A[col], A[pivot]);
    std::swap(b[col], b[pivot]);
    if (A[col][col] == 0.0) throw std::runtime_error("dense_solve: singular");
    for (int r = col + 1; r < n; ++r) {
      const double f = A[r][col] / A[col][col];
      for (int c = col; c < n; ++c) A[r][c] -= f * A[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (int r = n - 1; r >= 0; --r) {
    double s = b[r];
    for (int c = r + 1; c < n; ++c) s -= A[r][c] * x[c];
    x[r] = s / A[r][r];
  }
  return x;
}

// Adaptive Simpson on [a,b], used to freeze singular-integral oracles.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double eps = 1e-13) {
  std::function<double(double, double, double, double, double, double, double)> rec =
      [&](double x0, double x2, double f0, double f1, double f2, double whole, double tol) {
        const double x1 = 0.5 * (x0 + x2);
        const double lm = 0.5 * (x0 + x1), rm = 0.5 * (x1 + x2);
        const double flm = f(lm), frm = f(rm);
        const double left = (x1 - x0) / 6.0 * (f0 + 4.0 * flm + f1);
        const double right = (x2 - x1) / 6.0 * (f1 + 4.0 * frm + f2);
        if (std::abs(left + right - whole) <= 15.0 * tol)
          return left + right + (left + right - whole) / 15.0;
        return rec(x0, x1, f0, flm, f1, left, tol / 2.0) +
               rec(x1, x2, f1, frm, f2, right, tol / 2.0);
      };
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return rec(a, b, fa, fm, fb, whole, eps);
}
