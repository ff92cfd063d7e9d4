#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "quitting/scalar.hpp"

namespace quitting {

template <class T>
using Vec = std::vector<T>;

// Dense row-major matrix: m[i][j] is row i, column j.
template <class T>
using Mat = std::vector<std::vector<T>>;

template <class T>
Mat<T> identity(int n) {
  Mat<T> m(n, Vec<T>(n, T(0)));
  for (int i = 0; i < n; ++i) m[i][i] = T(1);
  return m;
}

template <class T>
Vec<T> mat_vec(const Mat<T>& a, const Vec<T>& x) {
  Vec<T> y(a.size(), T(0));
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < x.size(); ++j) y[i] += a[i][j] * x[j];
  return y;
}

template <class T>
T max_abs(const Mat<T>& a) {
  T m(0);
  for (const auto& row : a)
    for (const auto& v : row)
      if (abs_val(v) > m) m = abs_val(v);
  return m;
}

template <class T>
T max_abs(const Vec<T>& v) {
  T m(0);
  for (const auto& x : v)
    if (abs_val(x) > m) m = abs_val(x);
  return m;
}

template <class T>
T inf_norm_diff(const Vec<T>& a, const Vec<T>& b) {
  T m(0);
  for (size_t i = 0; i < a.size(); ++i)
    if (abs_val(a[i] - b[i]) > m) m = abs_val(a[i] - b[i]);
  return m;
}

namespace detail {

// Pivot threshold: relative for floating point, exact zero for rationals.
template <class T>
T pivot_floor(const Mat<T>& a) {
  if (scalar_traits<T>::exact) return T(0);
  T scale = max_abs(a);
  if (scale < T(1)) scale = T(1);
  return scale * tol_v<T>(1e-11);
}

}  // namespace detail

// Gaussian elimination with partial pivoting on the augmented system.
// Returns nullopt when a pivot falls at or below the threshold.
template <class T>
std::optional<Vec<T>> solve_linear(Mat<T> a, Vec<T> b) {
  const int n = static_cast<int>(a.size());
  const T floor = detail::pivot_floor(a);
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (abs_val(a[r][col]) > abs_val(a[piv][col])) piv = r;
    if (!(abs_val(a[piv][col]) > floor)) return std::nullopt;
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (int r = col + 1; r < n; ++r) {
      if (a[r][col] == T(0)) continue;
      T f = a[r][col] / a[col][col];
      for (int c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  Vec<T> x(n, T(0));
  for (int i = n - 1; i >= 0; --i) {
    T s = b[i];
    for (int j = i + 1; j < n; ++j) s -= a[i][j] * x[j];
    x[i] = s / a[i][i];
  }
  return x;
}

template <class T>
T determinant(Mat<T> a) {
  const int n = static_cast<int>(a.size());
  T det(1);
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (abs_val(a[r][col]) > abs_val(a[piv][col])) piv = r;
    if (a[piv][col] == T(0)) return T(0);
    if (piv != col) {
      std::swap(a[piv], a[col]);
      det = -det;
    }
    det *= a[col][col];
    for (int r = col + 1; r < n; ++r) {
      if (a[r][col] == T(0)) continue;
      T f = a[r][col] / a[col][col];
      for (int c = col; c < n; ++c) a[r][c] -= f * a[col][c];
    }
  }
  return det;
}

template <class T>
std::optional<Mat<T>> inverse(const Mat<T>& a) {
  const int n = static_cast<int>(a.size());
  Mat<T> inv(n, Vec<T>(n, T(0)));
  for (int j = 0; j < n; ++j) {
    Vec<T> e(n, T(0));
    e[j] = T(1);
    auto col = solve_linear(a, e);
    if (!col) return std::nullopt;
    for (int i = 0; i < n; ++i) inv[i][j] = (*col)[i];
  }
  return inv;
}

}  // namespace quitting
