#pragma once

#include <optional>
#include <random>
#include <vector>

#include "quitting/lcp.hpp"
#include "quitting/lp.hpp"

namespace quitting {

// D = conv(columns) intersected with the nonnegative orthant. Boundary is
// taken relative to the affine hull of the columns: a member is interior only
// if every coordinate is positive and it admits a representation with all
// barycentric weights bounded away from zero.
template <class T>
struct FeasibleSetD {
  Mat<T> vertices;  // vertices[i][j]: coordinate i of column j
  T tol;
};

template <class T>
FeasibleSetD<T> make_feasible_set(const Mat<T>& rhat) {
  return FeasibleSetD<T>{rhat, tol_v<T>(1e-9)};
}

template <class T>
bool membership(const Vec<T>& y, const FeasibleSetD<T>& d) {
  const int n = static_cast<int>(d.vertices.size());
  for (const auto& v : y)
    if (v < -d.tol) return false;
  Mat<T> a;
  Vec<T> b;
  for (int i = 0; i < n; ++i) {
    a.push_back(d.vertices[i]);
    b.push_back(y[i]);
  }
  a.push_back(Vec<T>(n, T(1)));
  b.push_back(T(1));
  return lp_feasible_point(a, b).has_value();
}

// Largest t such that y has a barycentric representation with every weight
// >= t. Nullopt when y is not in the convex hull at all.
template <class T>
std::optional<T> interior_margin(const Vec<T>& y, const FeasibleSetD<T>& d) {
  const int n = static_cast<int>(d.vertices.size());
  Mat<T> a;
  Vec<T> b;
  for (int i = 0; i < n; ++i) {
    Vec<T> row = d.vertices[i];
    T colsum(0);
    for (int j = 0; j < n; ++j) colsum += d.vertices[i][j];
    row.push_back(colsum);
    a.push_back(row);
    b.push_back(y[i]);
  }
  Vec<T> simplex_row(n, T(1));
  simplex_row.push_back(T(n));
  a.push_back(simplex_row);
  b.push_back(T(1));
  Vec<T> c(n + 1, T(0));
  c[n] = T(-1);
  auto res = solve_lp(a, b, c);
  if (res.status != LpResult<T>::kOptimal) return std::nullopt;
  return res.x[n];
}

template <class T>
bool boundary(const Vec<T>& y, const FeasibleSetD<T>& d) {
  if (!membership(y, d)) return false;
  for (const auto& v : y)
    if (v <= d.tol) return true;
  auto t = interior_margin(y, d);
  return !t || *t <= d.tol;
}

template <class T>
std::vector<int> active_set(const Vec<T>& y, const T& tol) {
  std::vector<int> j;
  for (size_t i = 0; i < y.size(); ++i)
    if (abs_val(y[i]) <= tol) j.push_back(static_cast<int>(i));
  return j;
}

template <class T>
std::vector<int> active_set(const Vec<T>& y, const FeasibleSetD<T>& d) {
  return active_set(y, d.tol);
}

// Random boundary point of D: draw a Dirichlet point of the hull, reject the
// all-nonnegative draws (those solve trivially and land in the interior), and
// map through the LCP, whose solutions sit on the boundary.
inline std::optional<Vec<double>> sample_boundary_anchor(const Mat<double>& rhat,
                                                         const FeasibleSetD<double>& d,
                                                         std::mt19937_64& rng) {
  const int n = static_cast<int>(rhat.size());
  std::exponential_distribution<double> expo(1.0);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    Vec<double> theta(n);
    double sum = 0;
    for (int i = 0; i < n; ++i) {
      theta[i] = expo(rng);
      sum += theta[i];
    }
    for (auto& v : theta) v /= sum;
    Vec<double> qhat(n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) qhat[i] += rhat[i][j] * theta[j];
    double mn = qhat[0];
    for (double v : qhat) mn = std::min(mn, v);
    if (mn >= -1e-9) continue;
    auto sol = solve_lcp(rhat, qhat);
    if (!sol) continue;
    if (boundary(sol->w, d)) return sol->w;
  }
  return std::nullopt;
}

}  // namespace quitting
