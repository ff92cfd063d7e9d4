#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "quitting/game.hpp"
#include "quitting/lp.hpp"

namespace quitting {

// Simplex-form solution: w >= 0, z a probability vector over {0,...,n},
// w = z_0 q + sum_i z_i R[.][i], and z_i w_i = 0 for i >= 1.
template <class T>
struct LcpSolution {
  Vec<T> w;
  Vec<T> z;
  std::vector<int> support;  // 0-based column indices carrying z mass
};

// Advances a support set through lexicographic element-list order:
// {} < {0} < {0,1} < {0,1,2} < {0,2} < {1} < ... Returns false when done.
inline bool next_support(std::vector<int>& s, int n) {
  if (s.empty()) {
    if (n == 0) return false;
    s.push_back(0);
    return true;
  }
  if (s.back() + 1 < n) {
    s.push_back(s.back() + 1);
    return true;
  }
  s.pop_back();
  if (s.empty()) return false;
  ++s.back();
  return true;
}

namespace detail {

template <class T>
T lcp_scale(const Mat<T>& r, const Vec<T>& q) {
  T s = max_abs(r);
  T sq = max_abs(q);
  if (sq > s) s = sq;
  return s < T(1) ? T(1) : s;
}

template <class T>
std::optional<LcpSolution<T>> try_support(const Mat<T>& r, const Vec<T>& q,
                                          const std::vector<int>& alpha, const T& scale) {
  const int n = static_cast<int>(q.size());
  const T ztol = tol_v<T>(1e-12);
  const T wtol = tol_v<T>(1e-10) * scale;
  Vec<T> ztilde(n, T(0));
  if (!alpha.empty()) {
    const int k = static_cast<int>(alpha.size());
    Mat<T> a(k, Vec<T>(k, T(0)));
    Vec<T> b(k, T(0));
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) a[i][j] = r[alpha[i]][alpha[j]];
      b[i] = -q[alpha[i]];
    }
    auto sol = solve_linear(a, b);
    if (!sol) return std::nullopt;
    for (int i = 0; i < k; ++i) {
      if ((*sol)[i] < -ztol) return std::nullopt;
      ztilde[alpha[i]] = (*sol)[i] < T(0) ? T(0) : (*sol)[i];
    }
  }
  Vec<T> w_std = q;
  for (int i = 0; i < n; ++i)
    for (int j : alpha) w_std[i] += r[i][j] * ztilde[j];
  for (int j : alpha) w_std[j] = T(0);
  for (int i = 0; i < n; ++i) {
    if (w_std[i] < -wtol) return std::nullopt;
    if (w_std[i] < T(0)) w_std[i] = T(0);
  }
  T denom(1);
  for (int j : alpha) denom += ztilde[j];
  LcpSolution<T> out;
  out.w.assign(n, T(0));
  out.z.assign(n + 1, T(0));
  out.z[0] = T(1) / denom;
  for (int j : alpha) out.z[j + 1] = ztilde[j] / denom;
  for (int i = 0; i < n; ++i) out.w[i] = w_std[i] / denom;
  out.support = alpha;
  return out;
}

}  // namespace detail

template <class T>
bool lcp_solution_valid(const Mat<T>& r, const Vec<T>& q, const LcpSolution<T>& s,
                        double residual_tol = 1e-9) {
  const int n = static_cast<int>(q.size());
  const T scale = detail::lcp_scale(r, q);
  const T rtol = tol_v<T>(residual_tol) * scale;
  T zsum(0);
  for (const auto& zi : s.z) {
    if (zi < T(0)) return false;
    zsum += zi;
  }
  if (abs_val(zsum - T(1)) > tol_v<T>(1e-9)) return false;
  for (int i = 0; i < n; ++i) {
    if (s.w[i] < T(0)) return false;
    T resid = s.z[0] * q[i] - s.w[i];
    for (int j = 0; j < n; ++j) resid += s.z[j + 1] * r[i][j];
    if (abs_val(resid) > rtol) return false;
    if (s.z[i + 1] > tol_v<T>(1e-12) && abs_val(s.w[i]) > tol_v<T>(1e-9) * scale)
      return false;
  }
  return true;
}

namespace detail {

template <class T>
std::optional<LcpSolution<T>> solve_lcp_basic(const Mat<T>& r, const Vec<T>& q,
                                              bool* all_nonempty_singular) {
  const int n = static_cast<int>(q.size());
  const T scale = lcp_scale(r, q);
  bool all_singular = true;
  std::vector<int> alpha;
  // Empty support first: the trivial solution w = q for q >= 0.
  {
    auto sol = try_support(r, q, alpha, scale);
    if (sol) {
      if (all_nonempty_singular) *all_nonempty_singular = false;
      return sol;
    }
  }
  while (next_support(alpha, n)) {
    const int k = static_cast<int>(alpha.size());
    Mat<T> a(k, Vec<T>(k, T(0)));
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) a[i][j] = r[alpha[i]][alpha[j]];
    Vec<T> b(k, T(0));
    for (int i = 0; i < k; ++i) b[i] = -q[alpha[i]];
    if (!solve_linear(a, b)) continue;  // singular basis: skip
    all_singular = false;
    auto sol = try_support(r, q, alpha, scale);
    if (sol) {
      if (all_nonempty_singular) *all_nonempty_singular = false;
      return sol;
    }
  }
  if (all_nonempty_singular) *all_nonempty_singular = all_singular;
  return std::nullopt;
}

}  // namespace detail

// Exhaustive complementary-support enumeration in lexicographic order; the
// first support admitting a valid solution wins (per-support solutions are
// unique for nonsingular bases). When every non-empty basis is singular the
// matrix is perturbed once on the diagonal and the candidate is validated
// against the unperturbed data; this recovers ray-like solutions (e.g. the
// 1x1 zero matrix with q < 0) without fabricating answers for genuinely
// unsolvable inputs.
template <class T>
std::optional<LcpSolution<T>> solve_lcp(const Mat<T>& r, const Vec<T>& q) {
  bool all_singular = false;
  auto sol = detail::solve_lcp_basic(r, q, &all_singular);
  if (sol || !all_singular || scalar_traits<T>::exact) return sol;
  Mat<T> rp = r;
  const int n = static_cast<int>(q.size());
  for (int i = 0; i < n; ++i) rp[i][i] += tol_v<T>(1e-10);
  auto rescued = detail::solve_lcp_basic(rp, q, nullptr);
  if (rescued && lcp_solution_valid(r, q, *rescued)) return rescued;
  return std::nullopt;
}

// Nontrivial solution of LCP(R, 0): z_0 < 1, i.e. positive mass on columns.
// Searching z_0 = 0 is without loss (any solution rescales). Each support is
// checked by a feasibility program, which also covers singular bases.
template <class T>
std::optional<LcpSolution<T>> nontrivial_zero_solution(const Mat<T>& r) {
  const int n = static_cast<int>(r.size());
  std::vector<int> alpha;
  while (next_support(alpha, n)) {
    const int k = static_cast<int>(alpha.size());
    std::vector<bool> in_alpha(n, false);
    for (int j : alpha) in_alpha[j] = true;
    // Variables: v over alpha, slacks for off-support rows.
    const int nvars = k + (n - k);
    Mat<T> a;
    Vec<T> b;
    {
      Vec<T> row(nvars, T(0));
      for (int j = 0; j < k; ++j) row[j] = T(1);
      a.push_back(row);
      b.push_back(T(1));
    }
    int slack = k;
    for (int i = 0; i < n; ++i) {
      Vec<T> row(nvars, T(0));
      for (int j = 0; j < k; ++j) row[j] = r[i][alpha[j]];
      if (!in_alpha[i]) row[slack++] = T(-1);
      a.push_back(row);
      b.push_back(T(0));
    }
    auto v = lp_feasible_point(a, b);
    if (!v) continue;
    LcpSolution<T> out;
    out.w.assign(n, T(0));
    out.z.assign(n + 1, T(0));
    for (int j = 0; j < k; ++j) out.z[alpha[j] + 1] = (*v)[j];
    for (int i = 0; i < n; ++i) {
      T wi(0);
      for (int j = 0; j < k; ++j) wi += r[i][alpha[j]] * (*v)[j];
      out.w[i] = in_alpha[i] || wi < T(0) ? T(0) : wi;
    }
    out.support = alpha;
    if (lcp_solution_valid(r, Vec<T>(n, T(0)), out)) return out;
  }
  return std::nullopt;
}

// Exact cone-coverage test: is LCP(R, q) solvable at all? Every complementary
// support is checked with a feasibility program, so degenerate (singular)
// cones are covered, unlike solve_lcp's square solves.
template <class T>
bool lcp_solvable_exact(const Mat<T>& r, const Vec<T>& q) {
  const int n = static_cast<int>(q.size());
  std::vector<int> alpha;
  bool more = true;
  for (; more; more = next_support(alpha, n)) {
    const int k = static_cast<int>(alpha.size());
    std::vector<bool> in_alpha(n, false);
    for (int j : alpha) in_alpha[j] = true;
    const int nvars = n;  // k z-variables plus n-k slacks
    Mat<T> a;
    Vec<T> b;
    int slack = k;
    for (int i = 0; i < n; ++i) {
      Vec<T> row(nvars, T(0));
      for (int j = 0; j < k; ++j) row[j] = r[i][alpha[j]];
      if (!in_alpha[i]) row[slack++] = T(-1);
      a.push_back(row);
      b.push_back(-q[i]);
    }
    if (lp_feasible_point(a, b)) return true;
  }
  return false;
}

struct QMatrixVerdict {
  enum class Kind { Q_certified, not_Q_with_witness, probably_Q };
  Kind verdict = Kind::probably_Q;
  std::optional<Vec<double>> witness_q;
  long samples_used = 0;
  std::string method;  // "determinant_3x3" or "cone_sampling"
};

namespace detail {

// Cyclic sign pattern: zero diagonal, off-diagonal entries strictly one sign in
// cyclic orientation (+ above the cycle, - against it), up to transposition.
inline bool cyclic_sign_pattern_3x3(const Mat<double>& r) {
  if (r.size() != 3) return false;
  for (int i = 0; i < 3; ++i)
    if (std::abs(r[i][i]) > 1e-12) return false;
  auto sgn = [](double v) { return v > 1e-12 ? 1 : (v < -1e-12 ? -1 : 0); };
  for (int orient = 0; orient < 2; ++orient) {
    bool ok = true;
    for (int i = 0; i < 3 && ok; ++i) {
      int fwd = (i + 1) % 3, back = (i + 2) % 3;
      if (orient) std::swap(fwd, back);
      ok = sgn(r[i][fwd]) == 1 && sgn(r[i][back]) == -1;
    }
    if (ok) return true;
  }
  return false;
}

inline double det3_cofactor(const Mat<double>& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

inline Vec<double> sphere_sample(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec<double> q(n);
  double norm = 0;
  do {
    norm = 0;
    for (int i = 0; i < n; ++i) {
      q[i] = gauss(rng);
      norm += q[i] * q[i];
    }
  } while (norm < 1e-12);
  norm = std::sqrt(norm);
  for (auto& v : q) v /= norm;
  return q;
}

inline bool confirmed_unsolvable(const Mat<double>& r, const Vec<double>& q) {
  return !solve_lcp(r, q).has_value() && !lcp_solvable_exact(r, q);
}

}  // namespace detail

// Q-matrix decision: the exact 3x3 determinant criterion for sign-patterned
// matrices, randomized sphere sampling otherwise. A witness is only reported
// after the exact cone-coverage oracle confirms unsolvability.
inline QMatrixVerdict q_matrix_test(const Mat<double>& r, long samples, uint64_t seed) {
  const int n = static_cast<int>(r.size());
  QMatrixVerdict out;
  std::mt19937_64 rng(seed);
  if (n == 3 && detail::cyclic_sign_pattern_3x3(r)) {
    out.method = "determinant_3x3";
    if (detail::det3_cofactor(r) > 1e-9) {
      out.verdict = QMatrixVerdict::Kind::Q_certified;
      return out;
    }
    out.verdict = QMatrixVerdict::Kind::not_Q_with_witness;
    Vec<double> ones(n, -1.0 / std::sqrt(3.0));
    if (detail::confirmed_unsolvable(r, ones)) {
      out.witness_q = ones;
      return out;
    }
    for (long s = 0; s < samples; ++s) {
      auto q = detail::sphere_sample(rng, n);
      ++out.samples_used;
      if (detail::confirmed_unsolvable(r, q)) {
        out.witness_q = q;
        return out;
      }
    }
    // Determinant says "not Q" but no witness surfaced: report honestly.
    out.verdict = QMatrixVerdict::Kind::probably_Q;
    return out;
  }
  out.method = "cone_sampling";
  for (long s = 0; s < samples; ++s) {
    auto q = detail::sphere_sample(rng, n);
    ++out.samples_used;
    if (!solve_lcp(r, q).has_value() && !lcp_solvable_exact(r, q)) {
      out.verdict = QMatrixVerdict::Kind::not_Q_with_witness;
      out.witness_q = q;
      return out;
    }
  }
  out.verdict = QMatrixVerdict::Kind::probably_Q;
  return out;
}

// Sign pattern with zero diagonal and exactly one
// strictly positive entry in every row and every column.
template <class T>
bool is_sign_M(const Mat<T>& r) {
  const int n = static_cast<int>(r.size());
  const T tol = tol_v<T>(1e-12);
  for (int i = 0; i < n; ++i)
    if (abs_val(r[i][i]) > tol) return false;
  for (int i = 0; i < n; ++i) {
    int row_pos = 0, col_pos = 0;
    for (int j = 0; j < n; ++j) {
      if (r[i][j] > tol) ++row_pos;
      if (r[j][i] > tol) ++col_pos;
    }
    if (row_pos != 1 || col_pos != 1) return false;
  }
  return true;
}

template <class T>
bool inverse_positive(const Mat<T>& r) {
  auto inv = inverse(r);
  if (!inv) throw game_error("inverse_positive: singular matrix");
  const T tol = tol_v<T>(1e-9);
  for (const auto& row : *inv)
    for (const auto& v : row)
      if (v < -tol) return false;
  return true;
}

}  // namespace quitting
