#pragma once

#include <optional>
#include <vector>

#include "quitting/linalg.hpp"
#include "quitting/scalar.hpp"

namespace quitting {

// Linear program in standard form: min c'x subject to Ax = b, x >= 0.
// Dense two-phase tableau simplex with Bland's rule (no cycling); sizes here
// are tiny (a handful of variables), so simplicity beats sparsity.
template <class T>
struct LpResult {
  enum Status { kOptimal = 0, kInfeasible = 1, kUnbounded = 2, kStalled = 3 };
  Status status = kInfeasible;
  Vec<T> x;
  T objective = T(0);
};

namespace detail {

template <class T>
class SimplexTableau {
 public:
  SimplexTableau(Mat<T> a, Vec<T> b) : tab_(std::move(a)), rhs_(std::move(b)) {
    m_ = static_cast<int>(tab_.size());
    cols_ = m_ ? static_cast<int>(tab_[0].size()) : 0;
    piv_tol_ = scalar_traits<T>::exact ? T(0) : tol_v<T>(1e-11) * scale();
    rc_tol_ = scalar_traits<T>::exact ? T(0) : tol_v<T>(1e-9) * scale();
  }

  T scale() const {
    T s = max_abs(tab_);
    T sb = max_abs(rhs_);
    if (sb > s) s = sb;
    return s < T(1) ? T(1) : s;
  }

  void set_basis(std::vector<int> basis) { basis_ = std::move(basis); }

  void load_costs(const Vec<T>& c) {
    zrow_.assign(cols_, T(0));
    for (int j = 0; j < cols_ && j < static_cast<int>(c.size()); ++j) zrow_[j] = c[j];
    zval_ = T(0);
    for (int r = 0; r < m_; ++r) reduce_cost_row(r);
  }

  // status: 0 optimal, 2 unbounded, 3 iteration cap.
  int iterate(const std::vector<bool>& may_enter) {
    const long cap = 20000 + 200L * (m_ + cols_);
    for (long it = 0; it < cap; ++it) {
      int enter = -1;
      for (int j = 0; j < cols_; ++j) {
        if (!may_enter[j]) continue;
        if (zrow_[j] < -rc_tol_) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return 0;
      int leave = -1;
      T best_ratio(0);
      for (int r = 0; r < m_; ++r) {
        if (!(tab_[r][enter] > piv_tol_)) continue;
        T ratio = rhs_[r] / tab_[r][enter];
        if (leave < 0 || ratio < best_ratio ||
            (ratio == best_ratio && basis_[r] < basis_[leave])) {
          leave = r;
          best_ratio = ratio;
        }
      }
      if (leave < 0) return 2;
      pivot(leave, enter);
    }
    return 3;
  }

  void pivot(int r, int col) {
    T p = tab_[r][col];
    for (int c = 0; c < cols_; ++c) tab_[r][c] /= p;
    rhs_[r] /= p;
    for (int i = 0; i < m_; ++i) {
      if (i == r || tab_[i][col] == T(0)) continue;
      T f = tab_[i][col];
      for (int c = 0; c < cols_; ++c) tab_[i][c] -= f * tab_[r][c];
      rhs_[i] -= f * rhs_[r];
    }
    if (zrow_[col] != T(0)) {
      T f = zrow_[col];
      for (int c = 0; c < cols_; ++c) zrow_[c] -= f * tab_[r][c];
      zval_ -= f * rhs_[r];
    }
    basis_[r] = col;
  }

  // Pivot out or delete rows whose basic variable is an artificial (>= n_real).
  void purge_artificial_rows(int n_real) {
    for (int r = m_ - 1; r >= 0; --r) {
      if (basis_[r] < n_real) continue;
      int col = -1;
      for (int j = 0; j < n_real; ++j) {
        if (abs_val(tab_[r][j]) > piv_tol_) {
          col = j;
          break;
        }
      }
      if (col >= 0) {
        pivot(r, col);
      } else {
        tab_.erase(tab_.begin() + r);
        rhs_.erase(rhs_.begin() + r);
        basis_.erase(basis_.begin() + r);
        --m_;
      }
    }
  }

  T objective() const { return -zval_; }
  int rows() const { return m_; }
  const std::vector<int>& basis() const { return basis_; }
  const Vec<T>& rhs() const { return rhs_; }

 private:
  void reduce_cost_row(int r) {
    int bcol = basis_[r];
    if (zrow_[bcol] == T(0)) return;
    T f = zrow_[bcol];
    for (int c = 0; c < cols_; ++c) zrow_[c] -= f * tab_[r][c];
    zval_ -= f * rhs_[r];
  }

  Mat<T> tab_;
  Vec<T> rhs_;
  Vec<T> zrow_;
  T zval_ = T(0);
  std::vector<int> basis_;
  int m_ = 0, cols_ = 0;
  T piv_tol_ = T(0), rc_tol_ = T(0);
};

}  // namespace detail

template <class T>
LpResult<T> solve_lp(Mat<T> a, Vec<T> b, const Vec<T>& c) {
  LpResult<T> res;
  const int m = static_cast<int>(a.size());
  const int n = m ? static_cast<int>(a[0].size()) : static_cast<int>(c.size());
  if (m == 0) {
    res.x.assign(n, T(0));
    for (const auto& cj : c)
      if (cj < T(0)) {
        res.status = LpResult<T>::kUnbounded;
        return res;
      }
    res.status = LpResult<T>::kOptimal;
    return res;
  }
  for (int r = 0; r < m; ++r) {
    if (b[r] < T(0)) {
      b[r] = -b[r];
      for (auto& v : a[r]) v = -v;
    }
    a[r].resize(n + m, T(0));
    a[r][n + r] = T(1);
  }

  detail::SimplexTableau<T> tab(std::move(a), std::move(b));
  std::vector<int> basis(m);
  for (int r = 0; r < m; ++r) basis[r] = n + r;
  tab.set_basis(std::move(basis));

  Vec<T> phase1_cost(n + m, T(0));
  for (int r = 0; r < m; ++r) phase1_cost[n + r] = T(1);
  tab.load_costs(phase1_cost);
  std::vector<bool> enter_any(n + m, true);
  int st = tab.iterate(enter_any);
  if (st == 3) {
    res.status = LpResult<T>::kStalled;
    return res;
  }
  T feas_tol = scalar_traits<T>::exact ? T(0) : tol_v<T>(1e-9) * tab.scale();
  if (tab.objective() > feas_tol) {
    res.status = LpResult<T>::kInfeasible;
    return res;
  }
  tab.purge_artificial_rows(n);

  Vec<T> phase2_cost(n + m, T(0));
  for (int j = 0; j < n && j < static_cast<int>(c.size()); ++j) phase2_cost[j] = c[j];
  tab.load_costs(phase2_cost);
  std::vector<bool> enter_real(n + m, false);
  for (int j = 0; j < n; ++j) enter_real[j] = true;
  st = tab.iterate(enter_real);
  if (st == 2) {
    res.status = LpResult<T>::kUnbounded;
    return res;
  }
  if (st == 3) {
    res.status = LpResult<T>::kStalled;
    return res;
  }
  res.status = LpResult<T>::kOptimal;
  res.x.assign(n, T(0));
  for (int r = 0; r < tab.rows(); ++r)
    if (tab.basis()[r] < n) res.x[tab.basis()[r]] = tab.rhs()[r];
  res.objective = tab.objective();
  return res;
}

template <class T>
std::optional<Vec<T>> lp_feasible_point(const Mat<T>& a, const Vec<T>& b) {
  const int n = a.empty() ? 0 : static_cast<int>(a[0].size());
  auto r = solve_lp(a, b, Vec<T>(n, T(0)));
  if (r.status != LpResult<T>::kOptimal) return std::nullopt;
  return r.x;
}

}  // namespace quitting
