#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "quitting/geometry.hpp"
#include "quitting/lcp.hpp"

namespace quitting {

struct block_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One round of the equilibrium construction at anchor y: a boundary point w,
// per-column targets w^i on the segments [w, r-hat^i], and a lottery z.
template <class T>
struct BuildingBlock {
  Vec<T> y;
  Vec<T> w;
  std::map<int, Vec<T>> w_i;  // 0-based column -> w^i
  Vec<T> z;                   // length n+1, z[0] = weight of the anchor
  std::map<int, T> lambda;    // 0-based column -> lambda_i
  std::string construction;
};

template <class T>
struct BlockCheck {
  bool on_segment = false;      // w^i strictly between w and r-hat^i
  bool above_floor = false;     // w^i_j bounded below by -eps (payoff scale)
  bool mix_identity = false;    // w = z_0 y + sum z_i w^i
  bool own_zero = false;        // supported w^i vanish on their own coordinate
  bool off_anchor_mass = false; // positive mass off the anchor
  bool z_prob = false;          // z is a probability vector
  bool w_on_boundary = false;
  bool near_anchor = false;     // |w - y|_inf <= 2 * scale * sum z_i
  T mix_residual = T(0);
  T anchor_distance = T(0);
  T anchor_bound = T(0);
  bool pass = false;
  std::string failure;
};

template <class T>
BlockCheck<T> check_block(const BuildingBlock<T>& blk, const FeasibleSetD<T>& d,
                          double eps) {
  const int n = static_cast<int>(d.vertices.size());
  BlockCheck<T> c;
  T scale = max_abs(d.vertices);
  if (scale < T(1)) scale = T(1);
  const T tiny = tol_v<T>(1e-12);
  const T res_tol = tol_v<T>(1e-9) * scale;
  const T eps_t = scalar_traits<T>::from_double(eps);

  c.z_prob = static_cast<int>(blk.z.size()) == n + 1;
  if (c.z_prob) {
    T zsum(0);
    for (const auto& zi : blk.z) {
      if (zi < T(0)) c.z_prob = false;
      zsum += zi;
    }
    if (abs_val(zsum - T(1)) > tol_v<T>(1e-9)) c.z_prob = false;
  }

  c.on_segment = true;
  c.above_floor = true;
  for (const auto& [i, wi] : blk.w_i) {
    auto lam_it = blk.lambda.find(i);
    if (lam_it == blk.lambda.end()) {
      c.on_segment = false;
      break;
    }
    const T& lam = lam_it->second;
    if (!(lam > tiny) || !(lam < T(1))) c.on_segment = false;
    for (int j = 0; j < n; ++j) {
      T seg = lam * d.vertices[j][i] + (T(1) - lam) * blk.w[j];
      if (abs_val(wi[j] - seg) > res_tol) c.on_segment = false;
      if (wi[j] < -eps_t * scale - tol_v<T>(1e-9)) c.above_floor = false;
    }
  }

  c.own_zero = true;
  bool mix_computable = true;
  for (int i = 0; i < n; ++i) {
    if (!(blk.z[i + 1] > tiny)) continue;
    auto it = blk.w_i.find(i);
    if (it == blk.w_i.end()) {
      c.own_zero = false;
      mix_computable = false;
      continue;
    }
    if (abs_val(it->second[i]) > res_tol) c.own_zero = false;
  }

  c.mix_identity = mix_computable;
  if (mix_computable) {
    for (int j = 0; j < n; ++j) {
      T resid = blk.w[j] - blk.z[0] * blk.y[j];
      for (const auto& [i, wi] : blk.w_i) resid -= blk.z[i + 1] * wi[j];
      if (abs_val(resid) > c.mix_residual) c.mix_residual = abs_val(resid);
    }
    c.mix_identity = c.mix_residual <= res_tol;
  }

  T mass(0);
  for (int i = 1; i <= n; ++i) mass += blk.z[i];
  c.off_anchor_mass = mass > tiny;

  c.w_on_boundary = boundary(blk.w, d);

  c.anchor_distance = inf_norm_diff(blk.w, blk.y);
  c.anchor_bound = T(2) * scale * mass;
  c.near_anchor = c.anchor_distance <= c.anchor_bound + tol_v<T>(1e-9);

  c.pass = c.on_segment && c.above_floor && c.mix_identity && c.own_zero &&
           c.off_anchor_mass && c.z_prob && c.w_on_boundary && c.near_anchor;
  if (!c.pass) {
    if (!c.on_segment) c.failure = "segment condition";
    else if (!c.above_floor) c.failure = "payoff floor";
    else if (!c.mix_identity) c.failure = "mixing identity";
    else if (!c.own_zero) c.failure = "own-coordinate zero";
    else if (!c.off_anchor_mass) c.failure = "no mass off the anchor";
    else if (!c.z_prob) c.failure = "z not a probability vector";
    else if (!c.w_on_boundary) c.failure = "w not on boundary of D";
    else c.failure = "anchor distance bound";
  }
  return c;
}

namespace detail {

// All construction cases reduce to a nontrivial complementary pair (w, nu)
// at the anchor: w = nu_0 y + sum nu_i r-hat^i with supp(nu) inside the zero
// set of w. The block is the epsilon-reweighting of that pair, and then the
// mixing identity holds exactly by algebra.
template <class T>
BuildingBlock<T> reweight_block(const Mat<T>& rhat, const Vec<T>& y, const Vec<T>& w,
                                Vec<T> nu, double eps, const std::string& tag) {
  const int n = static_cast<int>(rhat.size());
  const T tiny = tol_v<T>(1e-12);
  T nsum(0);
  for (int i = 0; i <= n; ++i) {
    if (nu[i] < tiny) nu[i] = T(0);
    nsum += nu[i];
  }
  for (auto& v : nu) v /= nsum;
  const T eps_t = scalar_traits<T>::from_double(eps);
  T mass(0);
  for (int i = 1; i <= n; ++i) mass += nu[i];
  T total = eps_t * nu[0] + mass;
  BuildingBlock<T> blk;
  blk.y = y;
  blk.w = w;
  blk.z.assign(n + 1, T(0));
  blk.z[0] = eps_t * nu[0] / total;
  for (int i = 0; i < n; ++i) {
    blk.z[i + 1] = nu[i + 1] / total;
    if (nu[i + 1] == T(0)) continue;
    Vec<T> wi(n, T(0));
    for (int j = 0; j < n; ++j)
      wi[j] = (T(1) - eps_t) * w[j] + eps_t * rhat[j][i];
    blk.w_i[i] = std::move(wi);
    blk.lambda[i] = eps_t;
  }
  blk.construction = tag;
  return blk;
}

// Solve for the complementary pair with a prescribed support: w vanishes on
// alpha, nu vanishes off alpha, weights sum to one. Square system first; on
// a singular basis fall back to a program that minimizes the anchor weight
// (pure feasibility could return the useless all-anchor vertex).
template <class T>
std::optional<std::pair<Vec<T>, Vec<T>>> pair_from_support(const Mat<T>& rhat,
                                                           const Vec<T>& y,
                                                           const std::vector<int>& alpha) {
  const int n = static_cast<int>(rhat.size());
  const int k = static_cast<int>(alpha.size());
  const T tiny = tol_v<T>(1e-12);
  const T wtol = tol_v<T>(1e-10) * lcp_scale(rhat, y);

  auto expand = [&](const Vec<T>& packed) -> std::optional<std::pair<Vec<T>, Vec<T>>> {
    Vec<T> nu(n + 1, T(0));
    nu[0] = packed[0];
    for (int j = 0; j < k; ++j) nu[alpha[j] + 1] = packed[j + 1];
    T mass(0);
    for (int i = 0; i <= n; ++i) {
      if (nu[i] < -tiny) return std::nullopt;
      if (nu[i] < T(0)) nu[i] = T(0);
      if (i > 0) mass += nu[i];
    }
    if (!(mass > tiny)) return std::nullopt;
    Vec<T> w(n, T(0));
    for (int i = 0; i < n; ++i) {
      w[i] = nu[0] * y[i];
      for (int j = 0; j < n; ++j) w[i] += nu[j + 1] * rhat[i][j];
      if (w[i] < -wtol) return std::nullopt;
      if (w[i] < T(0)) w[i] = T(0);
    }
    return std::make_pair(std::move(w), std::move(nu));
  };

  {
    Mat<T> a(k + 1, Vec<T>(k + 1, T(0)));
    Vec<T> b(k + 1, T(0));
    for (int i = 0; i < k; ++i) {
      a[i][0] = y[alpha[i]];
      for (int j = 0; j < k; ++j) a[i][j + 1] = rhat[alpha[i]][alpha[j]];
    }
    for (int j = 0; j <= k; ++j) a[k][j] = T(1);
    b[k] = T(1);
    if (auto sol = solve_linear(a, b))
      if (auto pr = expand(*sol)) return pr;
  }

  std::vector<bool> in_alpha(n, false);
  for (int j : alpha) in_alpha[j] = true;
  const int nvars = 1 + k + (n - k);  // nu_0, nu on alpha, off-support slacks
  Mat<T> a;
  Vec<T> b;
  for (int i = 0, slack = 1 + k; i < n; ++i) {
    Vec<T> row(nvars, T(0));
    row[0] = y[i];
    for (int j = 0; j < k; ++j) row[1 + j] = rhat[i][alpha[j]];
    if (!in_alpha[i]) row[slack++] = T(-1);
    a.push_back(std::move(row));
    b.push_back(T(0));
  }
  {
    Vec<T> row(nvars, T(0));
    for (int j = 0; j <= k; ++j) row[j] = T(1);
    a.push_back(std::move(row));
    b.push_back(T(1));
  }
  Vec<T> c(nvars, T(0));
  c[0] = T(1);
  auto res = solve_lp(a, b, c);
  if (res.status != LpResult<T>::kOptimal) return std::nullopt;
  Vec<T> packed(k + 1, T(0));
  for (int j = 0; j <= k; ++j) packed[j] = res.x[j];
  return expand(packed);
}

// Nontrivial LCP solution at q: like solve_lcp but the trivial branch is
// excluded (the anchor may be nonnegative without being a useful answer).
template <class T>
std::optional<LcpSolution<T>> solve_lcp_nontrivial(const Mat<T>& r, const Vec<T>& q) {
  const int n = static_cast<int>(q.size());
  const T scale = lcp_scale(r, q);
  const T tiny = tol_v<T>(1e-12);
  std::vector<int> alpha;
  while (next_support(alpha, n)) {
    auto sol = try_support(r, q, alpha, scale);
    if (!sol) continue;
    T mass(0);
    for (int i = 1; i <= n; ++i) mass += sol->z[i];
    if (mass > tiny) return sol;
  }
  return std::nullopt;
}

// Direct search over supports in lexicographic order; the first pair whose
// reweighted block passes the full checker wins.
template <class T>
std::optional<BuildingBlock<T>> enumerate_block(const Mat<T>& rhat,
                                                const FeasibleSetD<T>& d, const Vec<T>& y,
                                                double eps) {
  const int n = static_cast<int>(rhat.size());
  std::vector<int> alpha;
  while (next_support(alpha, n)) {
    auto pr = pair_from_support(rhat, y, alpha);
    if (!pr) continue;
    auto blk = reweight_block(rhat, y, pr->first, pr->second, eps, "enumeration");
    if (check_block(blk, d, eps).pass) return blk;
  }
  return std::nullopt;
}

}  // namespace detail

// Builds a block by dispatching on the geometry at the anchor:
// (a) the anchor already lies in the face spanned by its active columns;
// (c) a single active column's segment from the anchor travels inside D;
// (d) a shifted copy of the active face meets D with a complementary witness;
// (b) otherwise, the limit of LCP solutions at perturbed anchors pins down a
//     support, and the pair is re-solved at the true anchor.
// Any case that fails the checker falls back to direct support enumeration.
template <class T>
BuildingBlock<T> build_block(const Mat<T>& rhat, const FeasibleSetD<T>& d, const Vec<T>& y,
                             double eps) {
  const int n = static_cast<int>(rhat.size());
  const T tiny = tol_v<T>(1e-12);
  std::vector<int> j_y = active_set(y, d);
  std::string last_failure = "no candidate produced";

  auto attempt = [&](BuildingBlock<T> blk) -> std::optional<BuildingBlock<T>> {
    auto chk = check_block(blk, d, eps);
    if (chk.pass) return blk;
    last_failure = blk.construction + " candidate failed " + chk.failure;
    return std::nullopt;
  };

  if (!j_y.empty()) {
    // (a) anchor in the span of its active columns.
    {
      const int k = static_cast<int>(j_y.size());
      Mat<T> a;
      Vec<T> b;
      for (int i = 0; i < n; ++i) {
        Vec<T> row(k, T(0));
        for (int j = 0; j < k; ++j) row[j] = rhat[i][j_y[j]];
        a.push_back(std::move(row));
        b.push_back(y[i]);
      }
      a.push_back(Vec<T>(k, T(1)));
      b.push_back(T(1));
      if (auto theta = lp_feasible_point(a, b)) {
        Vec<T> nu(n + 1, T(0));
        for (int j = 0; j < k; ++j) nu[j_y[j] + 1] = (*theta)[j];
        if (auto blk = attempt(detail::reweight_block(rhat, y, y, nu, eps, "face")))
          return *blk;
      }
    }

    // (c) single-column segment: the farthest point of [y, r-hat^i] still
    // inside D, provided it moved at all.
    for (int i : j_y) {
      const int nvars = n + 2 + n;  // hull weights, t, cap slack, coord slacks
      Mat<T> a;
      Vec<T> b;
      for (int row_i = 0; row_i < n; ++row_i) {
        Vec<T> row(nvars, T(0));
        for (int j = 0; j < n; ++j) row[j] = rhat[row_i][j];
        row[n] = y[row_i] - rhat[row_i][i];
        a.push_back(std::move(row));
        b.push_back(y[row_i]);
      }
      {
        Vec<T> row(nvars, T(0));
        for (int j = 0; j < n; ++j) row[j] = T(1);
        a.push_back(std::move(row));
        b.push_back(T(1));
      }
      {
        Vec<T> row(nvars, T(0));
        row[n] = T(1);
        row[n + 1] = T(1);
        a.push_back(std::move(row));
        b.push_back(T(1));
      }
      for (int row_i = 0; row_i < n; ++row_i) {
        Vec<T> row(nvars, T(0));
        row[n] = y[row_i] - rhat[row_i][i];
        row[n + 2 + row_i] = T(1);
        a.push_back(std::move(row));
        b.push_back(y[row_i]);
      }
      Vec<T> c(nvars, T(0));
      c[n] = T(-1);
      auto res = solve_lp(a, b, c);
      if (res.status != LpResult<T>::kOptimal) continue;
      T t = res.x[n];
      if (!(t > tol_v<T>(1e-9))) continue;
      Vec<T> w(n, T(0));
      for (int j = 0; j < n; ++j) w[j] = (T(1) - t) * y[j] + t * rhat[j][i];
      if (w[i] != T(0) && abs_val(w[i]) <= tol_v<T>(1e-9)) w[i] = T(0);
      Vec<T> nu(n + 1, T(0));
      nu[0] = T(1) - t;
      nu[i + 1] = t;
      if (auto blk = attempt(detail::reweight_block(rhat, y, w, nu, eps, "segment")))
        return *blk;
    }

    // (d) shifted active face: blend the anchor toward the face until the
    // blend meets D; accept only a complementary witness.
    for (int halvings = 0; halvings <= 40; ++halvings) {
      const T delta = scalar_traits<T>::from_double(std::ldexp(eps, -halvings));
      const int k = static_cast<int>(j_y.size());
      const int nvars = n + k + n;  // hull weights, face weights, coord slacks
      Mat<T> a;
      Vec<T> b;
      for (int i = 0; i < n; ++i) {
        Vec<T> row(nvars, T(0));
        for (int j = 0; j < n; ++j) row[j] = rhat[i][j];
        for (int j = 0; j < k; ++j) row[n + j] = -delta * rhat[i][j_y[j]];
        a.push_back(std::move(row));
        b.push_back((T(1) - delta) * y[i]);
      }
      {
        Vec<T> row(nvars, T(0));
        for (int j = 0; j < n; ++j) row[j] = T(1);
        a.push_back(std::move(row));
        b.push_back(T(1));
      }
      {
        Vec<T> row(nvars, T(0));
        for (int j = 0; j < k; ++j) row[n + j] = T(1);
        a.push_back(std::move(row));
        b.push_back(T(1));
      }
      for (int i = 0; i < n; ++i) {
        Vec<T> row(nvars, T(0));
        for (int j = 0; j < n; ++j) row[j] = rhat[i][j];
        row[n + k + i] = T(-1);
        a.push_back(std::move(row));
        b.push_back(T(0));
      }
      Vec<T> c(nvars, T(0));
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) c[j] += rhat[i][j];  // push w toward the boundary
      auto res = solve_lp(a, b, c);
      if (res.status != LpResult<T>::kOptimal) continue;
      Vec<T> w(n, T(0));
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) w[i] += rhat[i][j] * res.x[j];
        if (w[i] < T(0) && w[i] > -d.tol) w[i] = T(0);
      }
      bool complementary = true;
      for (int j = 0; j < k; ++j)
        if (res.x[n + j] > tiny && abs_val(w[j_y[j]]) > tol_v<T>(1e-9))
          complementary = false;
      if (complementary) {
        Vec<T> nu(n + 1, T(0));
        nu[0] = T(1) - delta;
        for (int j = 0; j < k; ++j) nu[j_y[j] + 1] = delta * res.x[n + j];
        if (auto blk = attempt(detail::reweight_block(rhat, y, w, nu, eps, "shifted_face")))
          return *blk;
      }
      break;
    }

    // (b) interior limit: perturb the anchor toward the active face's
    // barycenter with halving step sizes; once the LCP solution's support
    // stabilizes, re-solve the pair at the true anchor on that support.
    {
      Vec<T> target(n, T(0));
      for (int i = 0; i < n; ++i) {
        for (int j : j_y) target[i] += rhat[i][j];
        target[i] /= T(static_cast<int>(j_y.size()));
      }
      T dirnorm = inf_norm_diff(target, y);
      if (dirnorm > tiny) {
        std::optional<LcpSolution<T>> prev;
        int stable = 0;
        for (int m = 0; m <= 40; ++m) {
          T t = scalar_traits<T>::from_double(std::ldexp(eps, -m)) / dirnorm;
          if (t > T(1)) t = T(1);
          Vec<T> ym(n, T(0));
          for (int i = 0; i < n; ++i) ym[i] = y[i] + t * (target[i] - y[i]);
          auto sol = detail::solve_lcp_nontrivial(rhat, ym);
          if (!sol) {
            prev.reset();
            stable = 0;
            continue;
          }
          if (prev && prev->support == sol->support &&
              scalar_traits<T>::to_double(inf_norm_diff(prev->w, sol->w)) < 1e-7 &&
              scalar_traits<T>::to_double(inf_norm_diff(prev->z, sol->z)) < 1e-7) {
            ++stable;
          } else {
            stable = 0;
          }
          prev = sol;
          if (stable >= 2) break;
        }
        if (prev) {
          if (auto pr = detail::pair_from_support(rhat, y, prev->support)) {
            if (auto blk = attempt(detail::reweight_block(rhat, y, pr->first, pr->second,
                                                          eps, "interior_limit")))
              return *blk;
          }
        }
      }
    }
  }

  if (auto blk = detail::enumerate_block(rhat, d, y, eps)) return *blk;
  throw block_error("build_block: no tuple satisfied the checker (" + last_failure + ")");
}

// Fast anchor map for sequence generation: direct enumeration first (the
// dispatch cases agree with it on every tested input but cost several LP
// solves per step), falling back to the full construction.
template <class T>
BuildingBlock<T> anchor_block(const Mat<T>& rhat, const FeasibleSetD<T>& d, const Vec<T>& y,
                              double eps) {
  if (auto blk = detail::enumerate_block(rhat, d, y, eps)) return *blk;
  return build_block(rhat, d, y, eps);
}

}  // namespace quitting
