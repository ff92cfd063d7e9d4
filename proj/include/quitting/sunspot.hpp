#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "quitting/block.hpp"
#include "quitting/classify.hpp"
#include "quitting/game.hpp"
#include "quitting/lp.hpp"

namespace quitting {

// A sunspot-driven profile: play proceeds in kiloblocks. Entering a kiloblock
// the public signal draws a type by z; type 0 means everyone continues for
// block_len stages, type t >= 1 asks the t-th normal player to quit with
// total probability lambda[t] spread over block_len stages. When the block
// ends without a quit, play moves to next[type] if given; a kiloblock without
// a next map redraws its own type on t >= 1 and falls through to the next
// kiloblock on type 0. After the last kiloblock everyone continues forever.
template <class T>
struct Kiloblock {
  Vec<T> z;                 // length n+1 over types {0..n}
  std::map<int, T> lambda;  // type (1..n) -> in-block quit probability
  long block_len = 1;
  std::map<int, int> next;  // type -> successor index; empty map = redraw
};

template <class T>
struct SunspotProfile {
  int players = 0;
  std::vector<int> player_order;  // type t corresponds to player_order[t-1]
  std::vector<Kiloblock<T>> kiloblocks;
  std::string tail = "continue";
};

// Smallest block length whose per-stage hazard keeps every single stage's
// quit probability strictly below eps.
inline long min_block_len(double lambda_max, double eps) {
  if (lambda_max <= 0.0) return 1;
  for (long c = 1; c <= 1000000; ++c)
    if (1.0 - std::pow(1.0 - lambda_max, 1.0 / static_cast<double>(c)) < eps) return c;
  return 1000000;
}

// ---------------------------------------------------------------------------
// Anchor sequences
// ---------------------------------------------------------------------------

template <class T>
struct AnchorSequence {
  std::vector<Vec<T>> points;            // y^0 ... y^K
  std::vector<BuildingBlock<T>> blocks;  // blocks[k] is built at points[k]
  T drift_sum = T(0);
  T jump_sum = T(0);
  T drift_target = T(0);
  int aitken_jumps = 0;
  bool reached_target = false;
};

// Deterministic starting anchor: the lexicographically smallest of the
// single-coordinate targets when the restricted matrix supports them, else
// of the LCP images of the payoff columns.
template <class T>
Vec<T> initial_anchor(const Mat<T>& rhat) {
  const int n = static_cast<int>(rhat.size());
  std::vector<Vec<T>> cands;
  bool paths = is_sign_M(rhat);
  if (paths) {
    try {
      paths = inverse_positive(rhat);
    } catch (const game_error&) {
      paths = false;
    }
  }
  if (paths) {
    for (int i = 0; i < n; ++i) {
      Vec<T> e(n, T(0));
      e[i] = T(1);
      auto lam = solve_linear(rhat, e);
      if (!lam) continue;
      T l1(0);
      for (const T& v : *lam) l1 += abs_val(v);
      if (!(l1 > T(0))) continue;
      Vec<T> w(n, T(0));
      w[i] = T(1) / l1;
      cands.push_back(std::move(w));
    }
  }
  if (cands.empty()) {
    for (int i = 0; i < n; ++i) {
      Vec<T> q(n, T(0));
      for (int r = 0; r < n; ++r) q[r] = rhat[r][i];
      if (auto sol = solve_lcp(rhat, q)) cands.push_back(sol->w);
    }
  }
  if (cands.empty()) throw game_error("no deterministic starting anchor found");
  return *std::min_element(cands.begin(), cands.end());
}

// Iterates y <- w(y) until the accumulated drift exceeds the target. Slowly
// converging stretches are cut short by extrapolating the limit point; the
// discrepancy each cut introduces is charged to the jump budget, which the
// caller checks against eps.
template <class T, class Step>
AnchorSequence<T> generate_sequence_core(const Vec<T>& y0, Step&& step, const T& drift_target,
                                         long long cap = 10000000) {
  AnchorSequence<T> seq;
  seq.drift_target = drift_target;
  seq.points.push_back(y0);
  Vec<T> y = y0;
  int tiny_run = 0;
  std::deque<T> window;
  T window_sum(0);
  while (!(seq.drift_sum > drift_target)) {
    if (static_cast<long long>(seq.blocks.size()) >= cap)
      throw game_error("anchor sequence hit the iteration cap before accumulating drift");
    seq.blocks.push_back(step(y));
    const BuildingBlock<T>& blk = seq.blocks.back();
    const T d = inf_norm_diff(y, blk.w);
    seq.drift_sum += d;
    if (scalar_traits<T>::to_double(d) < 1e-10) {
      if (++tiny_run >= 3)
        throw game_error("anchor map reached a fixed point: a stationary profile applies");
    } else {
      tiny_run = 0;
    }
    window.push_back(d);
    window_sum += d;
    if (window.size() > 20) {
      window_sum -= window.front();
      window.pop_front();
    }
    if (window.size() == 20 && scalar_traits<T>::to_double(window_sum) < 1e-7 &&
        seq.points.size() >= 2) {
      const Vec<T>& a = seq.points[seq.points.size() - 2];
      const Vec<T>& b = seq.points.back();
      const Vec<T>& c = blk.w;
      Vec<T> ext(c.size(), T(0));
      for (size_t j = 0; j < c.size(); ++j) {
        const T d1 = b[j] - a[j];
        const T d2 = c[j] - b[j];
        const T denom = d2 - d1;
        ext[j] = abs_val(denom) <= tol_v<T>(1e-30) ? c[j] : c[j] - d2 * d2 / denom;
        if (ext[j] < T(0) && ext[j] > -tol_v<T>(1e-9)) ext[j] = T(0);
      }
      seq.jump_sum += inf_norm_diff(ext, c);
      ++seq.aitken_jumps;
      seq.points.push_back(ext);
      y = ext;
      window.clear();
      window_sum = T(0);
      continue;
    }
    seq.points.push_back(blk.w);
    y = blk.w;
  }
  seq.reached_target = true;
  return seq;
}

template <class T>
AnchorSequence<T> generate_sequence(const Classification<T>& cls, const FeasibleSetD<T>& d,
                                    double eps) {
  const Mat<T>& rhat = restricted_matrix(cls);
  if (nontrivial_zero_solution(rhat))
    throw game_error("restricted matrix admits a zero solution: a stationary profile applies");
  const int n = static_cast<int>(rhat.size());
  const double target = n * (n - 1) * (1.0 + eps) / (eps * eps);
  Vec<T> y0 = initial_anchor(rhat);
  auto step = [&](const Vec<T>& y) { return anchor_block(rhat, d, y, eps); };
  return generate_sequence_core(y0, step, scalar_traits<T>::from_double(target));
}

// The profile plays the sequence backwards: the first kiloblock realizes the
// last block built, whose continuation anchor is realized by the next one,
// and so on down to y^0 whose continuation is the all-continue tail.
template <class T>
SunspotProfile<T> assemble_profile(const Classification<T>& cls, const AnchorSequence<T>& seq,
                                   double eps) {
  SunspotProfile<T> prof;
  prof.players = static_cast<int>(cls.chain.front().size());
  prof.player_order = cls.player_order;
  for (int k = static_cast<int>(seq.blocks.size()) - 1; k >= 0; --k) {
    const BuildingBlock<T>& blk = seq.blocks[k];
    Kiloblock<T> kb;
    kb.z = blk.z;
    double lmax = 0.0;
    for (const auto& [i, lam] : blk.lambda) {
      kb.lambda[i + 1] = lam;
      lmax = std::max(lmax, scalar_traits<T>::to_double(lam));
    }
    kb.block_len = min_block_len(lmax, eps);
    prof.kiloblocks.push_back(std::move(kb));
  }
  return prof;
}

// ---------------------------------------------------------------------------
// Profile evaluation
// ---------------------------------------------------------------------------

namespace detail {

template <class T>
int successor_index(const Kiloblock<T>& kb, int k, int type, int K) {
  auto it = kb.next.find(type);
  int idx = it == kb.next.end() ? k + 1 : it->second;
  if (idx <= k) throw game_error("profile successor points backward");
  return idx > K ? K : idx;
}

template <class T>
T lambda_of(const Kiloblock<T>& kb, int type) {
  auto it = kb.lambda.find(type);
  return it == kb.lambda.end() ? T(0) : it->second;
}

template <class T>
T payoff_bound(const QuittingGame<T>& game) {
  T m(1);
  for (const auto& [mask, vec] : game.payoffs)
    for (const T& v : vec)
      if (abs_val(v) > m) m = abs_val(v);
  for (const T& v : game.default_vec)
    if (abs_val(v) > m) m = abs_val(v);
  return m;
}

}  // namespace detail

// Expected payoff vector under the profile, by backward induction over
// kiloblocks. Redraw kiloblocks have the closed form
//   V = (z_0 V_next + sum z_t lambda_t r^t) / (z_0 + sum z_t lambda_t).
template <class T>
Vec<T> exact_value(const QuittingGame<T>& game, const SunspotProfile<T>& prof) {
  const int N = game.n_players;
  const int K = static_cast<int>(prof.kiloblocks.size());
  std::vector<Vec<T>> val(K + 1);
  val[K] = game.payoff(0);
  for (int k = K - 1; k >= 0; --k) {
    const Kiloblock<T>& kb = prof.kiloblocks[k];
    const int ntypes = static_cast<int>(kb.z.size());
    Vec<T> v(N, T(0));
    if (kb.next.empty()) {
      T denom = kb.z[0];
      for (int t = 1; t < ntypes; ++t) {
        if (kb.z[t] == T(0)) continue;
        const T lam = detail::lambda_of(kb, t);
        denom += kb.z[t] * lam;
        const Vec<T>& r = game.payoff(1u << prof.player_order[t - 1]);
        for (int c = 0; c < N; ++c) v[c] += kb.z[t] * lam * r[c];
      }
      if (denom == T(0)) {
        val[k] = val[k + 1];
        continue;
      }
      for (int c = 0; c < N; ++c) v[c] = (kb.z[0] * val[k + 1][c] + v[c]) / denom;
    } else {
      if (kb.z[0] > T(0)) {
        const Vec<T>& succ = val[detail::successor_index(kb, k, 0, K)];
        for (int c = 0; c < N; ++c) v[c] += kb.z[0] * succ[c];
      }
      for (int t = 1; t < ntypes; ++t) {
        if (kb.z[t] == T(0)) continue;
        const T lam = detail::lambda_of(kb, t);
        const Vec<T>& r = game.payoff(1u << prof.player_order[t - 1]);
        const Vec<T>& succ = val[detail::successor_index(kb, k, t, K)];
        for (int c = 0; c < N; ++c)
          v[c] += kb.z[t] * (lam * r[c] + (T(1) - lam) * succ[c]);
      }
    }
    val[k] = std::move(v);
  }
  return val.empty() ? game.payoff(0) : val[0];
}

// Probability that some player quits before the tail is reached.
template <class T>
T termination_prob(const SunspotProfile<T>& prof) {
  const int K = static_cast<int>(prof.kiloblocks.size());
  std::vector<T> surv(K + 1, T(1));
  for (int k = K - 1; k >= 0; --k) {
    const Kiloblock<T>& kb = prof.kiloblocks[k];
    const int ntypes = static_cast<int>(kb.z.size());
    if (kb.next.empty()) {
      T absorb(0);
      for (int t = 1; t < ntypes; ++t) absorb += kb.z[t] * detail::lambda_of(kb, t);
      const T denom = kb.z[0] + absorb;
      surv[k] = denom == T(0) ? T(1) : (kb.z[0] / denom) * surv[k + 1];
    } else {
      T s(0);
      if (kb.z[0] > T(0)) s += kb.z[0] * surv[detail::successor_index(kb, k, 0, K)];
      for (int t = 1; t < ntypes; ++t) {
        if (kb.z[t] == T(0)) continue;
        s += kb.z[t] * (T(1) - detail::lambda_of(kb, t)) *
             surv[detail::successor_index(kb, k, t, K)];
      }
      surv[k] = s;
    }
  }
  return T(1) - surv[0];
}

// Value of the best deviation for one player against everyone else following
// the profile. Within a block the deviator optimizes stage by stage against
// the scheduled quitter's per-stage hazard; redraw kiloblocks give a
// one-dimensional fixed point solved by bisection (the map is a monotone
// contraction whenever the kiloblock can end).
template <class T>
T deviation_value(const QuittingGame<T>& game, const SunspotProfile<T>& prof, int player) {
  const int K = static_cast<int>(prof.kiloblocks.size());
  const T r_own = game.payoff(1u << player)[player];
  std::vector<T> dval(K + 1, T(0));
  dval[K] = std::max<T>(r_own, game.payoff(0)[player]);
  for (int k = K - 1; k >= 0; --k) {
    const Kiloblock<T>& kb = prof.kiloblocks[k];
    const int ntypes = static_cast<int>(kb.z.size());

    auto block_best = [&](int type, const T& cont) -> T {
      const int q = prof.player_order[type - 1];
      if (q == player) return std::max<T>(r_own, cont);
      const double lam = scalar_traits<T>::to_double(detail::lambda_of(kb, type));
      const T p = scalar_traits<T>::from_double(
          1.0 - std::pow(1.0 - lam, 1.0 / static_cast<double>(kb.block_len)));
      const T rq = game.payoff(1u << q)[player];
      const T rboth = game.payoff((1u << q) | (1u << player))[player];
      T val = cont;
      for (long s = 0; s < kb.block_len; ++s) {
        const T quit_now = p * rboth + (T(1) - p) * r_own;
        const T keep = p * rq + (T(1) - p) * val;
        val = std::max<T>(quit_now, keep);
      }
      return val;
    };

    if (kb.next.empty()) {
      const T b0 = std::max<T>(r_own, dval[k + 1]);
      auto g = [&](const T& w) {
        T out = kb.z[0] * b0;
        for (int t = 1; t < ntypes; ++t) {
          if (kb.z[t] == T(0)) continue;
          out += kb.z[t] * block_best(t, w);
        }
        return out;
      };
      const T m = detail::payoff_bound(game) + T(1);
      T lo = -m, hi = m;
      for (int it = 0; it < 90; ++it) {
        T mid = (lo + hi) / T(2);
        if (g(mid) >= mid)
          lo = mid;
        else
          hi = mid;
      }
      dval[k] = (lo + hi) / T(2);
    } else {
      T out(0);
      if (kb.z[0] > T(0))
        out += kb.z[0] *
               std::max<T>(r_own, dval[detail::successor_index(kb, k, 0, K)]);
      for (int t = 1; t < ntypes; ++t) {
        if (kb.z[t] == T(0)) continue;
        out += kb.z[t] * block_best(t, dval[detail::successor_index(kb, k, t, K)]);
      }
      dval[k] = out;
    }
  }
  return dval[0];
}

template <class T>
struct EvaluationReport {
  Vec<T> value;
  Vec<T> gains;
  T termination = T(0);
  double eps = 0.0;
  double bound_factor = 0.0;
  T bound = T(0);
  bool pass = false;
};

template <class T>
EvaluationReport<T> verify_sunspot(const QuittingGame<T>& game, const SunspotProfile<T>& prof,
                                   double eps, double bound_factor = 10.0) {
  EvaluationReport<T> rep;
  rep.value = exact_value(game, prof);
  rep.termination = termination_prob(prof);
  rep.eps = eps;
  rep.bound_factor = bound_factor;
  rep.bound = scalar_traits<T>::from_double(bound_factor * eps);
  rep.pass = true;
  for (int i = 0; i < game.n_players; ++i) {
    T g = deviation_value(game, prof, i) - rep.value[i];
    rep.gains.push_back(g);
    if (g > rep.bound + tol_v<T>(1e-9)) rep.pass = false;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Monte Carlo playout
// ---------------------------------------------------------------------------

struct SimulationReport {
  Vec<double> mean;
  Vec<double> se;
  double termination_freq = 0.0;
  std::map<int, long long> histogram;  // 1-based kiloblock of the quit
  long long runs = 0;
  std::uint64_t seed = 0;
};

inline SimulationReport simulate(const QuittingGame<double>& game,
                                 const SunspotProfile<double>& prof, long long runs,
                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int N = game.n_players;
  const int K = static_cast<int>(prof.kiloblocks.size());
  SimulationReport rep;
  rep.runs = runs;
  rep.seed = seed;
  Vec<double> sum(N, 0.0), sumsq(N, 0.0);
  long long terminated = 0;
  const long long stage_cap = 10000000;
  for (long long run = 0; run < runs; ++run) {
    int k = 0;
    long long stages = 0;
    const Vec<double>* payoff = nullptr;
    int quit_block = 0;
    while (k < K && stages < stage_cap) {
      const Kiloblock<double>& kb = prof.kiloblocks[k];
      const int ntypes = static_cast<int>(kb.z.size());
      double u = unif(rng);
      int type = -1;
      double acc = 0.0;
      for (int t = 0; t < ntypes; ++t) {
        acc += kb.z[t];
        if (u < acc) {
          type = t;
          break;
        }
      }
      if (type < 0) {
        for (int t = ntypes - 1; t >= 0; --t)
          if (kb.z[t] > 0.0) {
            type = t;
            break;
          }
        if (type < 0) type = 0;
      }
      if (type == 0) {
        stages += kb.block_len;
        k = kb.next.empty() ? k + 1 : detail::successor_index(kb, k, 0, K);
        continue;
      }
      const double lam = detail::lambda_of(kb, type);
      const double p = 1.0 - std::pow(1.0 - lam, 1.0 / static_cast<double>(kb.block_len));
      bool quit = false;
      for (long s = 0; s < kb.block_len; ++s) {
        ++stages;
        if (unif(rng) < p) {
          quit = true;
          break;
        }
      }
      if (quit) {
        payoff = &game.payoff(1u << prof.player_order[type - 1]);
        quit_block = k + 1;
        break;
      }
      if (!kb.next.empty()) k = detail::successor_index(kb, k, type, K);
    }
    if (payoff) {
      ++terminated;
      ++rep.histogram[quit_block];
    } else {
      payoff = &game.payoff(0);
    }
    for (int c = 0; c < N; ++c) {
      sum[c] += (*payoff)[c];
      sumsq[c] += (*payoff)[c] * (*payoff)[c];
    }
  }
  rep.mean.assign(N, 0.0);
  rep.se.assign(N, 0.0);
  for (int c = 0; c < N; ++c) {
    rep.mean[c] = sum[c] / static_cast<double>(runs);
    const double var =
        runs > 1 ? std::max(0.0, (sumsq[c] - runs * rep.mean[c] * rep.mean[c]) /
                                     static_cast<double>(runs - 1))
                 : 0.0;
    rep.se[c] = std::sqrt(var / static_cast<double>(runs));
  }
  rep.termination_freq = static_cast<double>(terminated) / static_cast<double>(runs);
  return rep;
}

// ---------------------------------------------------------------------------
// Target paths for inverse-positive sign-patterned matrices
// ---------------------------------------------------------------------------

// For matrices with zero diagonal, exactly one positive entry per row and
// column and a nonnegative inverse, every single-coordinate payoff target
// w^i = e_i / |lambda^i|_1 is reachable by a two-phase lottery: quit on the
// branch column with weight alpha, otherwise restart from a follow-up anchor
// y that is itself a mix (beta) of the other targets.
template <class T>
struct MTarget {
  Vec<T> w;
  Vec<T> lambda;
  T l1 = T(0);
  T alpha = T(0);
  int j = -1;  // 0-based branch column
  Vec<T> y;
  Vec<T> beta;
};

template <class T>
std::vector<MTarget<T>> m_matrix_targets(const Mat<T>& rhat) {
  const int n = static_cast<int>(rhat.size());
  if (!is_sign_M(rhat))
    throw game_error("restricted matrix does not have the one-positive-per-line sign pattern");
  if (!inverse_positive(rhat))
    throw game_error("restricted matrix inverse has negative entries");
  const T tiny = tol_v<T>(1e-12);
  std::vector<MTarget<T>> ts(n);
  for (int i = 0; i < n; ++i) {
    Vec<T> e(n, T(0));
    e[i] = T(1);
    auto lam = solve_linear(rhat, e);
    if (!lam) throw game_error("restricted matrix is singular");
    ts[i].lambda = *lam;
    for (const T& v : ts[i].lambda) ts[i].l1 += abs_val(v);
    if (!(ts[i].l1 > T(0))) throw game_error("degenerate target path weights");
    ts[i].w.assign(n, T(0));
    ts[i].w[i] = T(1) / ts[i].l1;
  }
  for (int i = 0; i < n; ++i) {
    int j = -1;
    for (int col = 0; col < n; ++col)
      if (rhat[i][col] > tiny) j = col;
    if (j < 0) throw game_error("no positive entry in a restricted matrix row");
    ts[i].j = j;
    const T alpha_raw = ts[i].w[i] / rhat[i][j];
    ts[i].alpha = alpha_raw < T(1) ? alpha_raw : T(1) / T(2);
    ts[i].y.assign(n, T(0));
    for (int c = 0; c < n; ++c) {
      ts[i].y[c] = (ts[i].w[c] - ts[i].alpha * rhat[c][j]) / (T(1) - ts[i].alpha);
      if (ts[i].y[c] < T(0) && ts[i].y[c] > -tol_v<T>(1e-9)) ts[i].y[c] = T(0);
      if (ts[i].y[c] < T(0))
        throw game_error("target path left the nonnegative orthant");
    }
    ts[i].beta.assign(n, T(0));
    T bsum(0);
    for (int c = 0; c < n; ++c) {
      ts[i].beta[c] = ts[i].y[c] * ts[c].l1;
      bsum += ts[i].beta[c];
    }
    if (abs_val(bsum - T(1)) > tol_v<T>(1e-9))
      throw game_error("target path mix does not sum to one");
    for (T& v : ts[i].beta) v /= bsum;
  }
  return ts;
}

// Builds a finite profile whose expected payoff equals the target (up to the
// truncation mass) and from which no player gains by deviating: a layered
// chain of advance kiloblocks following the target paths.
template <class T>
SunspotProfile<T> implement_payoff(const QuittingGame<T>& game, const Classification<T>& cls,
                                   const Vec<T>& target, double eps) {
  const Mat<T>& rhat = restricted_matrix(cls);
  const int n = static_cast<int>(rhat.size());
  const int N = game.n_players;
  auto ts = m_matrix_targets(rhat);

  for (const T& v : target)
    if (v < -tol_v<T>(1e-9))
      throw game_error("target payoff has a negative coordinate");
  {
    Mat<T> a;
    Vec<T> b;
    for (int c = 0; c < N; ++c) {
      Vec<T> row(n, T(0));
      for (int j = 0; j < n; ++j) row[j] = game.payoff(1u << cls.player_order[j])[c];
      a.push_back(std::move(row));
      b.push_back(target[c]);
    }
    a.push_back(Vec<T>(n, T(1)));
    b.push_back(T(1));
    if (!lp_feasible_point(a, b))
      throw game_error("target payoff is not a feasible quit-payoff mixture");
  }

  Vec<T> mix0(n, T(0));
  T bsum(0);
  for (int j = 0; j < n; ++j) {
    mix0[j] = target[cls.player_order[j]] * ts[j].l1;
    if (mix0[j] < T(0)) mix0[j] = T(0);
    bsum += mix0[j];
  }
  if (abs_val(bsum - T(1)) > tol_v<T>(1e-6))
    throw game_error("target payoff is not spanned by the target paths");
  for (T& v : mix0) v /= bsum;

  double alpha_min = 1.0;
  for (const auto& t : ts)
    alpha_min = std::min(alpha_min, scalar_traits<T>::to_double(t.alpha));
  const int max_depth =
      static_cast<int>(std::ceil(std::log(1e-12) / std::log(1.0 - alpha_min)));

  SunspotProfile<T> prof;
  prof.players = N;
  prof.player_order = cls.player_order;

  struct Node {
    int depth;
    Vec<T> mix;
  };
  std::vector<Node> nodes;
  std::map<std::pair<int, std::vector<long long>>, int> seen;
  auto intern = [&](int depth, const Vec<T>& mix) -> int {
    if (depth > max_depth) return -1;  // resolved to the tail afterwards
    std::vector<long long> key(mix.size());
    for (size_t j = 0; j < mix.size(); ++j)
      key[j] = std::llround(scalar_traits<T>::to_double(mix[j]) * 1e12);
    auto [it, inserted] = seen.try_emplace({depth, std::move(key)}, 0);
    if (inserted) {
      it->second = static_cast<int>(nodes.size());
      nodes.push_back({depth, mix});
    }
    return it->second;
  };
  intern(1, mix0);

  std::vector<Kiloblock<T>> blocks;
  for (size_t idx = 0; idx < nodes.size(); ++idx) {
    const int depth = nodes[idx].depth;
    const Vec<T> mix = nodes[idx].mix;
    Kiloblock<T> kb;
    kb.z.assign(n + 1, T(0));
    double lmax = 0.0;
    T mass(0);
    for (int j = 0; j < n; ++j) {
      if (!(mix[j] > tol_v<T>(1e-12))) continue;
      const int type = ts[j].j + 1;
      if (kb.z[type] > T(0)) throw game_error("branch columns collide");
      kb.z[type] = mix[j];
      mass += mix[j];
      kb.lambda[type] = ts[j].alpha;
      lmax = std::max(lmax, scalar_traits<T>::to_double(ts[j].alpha));
      const int child = intern(depth + 1, ts[j].beta);
      kb.next[type] = child;  // -1 patched to the tail index below
    }
    if (!(mass > T(0))) throw game_error("empty branch mix");
    for (T& v : kb.z) v /= mass;
    kb.block_len = min_block_len(lmax, eps);
    blocks.push_back(std::move(kb));
  }
  const int K = static_cast<int>(blocks.size());
  for (auto& kb : blocks)
    for (auto& [t, idx] : kb.next)
      if (idx < 0) idx = K;
  prof.kiloblocks = std::move(blocks);
  return prof;
}

// ---------------------------------------------------------------------------
// End-to-end pipeline
// ---------------------------------------------------------------------------

template <class T>
struct SunspotResult {
  AnchorSequence<T> seq;
  SunspotProfile<T> profile;
  EvaluationReport<T> report;
  bool drift_ok = false;
  bool jump_ok = false;
  bool value_near_anchor = false;  // |value - w(y^K)| < 2 eps on normal coords
  bool megablocks_ok = false;      // every full megablock mixes >= 2 quitters
};

template <class T>
SunspotResult<T> build_sunspot(const QuittingGame<T>& game, double eps,
                               double bound_factor = 10.0) {
  auto cls = classify_players(game);
  const Mat<T>& rhat = restricted_matrix(cls);
  auto d = make_feasible_set(rhat);
  SunspotResult<T> res;
  res.seq = generate_sequence(cls, d, eps);
  res.profile = assemble_profile(cls, res.seq, eps);
  res.report = verify_sunspot(game, res.profile, eps, bound_factor);
  res.drift_ok = res.seq.reached_target;
  res.jump_ok = res.seq.jump_sum < scalar_traits<T>::from_double(eps);

  const int n = static_cast<int>(rhat.size());
  const Vec<T>& wlast = res.seq.blocks.back().w;
  res.value_near_anchor = true;
  const T vtol = scalar_traits<T>::from_double(2.0 * eps) + tol_v<T>(1e-9);
  for (int m = 0; m < n; ++m)
    if (abs_val(res.report.value[cls.player_order[m]] - wlast[m]) > vtol)
      res.value_near_anchor = false;

  // Megablock accounting: group kiloblocks in play order until their drift
  // exceeds 2/eps; within every completed group at least two distinct normal
  // players should carry at least eps of expected quit weight.
  res.megablocks_ok = true;
  const int K = static_cast<int>(res.seq.blocks.size());
  const T group_target = scalar_traits<T>::from_double(2.0 / eps);
  const T eps_t = scalar_traits<T>::from_double(eps);
  T acc(0);
  Vec<T> weight(n, T(0));
  for (int kb = 0; kb < K; ++kb) {
    const int m = K - 1 - kb;  // block realized by this kiloblock
    acc += inf_norm_diff(res.seq.points[m], res.seq.blocks[m].w);
    const auto& blk = res.seq.blocks[m];
    for (const auto& [i, lam] : blk.lambda) weight[i] += blk.z[i + 1] * lam;
    if (acc > group_target) {
      int heavy = 0;
      for (int i = 0; i < n; ++i)
        if (weight[i] >= eps_t) ++heavy;
      if (heavy < 2) res.megablocks_ok = false;
      acc = T(0);
      weight.assign(n, T(0));
    }
  }
  return res;
}

}  // namespace quitting
