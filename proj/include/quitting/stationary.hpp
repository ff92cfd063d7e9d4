#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "quitting/classify.hpp"
#include "quitting/game.hpp"
#include "quitting/lcp.hpp"

namespace quitting {

template <class T>
struct StationaryReport {
  Vec<T> x;
  Vec<T> payoff;
  Vec<T> gains;
  double eps = 0.0;          // requested epsilon
  double eps_used = 0.0;     // epsilon actually used after adaptive halving
  double bound_factor = 0.0; // gains are required to stay below factor * eps
  T bound = T(0);
  bool pass = false;
  std::string method;
};

template <class T>
StationaryReport<T> verify_stationary(const QuittingGame<T>& game, const Vec<T>& x,
                                      const T& bound) {
  StationaryReport<T> rep;
  rep.x = x;
  rep.payoff = stationary_payoff(game, x);
  rep.bound = bound;
  rep.pass = true;
  for (int i = 0; i < game.n_players; ++i) {
    T g = stationary_deviation_gain(game, x, i);
    rep.gains.push_back(g);
    if (g > bound + tol_v<T>(1e-9)) rep.pass = false;
  }
  return rep;
}

namespace detail {

// Profile where i quits with probability eps and a player that keeps i's
// quit payoff down backs it up with eps^2. Requires r^i >= 0 so that i is
// content to be the quitter.
template <class T>
std::optional<StationaryProfile<T>> quit_pair(const QuittingGame<T>& game, int i,
                                              double eps) {
  const T slack = tol_v<T>(1e-12);
  for (const T& v : game.payoff(1u << i))
    if (v < -slack) return std::nullopt;
  for (int j = 0; j < game.n_players; ++j) {
    if (j == i) continue;
    if (game.payoff(1u << j)[i] <= slack) {
      StationaryProfile<T> p;
      p.quit_probs.assign(game.n_players, T(0));
      const T e = scalar_traits<T>::from_double(eps);
      p.quit_probs[i] = e;
      p.quit_probs[j] = e * e;
      return p;
    }
  }
  return std::nullopt;
}

}  // namespace detail

// Constructs a stationary profile by the first applicable rule, verifying the
// advertised bound and halving epsilon (up to 20 times) when the bound is
// stated for smaller epsilon than requested:
//   - all-continue when the no-quitting payoff is nonnegative (exact);
//   - a lone quitter when no player can be punished;
//   - a quit-pair seeded at the deepest classification level, or generically
//     at any player with nonnegative quit payoff and a punisher;
//   - quit probabilities proportional to a zero solution of the restricted
//     matrix when one exists.
template <class T>
StationaryReport<T> find_stationary(const QuittingGame<T>& game, double eps) {
  const auto cls = classify_players(game);
  const T slack = tol_v<T>(1e-12);
  std::optional<StationaryReport<T>> last;

  auto run = [&](const StationaryProfile<T>& prof, double factor, const char* method,
                 double eps_used) {
    auto rep = verify_stationary(game, prof.quit_probs,
                                 scalar_traits<T>::from_double(factor * eps));
    rep.eps = eps;
    rep.eps_used = eps_used;
    rep.bound_factor = factor;
    rep.method = method;
    return rep;
  };

  auto try_halving = [&](auto&& build, double factor,
                         const char* method) -> std::optional<StationaryReport<T>> {
    for (int t = 0; t <= 20; ++t) {
      const double e = std::ldexp(eps, -t);
      auto prof = build(e);
      if (!prof) return std::nullopt;
      auto rep = run(*prof, factor, method, e);
      if (rep.pass) return rep;
      last = rep;
    }
    return std::nullopt;
  };

  {
    bool nonneg = true;
    for (const T& v : game.payoff(0))
      if (v < -slack) nonneg = false;
    if (nonneg) {
      StationaryProfile<T> p;
      p.quit_probs.assign(game.n_players, T(0));
      return run(p, 0.0, "all-continue", eps);
    }
  }

  const bool i1_empty = cls.chain.size() >= 2 && cls.chain[1].empty();
  if (i1_empty) {
    int who = 0;
    for (int i = 0; i < game.n_players; ++i)
      if (game.payoff(0)[i] < -slack) {
        who = i;
        break;
      }
    auto build = [&](double e) -> std::optional<StationaryProfile<T>> {
      StationaryProfile<T> p;
      p.quit_probs.assign(game.n_players, T(0));
      p.quit_probs[who] = scalar_traits<T>::from_double(e);
      return p;
    };
    if (auto rep = try_halving(build, 2.0, "lone-quitter")) return *rep;
  } else if (cls.normal_set.empty()) {
    int lvl = static_cast<int>(cls.chain.size()) - 1;
    while (lvl >= 0 && cls.chain[lvl].empty()) --lvl;
    for (int i : cls.chain[lvl]) {
      auto build = [&](double e) { return detail::quit_pair(game, i, e); };
      if (!detail::quit_pair(game, i, eps)) continue;
      if (auto rep = try_halving(build, 4.0, "quit-pair")) return *rep;
    }
  } else {
    if (auto v = nontrivial_zero_solution(cls.restricted)) {
      if (v->support.size() == 1) {
        const int i = cls.player_order[v->support[0]];
        auto build = [&](double e) { return detail::quit_pair(game, i, e); };
        if (detail::quit_pair(game, i, eps))
          if (auto rep = try_halving(build, 4.0, "quit-pair")) return *rep;
      } else {
        const int n = static_cast<int>(cls.player_order.size());
        auto build = [&](double e) -> std::optional<StationaryProfile<T>> {
          StationaryProfile<T> p;
          p.quit_probs.assign(game.n_players, T(0));
          const T e_t = scalar_traits<T>::from_double(e);
          for (int j = 0; j < n; ++j)
            p.quit_probs[cls.player_order[j]] = e_t * v->z[j + 1];
          return p;
        };
        if (auto rep = try_halving(build, 4.0, "scaled-zero-solution")) return *rep;
      }
    }
  }

  for (int i = 0; i < game.n_players; ++i) {
    auto build = [&](double e) { return detail::quit_pair(game, i, e); };
    if (!detail::quit_pair(game, i, eps)) continue;
    if (auto rep = try_halving(build, 4.0, "quit-pair")) return *rep;
  }

  if (last) return *last;
  throw game_error("no stationary construction applies to this game");
}

}  // namespace quitting
