#pragma once

#include <map>
#include <stdexcept>
#include <vector>

#include "quitting/linalg.hpp"
#include "quitting/scalar.hpp"

namespace quitting {

struct game_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Players are 0-based internally; subset masks use bit i for player i.
// Subsets missing from the map take default_vec (zero before normalization).
template <class T>
struct QuittingGame {
  int n_players = 0;
  std::map<uint32_t, Vec<T>> payoffs;
  Vec<T> default_vec;
  bool defaults_used = false;
  bool normalized = false;
  T scale_factor = T(1);  // original payoff = stored payoff * scale_factor
  Vec<T> shift;           // per-player constant subtracted by normalize

  const Vec<T>& payoff(uint32_t mask) const {
    auto it = payoffs.find(mask);
    return it == payoffs.end() ? default_vec : it->second;
  }
};

template <class T>
struct StationaryProfile {
  Vec<T> quit_probs;
};

template <class T>
QuittingGame<T> normalize(QuittingGame<T> game) {
  const int n = game.n_players;
  Vec<T> shift(n, T(0));
  for (int i = 0; i < n; ++i) shift[i] = game.payoff(1u << i)[i];
  for (auto& [mask, vec] : game.payoffs)
    for (int i = 0; i < n; ++i) vec[i] -= shift[i];
  for (int i = 0; i < n; ++i) game.default_vec[i] -= shift[i];
  if (game.shift.empty()) game.shift.assign(n, T(0));
  for (int i = 0; i < n; ++i) game.shift[i] += shift[i];

  T scale(0);
  for (const auto& [mask, vec] : game.payoffs)
    if (max_abs(vec) > scale) scale = max_abs(vec);
  if (max_abs(game.default_vec) > scale) scale = max_abs(game.default_vec);
  if (scale > T(1)) {
    for (auto& [mask, vec] : game.payoffs)
      for (auto& v : vec) v /= scale;
    for (auto& v : game.default_vec) v /= scale;
    game.scale_factor *= scale;
  }
  game.normalized = true;
  return game;
}

template <class T>
bool is_zero_profile(const Vec<T>& x) {
  for (const auto& v : x)
    if (v != T(0)) return false;
  return true;
}

template <class T>
Vec<T> stationary_payoff(const QuittingGame<T>& game, const Vec<T>& x) {
  const int n = game.n_players;
  if (is_zero_profile(x)) return game.payoff(0);
  Vec<T> num(n, T(0));
  T cont_all(1);
  for (int i = 0; i < n; ++i) cont_all *= T(1) - x[i];
  const uint32_t full = 1u << n;
  for (uint32_t mask = 1; mask < full; ++mask) {
    T weight(1);
    for (int i = 0; i < n; ++i) weight *= (mask >> i) & 1 ? x[i] : T(1) - x[i];
    if (weight == T(0)) continue;
    const Vec<T>& r = game.payoff(mask);
    for (int i = 0; i < n; ++i) num[i] += weight * r[i];
  }
  T den = T(1) - cont_all;
  for (auto& v : num) v /= den;
  return num;
}

template <class T>
Vec<T> stationary_payoff(const QuittingGame<T>& game, const StationaryProfile<T>& x) {
  return stationary_payoff(game, x.quit_probs);
}

template <class T>
Vec<T> discounted_payoff(const QuittingGame<T>& game, const Vec<T>& x, const T& lambda) {
  const int n = game.n_players;
  if (is_zero_profile(x)) return game.payoff(0);
  Vec<T> num(n, T(0));
  T cont_all(1);
  for (int i = 0; i < n; ++i) cont_all *= T(1) - x[i];
  const uint32_t full = 1u << n;
  for (uint32_t mask = 1; mask < full; ++mask) {
    T weight(1);
    for (int i = 0; i < n; ++i) weight *= (mask >> i) & 1 ? x[i] : T(1) - x[i];
    if (weight == T(0)) continue;
    const Vec<T>& r = game.payoff(mask);
    for (int i = 0; i < n; ++i) num[i] += weight * r[i];
  }
  const Vec<T>& r_empty = game.payoff(0);
  for (int i = 0; i < n; ++i) num[i] += lambda * cont_all * r_empty[i];
  T den = T(1) - (T(1) - lambda) * cont_all;
  for (auto& v : num) v /= den;
  return num;
}

// Best reply against stationary opponents is attained at always-quit or
// always-continue, so the gain reduces to two payoff evaluations.
template <class T>
T stationary_deviation_gain(const QuittingGame<T>& game, const Vec<T>& x, int i) {
  Vec<T> quit = x, cont = x;
  quit[i] = T(1);
  cont[i] = T(0);
  T dev_q = stationary_payoff(game, quit)[i];
  T dev_c = stationary_payoff(game, cont)[i];
  T base = stationary_payoff(game, x)[i];
  T best = dev_q > dev_c ? dev_q : dev_c;
  return best - base;
}

}  // namespace quitting
