#pragma once

#include <algorithm>
#include <vector>

#include "quitting/game.hpp"
#include "quitting/linalg.hpp"

namespace quitting {

// Decreasing chain I_0 >= I_1 >= ... down to the stable normal set I_*.
// A player i stays in the next level iff some OTHER remaining player j can
// punish it: r^j_i <= 0.
template <class T>
struct Classification {
  std::vector<std::vector<int>> chain;  // 0-based player ids per level
  std::vector<int> normal_set;          // I_* = last chain entry
  Mat<T> restricted;                    // n x n, column i is r-hat^{order[i]}
  std::vector<int> player_order;        // normal index -> original player id
  bool separation_ok = true;            // abnormal coords of normal columns > 0
};

template <class T>
Classification<T> classify_players(const QuittingGame<T>& game) {
  const int N = game.n_players;
  const T slack = tol_v<T>(1e-12);
  Classification<T> cls;
  std::vector<int> level(N);
  for (int i = 0; i < N; ++i) level[i] = i;
  cls.chain.push_back(level);
  while (true) {
    std::vector<int> next;
    for (int i : level) {
      bool punished = false;
      for (int j : level) {
        if (j == i) continue;
        if (game.payoff(1u << j)[i] <= slack) {
          punished = true;
          break;
        }
      }
      if (punished) next.push_back(i);
    }
    if (next == level) break;
    cls.chain.push_back(next);
    level = std::move(next);
    if (level.empty()) break;
  }
  cls.normal_set = level;
  cls.player_order = level;

  const int n = static_cast<int>(level.size());
  cls.restricted.assign(n, Vec<T>(n, T(0)));
  for (int col = 0; col < n; ++col) {
    const Vec<T>& r = game.payoff(1u << level[col]);
    for (int row = 0; row < n; ++row) cls.restricted[row][col] = r[level[row]];
  }

  std::vector<bool> normal(N, false);
  for (int i : level) normal[i] = true;
  for (int i : level)
    for (int j = 0; j < N; ++j)
      if (!normal[j] && !(game.payoff(1u << i)[j] > slack)) cls.separation_ok = false;
  return cls;
}

template <class T>
const Mat<T>& restricted_matrix(const Classification<T>& cls) {
  if (cls.normal_set.empty())
    throw game_error("empty normal set: use the all-abnormal stationary construction");
  return cls.restricted;
}

}  // namespace quitting
