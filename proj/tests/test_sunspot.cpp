#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include "helpers.hpp"
#include "quitting/json_io.hpp"
#include "quitting/sunspot.hpp"

using namespace quitting;

namespace {

template <class T>
BuildingBlock<T> step_block(Vec<T> w) {
  BuildingBlock<T> b;
  b.w = std::move(w);
  return b;
}

template <class T>
SunspotProfile<T> one_block(int players, Kiloblock<T> kb) {
  SunspotProfile<T> prof;
  prof.players = players;
  prof.player_order.resize(players);
  for (int i = 0; i < players; ++i) prof.player_order[i] = i;
  prof.kiloblocks.push_back(std::move(kb));
  return prof;
}

}  // namespace

TEST_CASE("block length keeps every per-stage hazard below the tolerance") {
  REQUIRE(min_block_len(0.0, 0.1) == 1);
  REQUIRE(min_block_len(-1.0, 0.1) == 1);
  REQUIRE(min_block_len(0.5, 0.5) == 2);
  REQUIRE(min_block_len(0.5, 0.1) == 7);
  REQUIRE(min_block_len(0.5, 0.05) == 14);
  REQUIRE(min_block_len(0.5, 0.01) == 69);
}

TEST_CASE("the starting anchor is the smallest single-coordinate target") {
  auto game = load_game<rational>(fixture("two_pairs.json"));
  auto cls = classify_players(game);
  REQUIRE(cls.player_order == std::vector<int>{0, 1, 2, 3});
  auto y0 = initial_anchor(restricted_matrix(cls));
  REQUIRE(y0 == Vec<rational>{rational(0), rational(0), rational(0), rat(1, 2)});
}

TEST_CASE("a stalled anchor walk is cut short by extrapolation and resumes") {
  auto step = [](const Vec<double>& y) {
    if (y[0] > 1.0 + 1e-9) return step_block<double>({y[0] + 1.0, y[1] + 1.0});
    if (y[0] >= 1.0 - 1e-9) return step_block<double>({2.0, 2.0});
    return step_block<double>({1.0 + 0.9 * (y[0] - 1.0), 1.0 + 0.9 * (y[1] - 1.0)});
  };
  auto seq = generate_sequence_core<double>({0.0, 0.0}, step, 50.0);
  REQUIRE(seq.reached_target);
  REQUIRE(seq.aitken_jumps == 1);
  REQUIRE(seq.jump_sum < 1e-6);
  REQUIRE(seq.drift_sum > 50.0);
  REQUIRE(seq.blocks.size() < 400);
  REQUIRE(seq.points.back()[0] > 40.0);
}

TEST_CASE("an anchor walk that converges to a fixed point is rejected") {
  auto step = [](const Vec<double>& y) {
    return step_block<double>({1.0 + 0.5 * (y[0] - 1.0), 1.0 + 0.5 * (y[1] - 1.0)});
  };
  REQUIRE_THROWS_AS(generate_sequence_core<double>({0.0, 0.0}, step, 100.0), game_error);
}

TEST_CASE("an anchor walk that crawls runs into the iteration cap") {
  auto step = [](const Vec<double>& y) {
    return step_block<double>({y[0] + 1e-8, y[1]});
  };
  REQUIRE_THROWS_AS(generate_sequence_core<double>({0.0, 0.0}, step, 1.0, 500), game_error);
}

TEST_CASE("an empty profile plays the all-continue tail") {
  auto game = load_game<rational>(fixture("two_pairs.json"));
  SunspotProfile<rational> prof;
  prof.players = 4;
  prof.player_order = {0, 1, 2, 3};
  REQUIRE(exact_value(game, prof) == game.payoff(0));
  REQUIRE(termination_prob(prof) == rational(0));
}

TEST_CASE("a certain quit in the first kiloblock pays the quit vector") {
  auto game = load_game<rational>(fixture("two_pairs.json"));
  Kiloblock<rational> kb;
  kb.z = {rational(0), rational(1), rational(0), rational(0), rational(0)};
  kb.lambda[1] = rational(1);
  kb.block_len = 1;
  kb.next[1] = 1;
  auto prof = one_block(4, std::move(kb));

  REQUIRE(exact_value(game, prof) == game.payoff(1));
  REQUIRE(termination_prob(prof) == rational(1));

  auto rep = verify_sunspot(game, prof, 0.1);
  REQUIRE(rep.value == game.payoff(1));
  REQUIRE(rep.gains ==
          Vec<rational>{rational(0), rational(0), rat(1, 4), rat(1, 4)});
  REQUIRE(rep.bound == rational(1));
  REQUIRE(rep.pass);

  auto tight = verify_sunspot(game, prof, 0.01);
  REQUIRE(tight.gains == rep.gains);
  REQUIRE_FALSE(tight.pass);
}

TEST_CASE("a redraw kiloblock has the closed-form value") {
  auto game = load_game<rational>(fixture("two_pairs.json"));
  Kiloblock<rational> kb;
  kb.z = {rat(1, 2), rat(1, 2), rational(0), rational(0), rational(0)};
  kb.lambda[1] = rat(1, 2);
  kb.block_len = 3;
  auto prof = one_block(4, std::move(kb));

  Vec<rational> expected = game.payoff(1);
  for (auto& v : expected) v /= 3;
  REQUIRE(exact_value(game, prof) == expected);
  REQUIRE(termination_prob(prof) == rat(1, 3));
}

TEST_CASE("successor indices must move forward and clamp at the tail") {
  auto game = load_game<rational>(fixture("two_pairs.json"));

  Kiloblock<rational> far;
  far.z = {rational(0), rational(1), rational(0), rational(0), rational(0)};
  far.lambda[1] = rat(1, 2);
  far.block_len = 1;
  far.next[1] = 50;
  auto clamped = one_block(4, std::move(far));
  Vec<rational> expected = game.payoff(1);
  for (auto& v : expected) v /= 2;
  REQUIRE(exact_value(game, clamped) == expected);

  SunspotProfile<rational> bad;
  bad.players = 4;
  bad.player_order = {0, 1, 2, 3};
  Kiloblock<rational> cont;
  cont.z = {rational(1), rational(0), rational(0), rational(0), rational(0)};
  bad.kiloblocks.push_back(cont);
  Kiloblock<rational> back;
  back.z = {rational(0), rational(1), rational(0), rational(0), rational(0)};
  back.lambda[1] = rational(1);
  back.next[1] = 1;
  bad.kiloblocks.push_back(back);
  REQUIRE_THROWS_AS(exact_value(game, bad), game_error);
}

TEST_CASE("single-coordinate targets of the restricted matrix are exact") {
  auto game = load_game<rational>(fixture("two_pairs.json"));
  auto cls = classify_players(game);
  auto ts = m_matrix_targets(restricted_matrix(cls));
  REQUIRE(ts.size() == 4);
  for (const auto& t : ts) REQUIRE(t.l1 == rational(2));

  REQUIRE(ts[0].w == Vec<rational>{rat(1, 2), rational(0), rational(0), rational(0)});
  REQUIRE(ts[0].lambda == Vec<rational>{rat(1, 6), rat(7, 6), rat(1, 3), rat(1, 3)});
  REQUIRE(ts[0].j == 1);
  REQUIRE(ts[0].alpha == rat(1, 2));
  REQUIRE(ts[0].y == Vec<rational>{rational(0), rational(0), rat(1, 4), rat(1, 4)});
  REQUIRE(ts[0].beta == Vec<rational>{rational(0), rational(0), rat(1, 2), rat(1, 2)});
  REQUIRE(ts[1].j == 0);
}

TEST_CASE("target paths require the one-positive-per-line pattern and a positive inverse") {
  Mat<rational> two_pos = {{rational(0), rational(1), rational(1)},
                           {rational(1), rational(0), rational(-1)},
                           {rational(-1), rational(1), rational(0)}};
  REQUIRE_THROWS_AS(m_matrix_targets(two_pos), game_error);

  Mat<rational> neg_inv = {{rational(0), rational(1), rational(-2)},
                           {rational(-2), rational(0), rational(1)},
                           {rational(1), rational(-2), rational(0)}};
  REQUIRE_THROWS_AS(m_matrix_targets(neg_inv), game_error);
}

TEST_CASE("implementing a feasible payoff hits it up to the truncation mass") {
  auto game = load_game<rational>(fixture("two_pairs.json"));
  auto cls = classify_players(game);
  Vec<rational> target{rat(1, 4), rat(1, 4), rational(0), rational(0)};
  auto prof = implement_payoff(game, cls, target, 0.1);
  REQUIRE(prof.kiloblocks.size() == 40);

  auto value = exact_value(game, prof);
  rational err(0);
  for (int i = 0; i < 4; ++i) {
    rational d = abs_val(value[i] - target[i]);
    if (d > err) err = d;
  }
  REQUIRE(err == rat(1, 1LL << 42));
  REQUIRE(termination_prob(prof) == rational(1) - rat(1, 1LL << 40));

  auto rep = verify_sunspot(game, prof, 0.1);
  REQUIRE(rep.pass);
  for (const auto& g : rep.gains)
    REQUIRE(scalar_traits<rational>::to_double(g) <= 1e-9);
}

TEST_CASE("payoff targets outside the reachable set are rejected") {
  auto game = load_game<rational>(fixture("two_pairs.json"));
  auto cls = classify_players(game);
  REQUIRE_THROWS_AS(
      implement_payoff(game, cls,
                       Vec<rational>{rational(-1), rational(0), rational(0), rational(0)},
                       0.1),
      game_error);
  REQUIRE_THROWS_AS(
      implement_payoff(game, cls,
                       Vec<rational>{rational(1), rational(1), rational(1), rational(1)},
                       0.1),
      game_error);
}

TEST_CASE("the full pipeline walks the two-cycle exactly in rational arithmetic") {
  auto game = load_game<rational>(fixture("two_pairs.json"));
  auto res = build_sunspot(game, 0.5);

  REQUIRE(res.seq.drift_target == rational(72));
  REQUIRE(res.seq.blocks.size() == 145);
  REQUIRE(res.seq.drift_sum == rat(145, 2));
  REQUIRE(res.seq.aitken_jumps == 0);
  REQUIRE(res.seq.jump_sum == rational(0));
  REQUIRE(res.seq.points.front() ==
          Vec<rational>{rational(0), rational(0), rational(0), rat(1, 2)});
  REQUIRE(res.drift_ok);
  REQUIRE(res.jump_ok);
  REQUIRE(res.value_near_anchor);
  REQUIRE(res.megablocks_ok);

  REQUIRE(res.profile.kiloblocks.size() == 145);
  const auto& first = res.profile.kiloblocks.front();
  REQUIRE(first.z == Vec<rational>{rat(1, 13), rat(2, 13), rat(2, 13), rational(0),
                                   rat(8, 13)});
  REQUIRE(first.lambda ==
          std::map<int, rational>{{1, rat(1, 2)}, {2, rat(1, 2)}, {4, rat(1, 2)}});
  REQUIRE(first.block_len == 2);
  const auto& second = res.profile.kiloblocks[1];
  REQUIRE(second.z == Vec<rational>{rat(1, 13), rat(2, 13), rat(2, 13), rat(8, 13),
                                    rational(0)});

  REQUIRE(res.report.pass);
  REQUIRE(scalar_traits<rational>::to_double(res.report.termination) == 1.0);
}

TEST_CASE("the full pipeline passes its gain bound at a realistic tolerance") {
  auto game = load_game<double>(fixture("two_pairs.json"));
  auto res = build_sunspot(game, 0.1);
  REQUIRE(res.seq.reached_target);
  REQUIRE(res.seq.blocks.size() >= 2639);
  REQUIRE(res.seq.blocks.size() <= 2642);
  REQUIRE(res.seq.aitken_jumps == 0);
  REQUIRE(res.drift_ok);
  REQUIRE(res.jump_ok);
  REQUIRE(res.value_near_anchor);
  REQUIRE(res.megablocks_ok);
  REQUIRE(res.report.pass);
  REQUIRE(res.report.termination > 1.0 - 1e-9);
  for (double g : res.report.gains) REQUIRE(g <= res.report.bound);
}

TEST_CASE("simulation is deterministic and matches a forced quit exactly") {
  auto game = load_game<double>(fixture("two_pairs.json"));
  Kiloblock<double> kb;
  kb.z = {0.0, 1.0, 0.0, 0.0, 0.0};
  kb.lambda[1] = 1.0;
  kb.block_len = 1;
  kb.next[1] = 1;
  auto prof = one_block(4, std::move(kb));

  auto rep = simulate(game, prof, 500, 42);
  REQUIRE(rep.runs == 500);
  REQUIRE(rep.seed == 42);
  REQUIRE(rep.mean == game.payoff(1));
  REQUIRE(rep.termination_freq == 1.0);
  REQUIRE(rep.histogram.at(1) == 500);
  for (double s : rep.se) REQUIRE(s == 0.0);

  auto again = simulate(game, prof, 500, 42);
  REQUIRE(again.mean == rep.mean);
  REQUIRE(again.histogram == rep.histogram);
}

TEST_CASE("simulated payoffs agree with the exact value within noise") {
  auto game = load_game<double>(fixture("two_pairs.json"));
  auto cls = classify_players(game);
  Vec<double> target{0.25, 0.25, 0.0, 0.0};
  auto prof = implement_payoff(game, cls, target, 0.1);
  auto value = exact_value(game, prof);
  auto rep = simulate(game, prof, 20000, 99);
  REQUIRE(rep.termination_freq >= 0.999);
  for (int i = 0; i < 4; ++i) {
    INFO("coordinate " << i);
    REQUIRE(std::abs(rep.mean[i] - value[i]) <= 3.0 * rep.se[i] + 1e-3);
  }
}

TEST_CASE("pooled simulation batches show no bias against the exact value") {
  auto game = load_game<double>(fixture("two_pairs.json"));
  auto res = build_sunspot(game, 0.1);
  const std::vector<std::uint64_t> seeds{101, 102, 103, 104};
  Vec<double> mean(4, 0.0), var(4, 0.0);
  for (auto seed : seeds) {
    auto rep = simulate(game, res.profile, 25000, seed);
    REQUIRE(rep.termination_freq >= 0.9);
    for (int c = 0; c < 4; ++c) {
      mean[c] += rep.mean[c] / static_cast<double>(seeds.size());
      var[c] += rep.se[c] * rep.se[c] /
                static_cast<double>(seeds.size() * seeds.size());
    }
  }
  for (int c = 0; c < 4; ++c) {
    INFO("coordinate " << c);
    REQUIRE(std::abs(mean[c] - res.report.value[c]) <=
            3.0 * std::sqrt(var[c]) + 1e-12);
  }
}
