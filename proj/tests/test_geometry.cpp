#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "helpers.hpp"
#include "quitting/classify.hpp"
#include "quitting/geometry.hpp"
#include "quitting/json_io.hpp"

using namespace quitting;

namespace {

template <class T>
FeasibleSetD<T> two_pairs_set() {
  auto g = normalize(load_game<T>(fixture("two_pairs.json")));
  return make_feasible_set(restricted_matrix(classify_players(g)));
}

}  // namespace

TEST_CASE("membership requires both the hull and the orthant") {
  auto d = two_pairs_set<rational>();
  Vec<rational> mixed = {rational(0), rational(0), rat(1, 4), rat(1, 4)};
  REQUIRE(membership(mixed, d));
  // A hull vertex with negative coordinates is not in D.
  Vec<rational> vertex = {rational(0), rational(1), rat(-1, 4), rat(-1, 4)};
  REQUIRE(!membership(vertex, d));
  Vec<rational> outside = {rational(2), rational(2), rational(2), rational(2)};
  REQUIRE(!membership(outside, d));
}

TEST_CASE("the barycenter has the maximal interior margin") {
  auto d = two_pairs_set<rational>();
  Vec<rational> bary(4, rational(0));
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) bary[i] += d.vertices[i][j] / rational(4);
  REQUIRE(bary == Vec<rational>(4, rat(1, 8)));
  auto t = interior_margin(bary, d);
  REQUIRE(t);
  REQUIRE(*t == rat(1, 4));
  REQUIRE(!boundary(bary, d));
}

TEST_CASE("zero coordinates put a member on the boundary") {
  auto d = two_pairs_set<rational>();
  Vec<rational> y = {rational(0), rational(0), rat(1, 4), rat(1, 4)};
  REQUIRE(boundary(y, d));
  // The origin is spanned only with zero weight, so it is not even a member.
  REQUIRE(!membership(Vec<rational>(4, rational(0)), d));
}

TEST_CASE("the origin lies on the boundary when columns cancel") {
  auto g = normalize(load_game<rational>(fixture("zero_solution.json")));
  auto d = make_feasible_set(restricted_matrix(classify_players(g)));
  Vec<rational> zero(4, rational(0));
  REQUIRE(membership(zero, d));
  REQUIRE(boundary(zero, d));
}

TEST_CASE("active coordinates are the near-zero ones") {
  auto d = two_pairs_set<double>();
  Vec<double> y = {0.0, 5e-13, 0.25, 0.25};
  REQUIRE(active_set(y, d) == std::vector<int>{0, 1});
  REQUIRE(active_set(Vec<double>{0.1, 0.2}, d).empty());
}

TEST_CASE("sampled anchors land on the boundary of D") {
  auto g = normalize(load_game<double>(fixture("two_pairs.json")));
  auto rhat = restricted_matrix(classify_players(g));
  auto d = make_feasible_set(rhat);
  std::mt19937_64 rng(42);
  for (int k = 0; k < 20; ++k) {
    auto y = sample_boundary_anchor(rhat, d, rng);
    REQUIRE(y);
    REQUIRE(boundary(*y, d));
  }
}
