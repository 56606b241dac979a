#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>

#include "tdbs/errors.hpp"
#include "tdbs/matching.hpp"
#include "test_helpers.hpp"

using namespace tdbs;
using namespace tdbs::testing;

namespace {

BinarySignature random_signature(int n, std::mt19937_64& rng) {
  const auto [payload, stored] = signature_length_bits(n);
  BinarySignature sig;
  sig.n_neighbors = static_cast<std::uint16_t>(n);
  sig.blocks.assign(stored / 64, 0);
  for (int b = 0; b < payload; ++b) {
    if (rng() & 1) sig.set_bit(b);
  }
  return sig;
}

std::vector<BinarySignature> random_signatures(int count, int n,
                                               std::mt19937_64& rng) {
  std::vector<BinarySignature> sigs;
  sigs.reserve(count);
  for (int i = 0; i < count; ++i) sigs.push_back(random_signature(n, rng));
  return sigs;
}

// independent double-loop oracle, separate from brute_force_match
std::vector<MatchCandidate> oracle_knn(const BinarySignature& query,
                                       const std::vector<BinarySignature>& targets,
                                       int k) {
  std::vector<MatchCandidate> all;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    int d = 0;
    for (int b = 0; b < query.stored_bits(); ++b) {
      if (query.get_bit(b) != targets[t].get_bit(b)) ++d;
    }
    all.push_back({0, static_cast<int>(t), d});
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const MatchCandidate& a, const MatchCandidate& b) {
                     return a.distance < b.distance;
                   });
  all.resize(std::min<std::size_t>(k, all.size()));
  return all;
}

}  // namespace

TEST_CASE("hamming distance basics") {
  std::mt19937_64 rng(1);
  BinarySignature a = random_signature(8, rng);
  CHECK(hamming(a, a) == 0);

  // payload 12 bits at N=3: all-zeros vs all-ones
  BinarySignature zeros, ones;
  zeros.n_neighbors = ones.n_neighbors = 3;
  const auto [payload, stored] = signature_length_bits(3);
  zeros.blocks.assign(stored / 64, 0);
  ones.blocks.assign(stored / 64, 0);
  for (int b = 0; b < payload; ++b) ones.set_bit(b);
  CHECK(payload == 9);
  CHECK(hamming(zeros, ones) == 9);

  BinarySignature other = random_signature(16, rng);
  CHECK_THROWS_AS(hamming(a, other), ParameterError);
}

TEST_CASE("hamming equals the per-bit oracle on random pairs") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    BinarySignature a = random_signature(12, rng);
    BinarySignature b = random_signature(12, rng);
    int expected = 0;
    for (int bit = 0; bit < a.stored_bits(); ++bit) {
      if (a.get_bit(bit) != b.get_bit(bit)) ++expected;
    }
    CHECK(hamming(a, b) == expected);
  }
}

TEST_CASE("hamming is a metric") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 2000; ++trial) {
    BinarySignature a = random_signature(8, rng);
    BinarySignature b = random_signature(8, rng);
    BinarySignature c = random_signature(8, rng);
    const int ab = hamming(a, b), ba = hamming(b, a);
    const int bc = hamming(b, c), ac = hamming(a, c);
    CHECK(ab == ba);                       // symmetry
    CHECK((ab == 0) == (a == b));          // identity of indiscernibles
    CHECK(ac <= ab + bc);                  // triangle inequality
  }
}

TEST_CASE("brute force matches the independent oracle") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    auto targets = random_signatures(3 + rng() % 80, 8, rng);
    auto queries = random_signatures(1 + rng() % 10, 8, rng);
    const int k = 1 + static_cast<int>(rng() % 5);
    auto got = brute_force_match(queries, targets, k);
    for (std::size_t q = 0; q < queries.size(); ++q) {
      auto want = oracle_knn(queries[q], targets, k);
      REQUIRE(got[q].size() == want.size());
      for (std::size_t i = 0; i < want.size(); ++i) {
        CHECK(got[q][i].target_id == want[i].target_id);
        CHECK(got[q][i].distance == want[i].distance);
      }
    }
  }
}

TEST_CASE("query equal to a target comes back first at distance 0") {
  std::mt19937_64 rng(9);
  auto targets = random_signatures(50, 8, rng);
  auto matches = brute_force_match({targets[17]}, targets, 3);
  CHECK(matches[0][0].target_id == 17);
  CHECK(matches[0][0].distance == 0);
  // k = |targets| ranks everything
  auto full = brute_force_match({targets[0]}, targets, 50);
  CHECK(full[0].size() == 50);
}

TEST_CASE("small sets build single-leaf forests") {
  std::mt19937_64 rng(11);
  auto descriptors = random_signatures(100, 8, rng);
  ForestParams params;
  ClusteringForest forest(descriptors, params);
  for (int t = 0; t < params.trees; ++t) {
    auto leaves = forest.leaves(t);
    REQUIRE(leaves.size() == 1);
    CHECK(leaves[0].size() == 100);
  }
}

TEST_CASE("forest leaves partition the id set") {
  std::mt19937_64 rng(13);
  auto descriptors = random_signatures(1000, 8, rng);
  ForestParams params;
  ClusteringForest forest(descriptors, params);
  for (int t = 0; t < params.trees; ++t) {
    std::set<int> seen;
    for (const auto& leaf : forest.leaves(t)) {
      CHECK(leaf.size() < static_cast<std::size_t>(params.max_leaf));
      for (int id : leaf) CHECK(seen.insert(id).second);
    }
    CHECK(seen.size() == 1000);
  }
}

TEST_CASE("same seed builds identical forests") {
  std::mt19937_64 rng(15);
  auto descriptors = random_signatures(600, 8, rng);
  ForestParams params;
  params.seed = 1234;
  ClusteringForest a(descriptors, params);
  ClusteringForest b(descriptors, params);
  for (int t = 0; t < params.trees; ++t) {
    CHECK(a.leaves(t) == b.leaves(t));
  }
}

TEST_CASE("full-checks search reproduces brute force exactly") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const int count = 50 + static_cast<int>(rng() % 2000);
    auto descriptors = random_signatures(count, 8, rng);
    ForestParams params;
    params.seed = rng();
    ClusteringForest forest(descriptors, params);
    const int k = 1 + static_cast<int>(rng() % 8);
    BinarySignature query = random_signature(8, rng);
    auto exact = brute_force_match({query}, descriptors, k);
    auto approx = forest.search(query, k, count);
    REQUIRE(approx.matches.size() == exact[0].size());
    for (std::size_t i = 0; i < exact[0].size(); ++i) {
      CHECK(approx.matches[i].target_id == exact[0][i].target_id);
      CHECK(approx.matches[i].distance == exact[0][i].distance);
    }
  }
}

TEST_CASE("indexed query returns itself at distance 0") {
  std::mt19937_64 rng(19);
  auto descriptors = random_signatures(700, 8, rng);
  ClusteringForest forest(descriptors, ForestParams{});
  auto result = forest.search(descriptors[123], 1, descriptors.size());
  REQUIRE(result.matches.size() == 1);
  CHECK(result.matches[0].target_id == 123);
  CHECK(result.matches[0].distance == 0);
}

TEST_CASE("early stop honors the check budget") {
  std::mt19937_64 rng(21);
  auto descriptors = random_signatures(3000, 8, rng);
  ForestParams params;
  ClusteringForest forest(descriptors, params);
  const int k = 4;
  auto result = forest.search(random_signature(8, rng), k, k);
  CHECK(result.matches.size() == static_cast<std::size_t>(k));
  // one leaf per tree at most before the budget trips
  CHECK(result.checks_used <=
        static_cast<std::size_t>(params.trees * params.max_leaf));
}

TEST_CASE("search precision is exact at full checks and bounded") {
  std::mt19937_64 rng(23);
  auto descriptors = random_signatures(800, 8, rng);
  ClusteringForest forest(descriptors, ForestParams{});
  auto queries = random_signatures(20, 8, rng);
  CHECK(measure_search_precision(forest, queries, 3, descriptors.size()) ==
        doctest::Approx(1.0));
  const double low = measure_search_precision(forest, queries, 3, 3);
  CHECK(low >= 0.0);
  CHECK(low <= 1.0);
}

TEST_CASE("precision trends upward with the check budget") {
  std::mt19937_64 rng(25);
  double low_sum = 0, high_sum = 0;
  for (int trial = 0; trial < 50; ++trial) {
    auto descriptors = random_signatures(1200, 8, rng);
    ForestParams params;
    params.seed = rng();
    ClusteringForest forest(descriptors, params);
    auto queries = random_signatures(5, 8, rng);
    const std::size_t m = 40;
    low_sum += measure_search_precision(forest, queries, 2, m);
    high_sum += measure_search_precision(forest, queries, 2, 4 * m);
  }
  CHECK(low_sum / 50 <= high_sum / 50 + 1e-12);
}

TEST_CASE("duplicate-heavy input degrades to an oversized leaf") {
  std::mt19937_64 rng(27);
  BinarySignature sig = random_signature(8, rng);
  std::vector<BinarySignature> same(400, sig);
  ClusteringForest forest(same, ForestParams{});
  auto result = forest.search(sig, 2, same.size());
  REQUIRE(result.matches.size() == 2);
  CHECK(result.matches[0].target_id == 0);
  CHECK(result.matches[1].target_id == 1);
}

TEST_CASE("empty forest returns empty results") {
  ClusteringForest forest({}, ForestParams{});
  auto result = forest.search(BinarySignature{}, 1, 1);
  CHECK(result.matches.empty());
}
