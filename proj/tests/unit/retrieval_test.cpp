#include <gtest/gtest.h>

#include <deque>

#include <algorithm>
#include <map>
#include <random>

#include "lark/error.hpp"
#include "lark/retrieval.hpp"
#include "test_support.hpp"

namespace lark {
namespace {

using testing::E;
using testing::make_query;
using testing::R;

const std::string kPreamble =
    "Given the following (h,r,t) triplets where entity h is related to entity t by relation r;";

// Same counts as the default tokenizer but without the additivity promise,
// forcing retrieval down its recount path.
class OpaqueTokenizer final : public Tokenizer {
 public:
  std::size_t count(std::string_view text) const override { return inner_.count(text); }
  std::string name() const override { return "opaque"; }

 private:
  ApproxTokenizer inner_;
};

bool contains_all(const Neighborhood& nb, std::initializer_list<Triplet> ts) {
  return std::all_of(ts.begin(), ts.end(), [&](const Triplet& t) {
    return std::find(nb.triplets.begin(), nb.triplets.end(), t) != nb.triplets.end();
  });
}

TEST(Tokenizer, GoldenCounts) {
  EXPECT_EQ(count_tokens(""), 0u);
  EXPECT_EQ(count_tokens("Which entities are connected"), 4u);
  // 3 IDs, 2 parentheses, 2 commas.
  EXPECT_EQ(count_tokens("(e1,r1,e2)"), 7u);
  EXPECT_EQ(count_tokens("  a_b  c-d "), 4u);
  EXPECT_EQ(count_tokens("caf\xc3\xa9 ok"), 2u);
}

TEST(Tokenizer, AdditiveAcrossNonWordJoins) {
  std::mt19937_64 rng(5);
  const std::string alphabet = "ab1_ ,.()?\n";
  const ApproxTokenizer tok;
  for (int i = 0; i < 2000; ++i) {
    std::string a, b;
    for (int k = rng() % 12; k > 0; --k) a += alphabet[rng() % alphabet.size()];
    for (int k = rng() % 12; k > 0; --k) b += alphabet[rng() % alphabet.size()];
    auto word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
    if (!a.empty() && !b.empty() && word(a.back()) && word(b.front())) continue;
    EXPECT_EQ(tok.count(a + b), tok.count(a) + tok.count(b)) << '[' << a << "][" << b << ']';
  }
}

TEST(Tokenizer, CommandTokenizerSpeaksLineProtocol) {
  CommandTokenizer tok(
      "python3 -u -c \"import sys,json\nfor l in sys.stdin: print(len(json.loads(l).split()), flush=True)\"");
  EXPECT_EQ(tok.count("one two three"), 3u);
  EXPECT_EQ(tok.count("line\nbreak \"quoted\""), 3u);
  EXPECT_EQ(tok.count(""), 0u);
}

TEST(Tokenizer, CommandTokenizerReportsDeadChild) {
  CommandTokenizer tok("true");
  EXPECT_THROW(tok.count("x"), Error);
}

TEST(SerializeContext, Examples) {
  EXPECT_EQ(context_preamble(), kPreamble);
  EXPECT_EQ(serialize_context({}), kPreamble + " .");
  const std::vector<Triplet> one = {{E(1), R(1), E(2)}};
  EXPECT_EQ(serialize_context(one), kPreamble + " (e1,r1,e2).");
  const std::vector<Triplet> two = {{E(1), R(1), E(2)}, {E(2), R(2), E(4)}};
  EXPECT_EQ(serialize_context(two), kPreamble + " (e1,r1,e2), (e2,r2,e4).");
}

TEST(Retrieve, G0OneHop) {
  const auto kg = testing::g0();
  const auto nb = retrieve_neighborhood(kg, make_query(QueryType::k1p, {1}, {1}), {});
  EXPECT_TRUE(contains_all(nb, {{E(1), R(1), E(2)}, {E(1), R(1), E(3)}}));
  EXPECT_FALSE(nb.truncated);
  EXPECT_EQ(nb.token_count, count_tokens(serialize_context(nb.triplets)));
}

TEST(Retrieve, G0TwoHopDfsOrder) {
  const auto kg = testing::g0();
  const auto nb = retrieve_neighborhood(kg, make_query(QueryType::k2p, {1}, {1, 2}), {});
  const std::vector<Triplet> expected = {
      {E(1), R(1), E(2)}, {E(2), R(2), E(4)}, {E(1), R(1), E(3)}, {E(3), R(2), E(4)}};
  EXPECT_EQ(nb.triplets, expected);
  EXPECT_EQ(nb.levels, (std::vector{1, 2, 1, 2}));
}

TEST(Retrieve, LimitBelowPreambleGivesNothing) {
  const auto kg = testing::g0();
  RetrievalConfig cfg;
  cfg.token_limit = 3;
  const auto nb = retrieve_neighborhood(kg, make_query(QueryType::k1p, {1}, {1}), cfg);
  EXPECT_TRUE(nb.triplets.empty());
  EXPECT_TRUE(nb.truncated);
  EXPECT_EQ(nb.token_count, count_tokens(serialize_context({})));
}

TEST(Retrieve, TruncatesAtWholeTriplets) {
  const auto kg = testing::g0();
  const std::size_t empty = count_tokens(serialize_context({}));
  RetrievalConfig cfg;
  // Each further "(h,r,t)" costs 7 tokens plus a ", " separator.
  cfg.token_limit = empty + 7;
  const auto nb = retrieve_neighborhood(kg, make_query(QueryType::k2p, {1}, {1, 2}), cfg);
  ASSERT_EQ(nb.triplets.size(), 1u);
  EXPECT_TRUE(nb.truncated);
  EXPECT_LE(nb.token_count, cfg.token_limit);
}

TEST(Retrieve, DepthLimitCapsTraversal) {
  const auto kg = testing::g0();
  RetrievalConfig cfg;
  cfg.depth_limit = 1;
  const auto nb = retrieve_neighborhood(kg, make_query(QueryType::k3p, {1}, {1, 2, 3}), cfg);
  for (int level : nb.levels) EXPECT_EQ(level, 1);
  EXPECT_EQ(nb.triplets.size(), 2u);
}

TEST(Retrieve, RelationFilterAndItsSwitch) {
  const auto kg = testing::g0();
  const auto q = make_query(QueryType::k1p, {3}, {2});
  const auto filtered = retrieve_neighborhood(kg, q, {});
  EXPECT_EQ(filtered.triplets, (std::vector<Triplet>{{E(3), R(2), E(4)}}));
  RetrievalConfig open;
  open.relation_constrained_first_level = false;
  const auto all = retrieve_neighborhood(kg, q, open);
  EXPECT_EQ(all.triplets.size(), 3u);
}

TEST(Retrieve, NegatedAnchorAdmitsOtherRelations) {
  const auto kg = testing::g0();
  // e3 --r2--> positive branch; e3 negated on r2 needs its r3 edge.
  const auto q = make_query(QueryType::k2in, {2, 3}, {2, 2});
  const auto nb = retrieve_neighborhood(kg, q, {});
  EXPECT_TRUE(contains_all(nb, {{E(3), R(3), E(5)}}));
  RetrievalConfig strict;
  strict.negation_relaxation = false;
  const auto s = retrieve_neighborhood(kg, q, strict);
  EXPECT_FALSE(contains_all(s, {{E(3), R(3), E(5)}}));
}

TEST(Retrieve, UnknownIdsThrow) {
  EXPECT_THROW(retrieve_neighborhood(testing::g0(), make_query(QueryType::k1p, {42}, {1}), {}), Error);
}

TEST(Retrieve, ConfigValidation) {
  RetrievalConfig cfg;
  cfg.token_limit = 0;
  EXPECT_THROW(validate(cfg), Error);
  cfg = {};
  cfg.depth_limit = 4;
  EXPECT_THROW(validate(cfg), Error);
  cfg.depth_limit = 0;
  EXPECT_THROW(validate(cfg), Error);
  cfg.depth_limit = 3;
  EXPECT_NO_THROW(validate(cfg));
}

class RetrievalProperties : public ::testing::Test {
 protected:
  std::mt19937_64 rng{2024};
};

TEST_F(RetrievalProperties, DeterministicAndRecountPathAgrees) {
  const OpaqueTokenizer opaque;
  for (int trial = 0; trial < 60; ++trial) {
    const auto kg = testing::random_graph(rng, testing::random_shape(rng, 80, 6));
    const auto type = kAllQueryTypes[rng() % kAllQueryTypes.size()];
    const auto q = testing::sample_query(rng, kg, type);
    RetrievalConfig cfg;
    cfg.token_limit = 40 + rng() % 400;
    const auto a = retrieve_neighborhood(kg, q, cfg);
    const auto b = retrieve_neighborhood(kg, q, cfg);
    const auto c = retrieve_neighborhood(kg, q, cfg, opaque);
    EXPECT_EQ(serialize_context(a.triplets), serialize_context(b.triplets));
    EXPECT_EQ(a.triplets, c.triplets);
    EXPECT_EQ(a.token_count, c.token_count);
    EXPECT_EQ(a.truncated, c.truncated);
  }
}

TEST_F(RetrievalProperties, LevelMonotone) {
  for (int trial = 0; trial < 200; ++trial) {
    const auto kg = testing::random_graph(rng, testing::random_shape(rng, 60, 4));
    const auto q = testing::sample_query(rng, kg, kAllQueryTypes[rng() % kAllQueryTypes.size()]);
    RetrievalConfig cfg;
    cfg.token_limit = kUnboundedTokens;
    const auto nb = retrieve_neighborhood(kg, q, cfg);
    ASSERT_EQ(nb.levels.size(), nb.triplets.size());
    // Hop distance from the anchors inside the retrieved subgraph; the walk
    // only descends along triplets it keeps, so a level-j triplet has an
    // endpoint within j - 1 hops.
    std::map<EntityId, int> dist;
    std::deque<EntityId> frontier;
    for (auto a : q.anchors)
      if (dist.emplace(a, 0).second) frontier.push_back(a);
    while (!frontier.empty()) {
      const auto x = frontier.front();
      frontier.pop_front();
      for (const auto& t : nb.triplets) {
        if (t.head != x && t.tail != x) continue;
        const auto y = t.head == x ? t.tail : t.head;
        if (dist.emplace(y, dist[x] + 1).second) frontier.push_back(y);
      }
    }
    for (std::size_t i = 0; i < nb.triplets.size(); ++i) {
      const auto& t = nb.triplets[i];
      const int j = nb.levels[i];
      auto near = [&](EntityId x) { return dist.count(x) && dist.at(x) <= j - 1; };
      EXPECT_TRUE(near(t.head) || near(t.tail)) << to_string(t) << " level " << j;
      EXPECT_LE(j, traversal_depth(q.type));
    }
  }
}

TEST_F(RetrievalProperties, UnboundedNeighborhoodIsSufficient) {
  for (int trial = 0; trial < 300; ++trial) {
    const auto kg = testing::random_graph(rng, testing::random_shape(rng));
    QueryType type;
    do type = kAllQueryTypes[rng() % kAllQueryTypes.size()];
    while (has_negation(type));
    const auto q = testing::sample_query(rng, kg, type);
    RetrievalConfig cfg;
    cfg.token_limit = kUnboundedTokens;
    const auto nb = retrieve_neighborhood(kg, q, cfg);
    const std::set<Triplet> got(nb.triplets.begin(), nb.triplets.end());
    for (const auto& t : testing::touched_triplets(kg, q)) {
      EXPECT_TRUE(got.contains(t)) << to_string(q.type) << " misses " << to_string(t);
    }
  }
}

TEST_F(RetrievalProperties, BudgetAndPrefixMonotone) {
  const std::size_t empty = count_tokens(serialize_context({}));
  for (int trial = 0; trial < 300; ++trial) {
    const auto kg = testing::random_graph(rng, testing::random_shape(rng, 60, 4));
    const auto q = testing::sample_query(rng, kg, kAllQueryTypes[rng() % kAllQueryTypes.size()]);
    RetrievalConfig lo, hi;
    lo.token_limit = empty + rng() % 300;
    hi.token_limit = lo.token_limit + rng() % 300;
    const auto a = retrieve_neighborhood(kg, q, lo);
    const auto b = retrieve_neighborhood(kg, q, hi);
    EXPECT_LE(a.token_count, lo.token_limit);
    EXPECT_LE(b.token_count, hi.token_limit);
    ASSERT_LE(a.triplets.size(), b.triplets.size());
    EXPECT_TRUE(std::equal(a.triplets.begin(), a.triplets.end(), b.triplets.begin()));
  }
}

}  // namespace
}  // namespace lark
