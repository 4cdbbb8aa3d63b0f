#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "chartcons/cky.hpp"
#include "chartcons/synth.hpp"
#include "pcfg_oracle.hpp"

using namespace chartcons;

namespace {

Pcfg toy() {
  return Pcfg::from_rules("S", {{"S", {"NP", "VP"}, 0.0},
                                {"NP", {"a"}, std::log(0.6)},
                                {"NP", {"b"}, std::log(0.4)},
                                {"VP", {"c"}, 0.0}});
}

std::set<oracle::ItemKey> item_set(const Chart& c) {
  std::set<oracle::ItemKey> out;
  c.for_each_item([&](SymbolId s, int i, int k, double) { out.insert({s, i, k}); });
  return out;
}

}  // namespace

TEST(Cky, ToyGrammar) {
  Pcfg g = toy();
  Chart c = parse(g, {"a", "c"}, PcfgPredicate::allow_all());
  auto best = viterbi(c);
  ASSERT_TRUE(best.has_value());
  EXPECT_DOUBLE_EQ(best->logprob, std::log(0.6));
  EXPECT_EQ(to_ptb(best->tree), "(S (NP a) (VP c))");
  EXPECT_EQ(c.item_count(), 3u);
}

TEST(Cky, EverythingPrunedFails) {
  Pcfg g = toy();
  PcfgPredicate none([](const PcfgItem& x) { return x.end - x.begin < 2; });
  Chart c = parse(g, {"a", "c"}, none);
  EXPECT_FALSE(viterbi(c).has_value());
  EXPECT_EQ(c.item_count(), 2u);
}

TEST(Cky, UnknownTokenAndEmptyInput) {
  Pcfg g = toy();
  EXPECT_FALSE(viterbi(parse(g, {"a", "zzz"}, {})).has_value());
  Chart empty = parse(g, {}, {});
  EXPECT_FALSE(viterbi(empty).has_value());
  EXPECT_EQ(chart_stats(empty, Tree("S", {Tree("x")})).item_count, 0u);
  EXPECT_EQ(chart_stats(empty, Tree("S", {Tree("x")})).gold_fraction, 0.0);
}

TEST(Cky, TieBreakPrefersLowerSplit) {
  // X -> X X is ambiguous over "a a a" with two equal-score bracketings.
  Pcfg g = Pcfg::from_rules("X", {{"X", {"X", "X"}, std::log(0.5)}, {"X", {"a"}, std::log(0.5)}});
  auto r1 = viterbi(parse(g, {"a", "a", "a"}, {}));
  auto r2 = viterbi(parse(g, {"a", "a", "a"}, {}));
  ASSERT_TRUE(r1 && r2);
  EXPECT_EQ(to_ptb(r1->tree), "(X (X a) (X (X a) (X a)))");
  EXPECT_EQ(r1->tree, r2->tree);
}

TEST(Cky, UnaryCycleTerminates) {
  Pcfg g = Pcfg::from_rules("S", {{"S", {"A", "A"}, 0.0},
                                  {"A", {"B"}, std::log(0.5)},
                                  {"A", {"a"}, std::log(0.5)},
                                  {"B", {"A"}, 0.0}});
  auto r = viterbi(parse(g, {"a", "a"}, {}));
  ASSERT_TRUE(r);
  EXPECT_DOUBLE_EQ(r->logprob, 2 * std::log(0.5));
}

// allow == true reproduces the fixed-point reference, and any predicate keeps
// the chart within the reference run under the same predicate.
TEST(Cky, MatchesFixedPointOracle) {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 60; ++trial) {
    Pcfg g = oracle::random_grammar(rng, 4 + trial % 3);
    auto w = oracle::random_sentence(rng, 1 + trial % 8);
    PcfgPredicate allow = trial % 2 ? pcfg_predicate(oracle::random_constraints(rng, w.size()))
                                    : PcfgPredicate::allow_all();
    Chart c = parse(g, w, allow);
    auto ref = oracle::fixed_point_items(g, w, allow);
    ASSERT_EQ(c.item_count(), ref.size());
    for (const auto& [key, s] : ref) {
      auto [a, i, k] = key;
      ASSERT_NEAR(c.score(a, i, k), s, 1e-9);
    }
  }
}

TEST(Cky, PruningMonotonicity) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    Pcfg g = oracle::random_grammar(rng, 5);
    auto w = oracle::random_sentence(rng, 2 + trial % 9);
    auto cons = oracle::random_constraints(rng, w.size());
    Chart full = parse(g, w, {});
    Chart pruned = parse(g, w, pcfg_predicate(cons));
    auto fs = item_set(full), ps = item_set(pruned);
    for (const auto& x : ps) ASSERT_TRUE(fs.count(x));
    auto a = viterbi(full), b = viterbi(pruned);
    if (a && b) {
      ASSERT_LE(b->logprob, a->logprob + 1e-12);
    }
    if (b) {
      ASSERT_TRUE(a.has_value());
    }
  }
}

TEST(Cky, GoldConstraintSafetyAndStats) {
  auto trees = generate_treebank(toy_english_grammar(), 300, 8);
  std::vector<Tree> bin;
  for (const auto& t : trees) bin.push_back(binarize(t, 2));
  Pcfg g = extract_pcfg(bin, true);
  size_t better = 0;
  for (size_t s = 0; s < 60; ++s) {
    const Tree& gold = trees[s];
    auto tags = preterminal_labels(gold);
    Chart full = parse(g, tags, {});
    Chart pruned = parse(g, tags, pcfg_predicate(gold_constraints(gold)));
    // Every item of the binarized gold derivation survives pruning.
    const Tree stripped = strip_words(bin[s]);
    for (const auto& con : constituents(stripped)) {
      SymbolId a = g.find(con.node->label);
      if (con.node->is_leaf() || a < 0 || g.is_terminal(a)) continue;
      if (full.has(a, con.begin, con.end)) {
        ASSERT_TRUE(pruned.has(a, con.begin, con.end));
      }
    }
    auto fs = chart_stats(full, gold), ps = chart_stats(pruned, gold);
    EXPECT_LE(ps.item_count, fs.item_count);
    if (ps.gold_fraction > fs.gold_fraction) ++better;
    EXPECT_DOUBLE_EQ(chart_stats(pruned, gold).gold_fraction, ps.gold_fraction);
  }
  EXPECT_GT(better, 50u);
}

TEST(Cky, ViterbiDebinarizesToTreebankShape) {
  auto trees = read_ptb("(S (NP (DT the) (JJ big) (NN cat)) (VP (VBD sat)))");
  std::vector<Tree> bin{binarize(trees[0], 2)};
  Pcfg g = extract_pcfg(bin, true);
  auto r = viterbi(parse(g, {"DT", "JJ", "NN", "VBD"}, {}));
  ASSERT_TRUE(r);
  EXPECT_EQ(attach_words(debinarize(r->tree), leaves(trees[0])), trees[0]);
  EXPECT_DOUBLE_EQ(r->logprob, 0.0);
}
