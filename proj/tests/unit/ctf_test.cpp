#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "chartcons/cky.hpp"
#include "chartcons/ctf.hpp"
#include "chartcons/synth.hpp"
#include "pcfg_oracle.hpp"

using namespace chartcons;

namespace {

std::map<std::pair<std::string, std::vector<std::string>>, double> rule_table(const Pcfg& g) {
  std::map<std::pair<std::string, std::vector<std::string>>, double> out;
  for (const auto& r : g.rules()) {
    std::vector<std::string> rhs;
    for (SymbolId s : r.rhs) rhs.push_back(g.name(s));
    out[{g.name(r.lhs), rhs}] = std::exp(r.logprob);
  }
  return out;
}

Pcfg small_fine() {
  return Pcfg::from_rules("S", {{"S", {"A", "B"}, 0.0},
                                {"A", {"a"}, std::log(0.6)},
                                {"A", {"B", "B"}, std::log(0.4)},
                                {"B", {"b"}, 0.0}});
}

}  // namespace

TEST(CoarseLabel, StripsDecoration) {
  EXPECT_EQ(default_coarse_label("@NP[DT,JJ]"), "NP");
  EXPECT_EQ(default_coarse_label("NP-SBJ"), "NP");
  EXPECT_EQ(default_coarse_label("-NONE-"), "-NONE-");
  EXPECT_EQ(default_coarse_label("."), ".");
  EXPECT_EQ(default_coarse_label("S"), "S");
  EXPECT_EQ(default_coarse_label("@S[]"), "S");
}

TEST(CoarseMap, FileEntriesOverrideDefault) {
  CoarseMap m = read_coarse_map("# c\nNP\tX\n\n@VP[NP]\tVP2\n");
  EXPECT_EQ(m("NP"), "X");
  EXPECT_EQ(m("@VP[NP]"), "VP2");
  EXPECT_EQ(m("@VP[PP]"), "VP");
  EXPECT_THROW(read_coarse_map("NP X\n"), DataError);
  EXPECT_THROW(read_coarse_map("NP\t\n"), DataError);
}

TEST(Project, IdentityKeepsGrammar) {
  Pcfg g = small_fine();
  Pcfg p = project(g, CoarseMap::identity());
  auto a = rule_table(g), b = rule_table(p);
  ASSERT_EQ(a.size(), b.size());
  for (const auto& [k, v] : a) EXPECT_NEAR(b.at(k), v, 1e-12);
  EXPECT_EQ(p.name(p.start()), "S");
}

TEST(Project, CollapseToOneSymbol) {
  Pcfg g = small_fine();
  CoarseMap all({{"S", "X"}, {"A", "X"}, {"B", "X"}});
  auto t = rule_table(project(g, all));
  // X->X X gets 1.0 (from S) + 0.4 (from A); lhs mass 3.
  ASSERT_EQ(t.size(), 3u);
  EXPECT_NEAR((t[{"X", {"X", "X"}}]), 1.4 / 3, 1e-12);
  EXPECT_NEAR((t[{"X", {"a"}}]), 0.6 / 3, 1e-12);
  EXPECT_NEAR((t[{"X", {"b"}}]), 1.0 / 3, 1e-12);
}

TEST(Project, SyntheticProjectionIsNormalized) {
  auto trees = generate_treebank(toy_english_grammar(), 300, 5);
  std::vector<Tree> bin;
  for (const auto& t : trees) bin.push_back(binarize(t, 2));
  Pcfg fine = extract_pcfg(bin, true);
  Pcfg coarse = project(fine, CoarseMap());
  EXPECT_LT(coarse.num_nonterminals(), fine.num_nonterminals());
  std::vector<double> mass(coarse.num_nonterminals(), 0.0);
  for (const auto& r : coarse.rules()) mass[r.lhs] += std::exp(r.logprob);
  for (double m : mass) EXPECT_NEAR(m, 1.0, 1e-9);
  for (SymbolId a = 0; a < coarse.num_nonterminals(); ++a)
    EXPECT_EQ(coarse.name(a).find('@'), std::string::npos);
}

TEST(InsideOutside, MatchesBruteForcePosteriors) {
  std::mt19937_64 rng(17);
  int checked = 0;
  for (int trial = 0; trial < 120; ++trial) {
    Pcfg g = oracle::random_grammar(rng, 4, 2, true);
    std::uniform_int_distribution<int> len(1, 5);
    auto sent = oracle::random_sentence(rng, len(rng), 2);
    InsideOutside io(g, unary_closure_matrix(g), sent);
    auto brute = oracle::brute_posteriors(g, sent);
    EXPECT_EQ(io.parsed(), !brute.empty());
    if (!io.parsed()) continue;
    ++checked;
    const int n = static_cast<int>(sent.size());
    EXPECT_NEAR(std::exp(io.posterior(g.start(), 0, n)), 1.0, 1e-9);
    for (int w = 1; w <= n; ++w)
      for (int i = 0; i + w <= n; ++i)
        for (SymbolId a = 0; a < g.num_nonterminals(); ++a) {
          auto it = brute.find({a, i, i + w});
          const double expect = it == brute.end() ? 0.0 : it->second;
          const double lp = io.posterior(a, i, i + w);
          const double got = lp == kNegInf ? 0.0 : std::exp(lp);
          EXPECT_NEAR(got, expect, 1e-9) << "trial " << trial << " item " << g.name(a) << " ["
                                         << i << "," << i + w << ")";
        }
  }
  EXPECT_GT(checked, 30);
}

TEST(InsideOutside, UnaryCycleConverges) {
  Pcfg g = Pcfg::from_rules("S", {{"S", {"S", "S"}, std::log(0.3)},
                                  {"S", {"T"}, std::log(0.2)},
                                  {"S", {"a"}, std::log(0.5)},
                                  {"T", {"S"}, std::log(0.5)},
                                  {"T", {"a"}, std::log(0.5)}});
  InsideOutside io(g, unary_closure_matrix(g), {"a", "a", "a"});
  ASSERT_TRUE(io.parsed());
  const double root = io.posterior(g.start(), 0, 3);
  EXPECT_TRUE(std::isfinite(root));
  EXPECT_GE(root, -1e-9);
}

TEST(CtfPredicate, UnambiguousKeepsGold) {
  Pcfg g = Pcfg::from_rules("S", {{"S", {"NP", "VP"}, 0.0},
                                  {"NP", {"D", "N"}, 0.0},
                                  {"VP", {"V", "NP"}, 0.0}});
  auto model = CtfModel::build(g, CoarseMap::identity());
  std::vector<std::string> toks = {"D", "N", "V", "D", "N"};
  auto allow = ctf_predicate(model, toks, 0.999);
  Chart c = parse(g, toks, allow);
  ASSERT_TRUE(viterbi(c).has_value());
  EXPECT_EQ(to_ptb(viterbi(c)->tree), "(S (NP D N) (VP V (NP D N)))");
}

TEST(CtfPredicate, ThresholdMonotoneAndZeroAllowsDerivable) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 60; ++trial) {
    Pcfg g = oracle::random_grammar(rng, 5, 3);
    auto sent = oracle::random_sentence(rng, 6, 3);
    auto model = CtfModel::build(g, CoarseMap::identity());
    InsideOutside io(model.coarse, model.closure, sent);
    if (!io.parsed()) {
      EXPECT_TRUE(ctf_predicate(model, sent, 1e-5).is_trivial());
      continue;
    }
    auto p0 = ctf_predicate(model, sent, 0.0);
    auto p1 = ctf_predicate(model, sent, 1e-4);
    auto p2 = ctf_predicate(model, sent, 1e-1);
    const int n = static_cast<int>(sent.size());
    for (int w = 2; w <= n; ++w)
      for (int i = 0; i + w <= n; ++i)
        for (SymbolId a = 0; a < g.num_nonterminals(); ++a) {
          PcfgItem x{a, g.is_new(a), i, i + w};
          EXPECT_EQ(p0(x), io.inside(a, i, i + w) > kNegInf);
          EXPECT_TRUE(!p2(x) || p1(x));
          EXPECT_TRUE(!p1(x) || p0(x));
        }
  }
}

TEST(CtfPredicate, FailsOpenWhenCoarseCannotParse) {
  Pcfg g = small_fine();
  auto model = CtfModel::build(g, CoarseMap());
  EXPECT_TRUE(ctf_predicate(model, {"b", "a"}, 1e-5).is_trivial());
  EXPECT_THROW(ctf_predicate(model, {"a", "b"}, 2.0), UsageError);
}

TEST(CtfPredicate, ComposesWithGoldConstraints) {
  auto trees = generate_treebank(toy_english_grammar(), 400, 21);
  std::vector<Tree> bin;
  for (const auto& t : trees) bin.push_back(binarize(t, 2));
  Pcfg g = extract_pcfg(bin, true);
  auto model = CtfModel::build(g);
  for (size_t s = 0; s < 60; ++s) {
    auto tags = preterminal_labels(trees[s]);
    auto ctf = ctf_predicate(model, tags);
    auto cc = pcfg_predicate(gold_constraints(trees[s]));
    const size_t a = parse(g, tags, ctf).item_count();
    const size_t b = parse(g, tags, cc).item_count();
    const size_t both = parse(g, tags, ctf && cc).item_count();
    EXPECT_LE(both, std::min(a, b));
    EXPECT_TRUE(viterbi(parse(g, tags, ctf)).has_value());
  }
}
