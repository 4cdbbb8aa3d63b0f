#include <gtest/gtest.h>

#include <random>
#include <set>

#include "chartcons/tag_grammar.hpp"
#include "chartcons/tag_parser.hpp"
#include "pcfg_oracle.hpp"
#include "tag_oracle.hpp"

using namespace chartcons;

namespace {

TagGrammar adjoin_left() { return read_tag_grammar(oracle::tag_suite_grammar("adjoin-left")); }

std::vector<std::string> alphabet(const TagGrammar& g) {
  std::set<std::string> s;
  for (const auto& t : g.trees()) s.insert(t.token());
  return {s.begin(), s.end()};
}

void all_strings(const std::vector<std::string>& sigma, int max_len,
                 const std::function<void(const std::vector<std::string>&)>& fn) {
  std::vector<std::string> cur;
  std::function<void()> rec = [&]() {
    if (!cur.empty()) fn(cur);
    if (static_cast<int>(cur.size()) == max_len) return;
    for (const auto& a : sigma) {
      cur.push_back(a);
      rec();
      cur.pop_back();
    }
  };
  rec();
}

using Signature = std::tuple<int, int, int, int, int, int, int>;

std::set<Signature> item_set(const TagChart& c) {
  std::set<Signature> out;
  for (const auto& it : c.items()) out.insert(c.signature(it));
  return out;
}

bool gap_consistent(const TagChart& c) {
  for (const auto& it : c.items()) {
    const TagItem& x = it.span;
    if ((x.j < 0) != (x.k < 0)) return false;
    if (x.has_gap() && !(x.i <= x.j && x.j <= x.k && x.k <= x.l)) return false;
    if (!x.has_gap() && x.i > x.l) return false;
    // gap iff the foot lies below the recognized part of the position
    const auto& p = c.position(x.pos);
    const ElementaryTree& et = c.grammar().tree(p.tree);
    bool foot_below = false;
    if (et.foot >= 0) {
      int w = et.foot, below = -1;
      while (w >= 0 && w != p.node) {
        below = w;
        w = et.nodes[w].parent;
      }
      if (w == p.node) {
        const auto& kids = et.nodes[p.node].children;
        foot_below = p.state <= 0 ||
                     std::find(kids.begin(), kids.end(), below) - kids.begin() < p.state;
      }
    }
    if (foot_below != x.has_gap()) return false;
  }
  return true;
}

}  // namespace

TEST(TagGrammarFormat, ParsesMarkers) {
  auto aux = parse_elementary("(S (a @) (S* ))");
  EXPECT_TRUE(aux.is_auxiliary());
  EXPECT_EQ(aux.token(), "a");
  EXPECT_EQ(aux.nodes[aux.foot].kind, NodeKind::kFoot);
  auto init = parse_elementary("(S (NP! ) (v @))");
  EXPECT_FALSE(init.is_auxiliary());
  int sites = 0;
  for (const auto& n : init.nodes) sites += n.kind == NodeKind::kSubstitution;
  EXPECT_EQ(sites, 1);
  EXPECT_EQ(elementary_shape(init), "(S (NP! ) (v @))");
  EXPECT_EQ(init.address(0), "0");
  EXPECT_EQ(init.address(2), "0.2");
  auto deep = parse_elementary("(S (NP! ) (VP (V @) (S* )))");
  EXPECT_EQ(deep.address(deep.foot), "0.2.2");
}

TEST(TagGrammarFormat, RejectsInvalidTrees) {
  EXPECT_THROW(parse_elementary("(S (a @) (N* ))"), DataError);
  EXPECT_THROW(parse_elementary("(S (a @) (S* ) (S* ))"), DataError);
  EXPECT_THROW(parse_elementary("(S (NP! ))"), DataError);
  EXPECT_THROW(parse_elementary("(S (a @) (b @))"), DataError);
  EXPECT_THROW(parse_elementary("(S (a word))"), DataError);
  EXPECT_THROW(parse_elementary("(S (a @)"), DataError);
  EXPECT_THROW(read_tag_grammar("alpha\t0\t(S (b @))\n"), DataError);
  EXPECT_THROW(read_tag_grammar("start: S\nalpha\t0\n"), DataError);
  EXPECT_THROW(read_tag_grammar("start: S\nx\t0\t(S (b @))\nx\t0\t(S (c @))\n"), DataError);
  try {
    read_tag_grammar("start: S\n\nx\tzero\t(S (b @))\n");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(TagGrammarFormat, RoundTrip) {
  for (const auto& [name, text] : oracle::tag_suite_grammars()) {
    TagGrammar g = read_tag_grammar(text);
    const std::string once = write_tag_grammar(g);
    EXPECT_EQ(write_tag_grammar(read_tag_grammar(once)), once) << name;
    EXPECT_EQ(once, text) << name;
  }
}

TEST(TagParse, AdjunctionAtRoot) {
  TagGrammar g = adjoin_left();
  auto r = best_derivation(tag_parse(g, {"a", "b"}));
  ASSERT_TRUE(r.has_value());
  EXPECT_EQ(to_ptb(r->derived), "(S (a a) (S (b b)))");
  EXPECT_DOUBLE_EQ(r->logprob, 0.0);
  EXPECT_EQ(format_derivation(r->derivation), "alpha{0:a(beta)}");
  ASSERT_EQ(r->adjunctions.size(), 1u);
  EXPECT_TRUE(adjunction_sound(r->adjunctions[0]));
}

TEST(TagParse, DoubleAdjunctionIsUnique) {
  TagGrammar g = adjoin_left();
  auto r = best_derivation(tag_parse(g, {"a", "a", "b"}));
  ASSERT_TRUE(r.has_value());
  oracle::TagEnumerator oracle_enum(g);
  auto strings = oracle_enum.strings(3);
  const auto& res = strings.at({"a", "a", "b"});
  ASSERT_EQ(res.best_derivations.size(), 1u);
  EXPECT_EQ(format_derivation(r->derivation), format_derivation(res.best_derivations[0]->deriv));
  EXPECT_EQ(r->derived, res.best_derivations[0]->derived);
  EXPECT_EQ(to_ptb(r->derived), "(S (a a) (S (a a) (S (b b))))");
  for (const auto& s : r->adjunctions) EXPECT_TRUE(adjunction_sound(s));
}

TEST(TagParse, NoDerivationFails) {
  TagGrammar g = adjoin_left();
  EXPECT_FALSE(best_derivation(tag_parse(g, {"b", "a"})).has_value());
  EXPECT_FALSE(best_derivation(tag_parse(g, {"a"})).has_value());
  EXPECT_FALSE(best_derivation(tag_parse(g, {})).has_value());
  TagChart unknown = tag_parse(g, {"a", "z"});
  EXPECT_EQ(unknown.item_count(), 0u);
  EXPECT_LT(unknown.goal(), 0);
}

TEST(TagParse, MatchesOracleOnSuiteGrammars) {
  for (const auto& [name, text] : oracle::tag_suite_grammars()) {
    TagGrammar g = read_tag_grammar(text);
    oracle::TagEnumerator oracle_enum(g);
    const int max_len = name == "phrases" ? 4 : 5;
    auto strings = oracle_enum.strings(max_len);
    int derivable = 0, unique = 0;
    all_strings(alphabet(g), max_len, [&](const std::vector<std::string>& s) {
      TagChart chart = tag_parse(g, s);
      auto r = best_derivation(chart);
      auto it = strings.find(s);
      ASSERT_EQ(r.has_value(), it != strings.end()) << name << ": " << s.size();
      ASSERT_TRUE(gap_consistent(chart)) << name;
      if (!r) return;
      ++derivable;
      EXPECT_NEAR(r->logprob, it->second.best, 1e-9) << name;
      for (const auto& step : r->adjunctions) EXPECT_TRUE(adjunction_sound(step)) << name;
      if (it->second.best_derivations.size() == 1) {
        ++unique;
        EXPECT_EQ(format_derivation(r->derivation),
                  format_derivation(it->second.best_derivations[0]->deriv))
            << name;
        EXPECT_EQ(to_ptb(r->derived), to_ptb(it->second.best_derivations[0]->derived)) << name;
      }
    });
    EXPECT_EQ(derivable, static_cast<int>(strings.size())) << name;
    EXPECT_GT(unique, 0) << name;
  }
}

TEST(TagParse, PruningIsMonotoneAndCcInsideBe) {
  std::mt19937_64 rng(11);
  for (const auto& [name, text] : oracle::tag_suite_grammars()) {
    TagGrammar g = read_tag_grammar(text);
    auto sigma = alphabet(g);
    std::uniform_int_distribution<int> len(2, 7);
    std::uniform_int_distribution<size_t> pick(0, sigma.size() - 1);
    for (int trial = 0; trial < 40; ++trial) {
      std::vector<std::string> s(len(rng));
      for (auto& w : s) w = sigma[pick(rng)];
      auto c = oracle::random_constraints(rng, static_cast<int>(s.size()), 0.3);
      auto full = item_set(tag_parse(g, s));
      auto be = item_set(tag_parse(g, s, tag_predicate(c, TagStrategy::kBE)));
      auto cc = item_set(tag_parse(g, s, tag_predicate(c, TagStrategy::kCC)));
      EXPECT_TRUE(std::includes(full.begin(), full.end(), be.begin(), be.end())) << name;
      EXPECT_TRUE(std::includes(be.begin(), be.end(), cc.begin(), cc.end())) << name;
    }
  }
}

TEST(TagParse, GoldConstraintsKeepTheParse) {
  TagGrammar g = read_tag_grammar(oracle::tag_suite_grammar("phrases"));
  for (const auto& s : std::vector<std::vector<std::string>>{
           {"the", "dog", "saw", "the", "dog", "with", "the", "dog"},
           {"dog", "often", "saw", "dog"},
           {"the", "dog", "saw", "often"}}) {
    auto r = best_derivation(tag_parse(g, s));
    ASSERT_TRUE(r.has_value());
    auto gold = gold_constraints(r->derived);
    for (auto strategy : {TagStrategy::kCC, TagStrategy::kBE}) {
      auto pruned = best_derivation(tag_parse(g, s, tag_predicate(gold, strategy)));
      ASSERT_TRUE(pruned.has_value());
      EXPECT_EQ(pruned->derived, r->derived);
      EXPECT_NEAR(pruned->logprob, r->logprob, 1e-12);
    }
    EXPECT_LT(tag_parse(g, s, tag_predicate(gold, TagStrategy::kCC)).item_count(),
              tag_parse(g, s).item_count());
  }
}
