#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "chartcons/spinal.hpp"
#include "chartcons/supertag.hpp"
#include "chartcons/synth.hpp"

using namespace chartcons;

namespace {

Tree one(const std::string& s) { return read_ptb(s).at(0); }

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

HeadRules toy_rules() { return read_head_rules(slurp(CHARTCONS_DATA_DIR "/head_rules.tsv")); }

std::set<std::string> shapes(const TagGrammar& g) {
  std::set<std::string> out;
  for (const auto& t : g.trees()) out.insert(elementary_shape(t));
  return out;
}

}  // namespace

TEST(HeadRules, PriorityAndDirection) {
  HeadRules r = read_head_rules("# c\nNP\tright\tNN NP\nVP\tleft\n");
  EXPECT_EQ(r.head_child(one("(NP (DT a) (NN b) (NN c))")), 2);
  EXPECT_EQ(r.head_child(one("(NP (NP (DT a)) (PP (IN b)))")), 0);
  EXPECT_EQ(r.head_child(one("(NP (DT a) (JJ b))")), 1);
  EXPECT_EQ(r.head_child(one("(VP (VB a) (NP (NN b)))")), 0);
  EXPECT_EQ(r.head_child(one("(X (Y a))")), 0);
  EXPECT_THROW(r.head_child(one("(X (Y a) (Z b))")), DataError);
  EXPECT_THROW(read_head_rules("NP\tup\tNN\n"), DataError);
  EXPECT_THROW(read_head_rules("NP\n"), DataError);
  EXPECT_THROW(read_head_rules("NP\tleft\nNP\tright\n"), DataError);
}

TEST(Spinal, HandExample) {
  HeadRules r = read_head_rules("S\tleft\tVP\nNP\tleft\tN\n");
  auto x = extract_spinal({one("(S (NP (D d) (N n)) (VP (V v)))")}, r);
  EXPECT_EQ(shapes(x.grammar),
            (std::set<std::string>{"(S (NP! ) (VP (V @)))", "(NP (D! ) (N @))", "(D @)"}));
  EXPECT_EQ(x.grammar.start(), "S");
  ASSERT_EQ(x.corpus.size(), 1u);
  const auto& e = x.corpus[0];
  EXPECT_EQ(e.words, (std::vector<std::string>{"d", "n", "v"}));
  EXPECT_EQ(e.pos, (std::vector<std::string>{"D", "N", "V"}));
  EXPECT_EQ(to_ptb(e.derived), "(S (NP (D d) (N n)) (VP (V v)))");
  EXPECT_EQ(e.derivation, "t2{0.1:s(t1{0.1:s(t0)})}");
  EXPECT_EQ(x.grammar.tree(x.grammar.find(e.supertags[2])).root_label(), "S");
}

TEST(Spinal, IdenticalCorpusHasZeroLogprobs) {
  HeadRules r = read_head_rules("S\tleft\tVP\nNP\tleft\tN\n");
  std::vector<Tree> tb(5, one("(S (NP (D d) (N n)) (VP (V v)))"));
  auto x = extract_spinal(tb, r);
  EXPECT_EQ(x.grammar.size(), 3);
  for (const auto& t : x.grammar.trees()) EXPECT_DOUBLE_EQ(t.logprob, 0.0);
  for (long c : x.counts) EXPECT_EQ(c, 5);
}

TEST(Spinal, MissingRulesAreListed) {
  HeadRules r = read_head_rules("S\tleft\tVP\n");
  try {
    extract_spinal({one("(S (NP (D d) (N n)) (VP (V v) (X (Y y) (Z z))))")}, r);
    FAIL();
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("NP"), std::string::npos);
    EXPECT_NE(msg.find("VP"), std::string::npos);
    EXPECT_NE(msg.find("X"), std::string::npos);
  }
  EXPECT_THROW(extract_spinal({one("(S (NP d n) (VP (V v)))")}, read_head_rules("S\tleft\tVP\nNP\tleft\n")),
               DataError);
}

TEST(Spinal, KeepsLastAdjunctionOnly) {
  HeadRules r = read_head_rules("S\tleft\tVP\nNP\tleft\tNP N\nVP\tleft\tV VP\nPP\tleft\tP\n");
  auto x = extract_spinal(
      {one("(S (NP (N n)) (VP (VP (VP (V v)) (PP (P p) (NP (N a)))) (PP (P q) (NP (N b)))))")}, r);
  const auto& e = x.corpus[0];
  // The inner PP is dropped, the outer one adjoins to the VP spine node.
  EXPECT_EQ(to_ptb(e.derived), "(S (NP (N n)) (VP (VP (V v)) (PP (P q) (NP (N b)))))");
  EXPECT_EQ(e.words, (std::vector<std::string>{"n", "v", "q", "b"}));
  EXPECT_TRUE(shapes(x.grammar).count("(VP (VP* ) (PP (P @) (NP! )))"));
  EXPECT_TRUE(shapes(x.grammar).count("(S (NP! ) (VP (V @)))"));
  EXPECT_NE(e.derivation.find("0.2:a("), std::string::npos);
}

TEST(Spinal, LeftModifierPutsFootLast) {
  HeadRules r = read_head_rules("S\tleft\tVP\nVP\tleft\tVP V\nNP\tleft\tN\n");
  auto x = extract_spinal({one("(S (NP (N n)) (VP (ADVP (R r)) (VP (V v))))")}, r);
  EXPECT_TRUE(shapes(x.grammar).count("(VP (ADVP (R @)) (VP* ))"));
  EXPECT_EQ(to_ptb(x.corpus[0].derived), "(S (NP (N n)) (VP (ADVP (R r)) (VP (V v))))");
}

TEST(Spinal, CorpusRoundTrip) {
  auto tb = generate_treebank(toy_english_grammar(), 50, 8);
  auto x = extract_spinal(tb, toy_rules());
  const std::string text = write_tag_corpus(x.corpus);
  auto back = read_tag_corpus(text);
  ASSERT_EQ(back.size(), x.corpus.size());
  EXPECT_EQ(write_tag_corpus(back), text);
  EXPECT_EQ(write_tag_grammar(read_tag_grammar(write_tag_grammar(x.grammar))),
            write_tag_grammar(x.grammar));
  EXPECT_THROW(read_tag_corpus("a b\tX\tt0\tt0\t(X (X a) (X b))\n"), DataError);
}

TEST(Spinal, GoldSupertagsSelfParse) {
  auto tb = generate_treebank(toy_english_grammar(), 300, 31);
  auto x = extract_spinal(tb, toy_rules());
  // Logprobs are relative frequencies per anchor POS.
  std::map<std::string, double> mass;
  for (const auto& t : x.grammar.trees()) mass[t.nodes[t.anchor].label] += std::exp(t.logprob);
  for (const auto& [pos, m] : mass) EXPECT_NEAR(m, 1.0, 1e-9) << pos;
  int ok = 0, exact = 0;
  for (const auto& e : x.corpus) {
    TagGrammar sg = sentence_grammar(gold_assignment(e), x.grammar);
    auto r = best_derivation(tag_parse(sg, artificial_tokens(e.words.size())));
    if (!r) continue;
    ++ok;
    EXPECT_EQ(r->logprob, 0.0);
    EXPECT_EQ(leaves(relabel(r->derived, e.words)), e.words);
    strip_positions(r->derivation);
    // Equal-score attachment ambiguity can pick another site for an auxiliary tree.
    exact += format_derivation(r->derivation) == e.derivation && relabel(r->derived, e.words) == e.derived;
    for (const auto& s : r->adjunctions) EXPECT_TRUE(adjunction_sound(s));
  }
  const int n = static_cast<int>(x.corpus.size());
  EXPECT_GE(ok, n * 95 / 100);
  EXPECT_GE(exact, n * 95 / 100);
}
