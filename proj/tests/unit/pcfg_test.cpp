#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "chartcons/pcfg.hpp"
#include "chartcons/synth.hpp"

using namespace chartcons;

namespace {

double prob(const Pcfg& g, const std::string& lhs, std::vector<std::string> rhs) {
  for (const auto& r : g.rules()) {
    if (g.name(r.lhs) != lhs || r.rhs.size() != rhs.size()) continue;
    bool same = true;
    for (size_t i = 0; i < rhs.size(); ++i) same &= g.name(r.rhs[i]) == rhs[i];
    if (same) return std::exp(r.logprob);
  }
  return 0.0;
}

void expect_normalized(const Pcfg& g) {
  std::map<int, double> sums;
  for (const auto& r : g.rules()) sums[r.lhs] += std::exp(r.logprob);
  for (const auto& [lhs, s] : sums) EXPECT_NEAR(s, 1.0, 1e-9) << g.name(lhs);
}

}  // namespace

TEST(ExtractPcfg, SingleObservation) {
  Pcfg g = extract_pcfg(read_ptb("(S (A a) (B b))"), false);
  EXPECT_EQ(g.name(g.start()), "S");
  EXPECT_DOUBLE_EQ(prob(g, "S", {"A", "B"}), 1.0);
  EXPECT_DOUBLE_EQ(prob(g, "A", {"a"}), 1.0);
  EXPECT_DOUBLE_EQ(prob(g, "B", {"b"}), 1.0);
  EXPECT_EQ(g.rules().size(), 3u);
  EXPECT_TRUE(g.is_terminal(g.find("a")));
  EXPECT_FALSE(g.is_terminal(g.find("A")));
}

TEST(ExtractPcfg, RelativeFrequency) {
  Pcfg g = extract_pcfg(read_ptb("(S (A a) (B b)) (S (A a) (C c))"), false);
  EXPECT_DOUBLE_EQ(prob(g, "S", {"A", "B"}), 0.5);
  EXPECT_DOUBLE_EQ(prob(g, "S", {"A", "C"}), 0.5);
  EXPECT_DOUBLE_EQ(prob(g, "A", {"a"}), 1.0);
}

TEST(ExtractPcfg, EmptyCorpusAndArity) {
  EXPECT_THROW(extract_pcfg({}, false), DataError);
  EXPECT_THROW(extract_pcfg(read_ptb("(S (A a) (B b) (C c))"), false), DataError);
}

TEST(ExtractPcfg, PosAsTerminalsDropsWords) {
  auto trees = read_ptb("(S (NP (DT the) (NN cat)) (VP (VBD sat)))");
  Pcfg g = extract_pcfg(trees, true);
  EXPECT_DOUBLE_EQ(prob(g, "NP", {"DT", "NN"}), 1.0);
  EXPECT_DOUBLE_EQ(prob(g, "VP", {"VBD"}), 1.0);
  EXPECT_EQ(g.find("the"), -1);
  EXPECT_TRUE(g.is_terminal(g.find("DT")));
}

TEST(ExtractPcfg, NewFlagsAndNormalization) {
  auto trees = generate_treebank(toy_english_grammar(), 400, 5);
  std::vector<Tree> bin;
  for (const auto& t : trees) bin.push_back(binarize(t, 2));
  for (bool pos : {false, true}) {
    Pcfg g = extract_pcfg(bin, pos);
    expect_normalized(g);
    for (int s = 0; s < g.num_nonterminals(); ++s)
      EXPECT_EQ(g.is_new(s), g.name(s)[0] == '@') << g.name(s);
    for (const auto& r : g.rules()) EXPECT_LE(r.rhs.size(), 2u);
  }
}

TEST(PcfgFile, RoundTripIsBitExact) {
  auto trees = generate_treebank(toy_english_grammar(), 200, 9);
  std::vector<Tree> bin;
  for (const auto& t : trees) bin.push_back(binarize(t, 2));
  Pcfg g = extract_pcfg(bin, true);
  std::string text = write_pcfg(g);
  Pcfg h = read_pcfg(text);
  EXPECT_EQ(write_pcfg(h), text);
  ASSERT_EQ(h.rules().size(), g.rules().size());
  for (size_t i = 0; i < g.rules().size(); ++i)
    EXPECT_EQ(h.rules()[i].logprob, g.rules()[i].logprob);
  EXPECT_EQ(h.name(h.start()), g.name(g.start()));
}

TEST(PcfgFile, Format) {
  Pcfg g = extract_pcfg(read_ptb("(S (A a) (B b)) (S (A a) (C c))"), false);
  std::string text = write_pcfg(g);
  EXPECT_EQ(text.substr(0, 9), "start: S\n");
  EXPECT_NE(text.find("S -> A B\t-0.6931471805599453\n"), std::string::npos);
  EXPECT_THROW(read_pcfg("S -> A B\t0\n"), DataError);
  EXPECT_THROW(read_pcfg("start: S\nS A B\t0\n"), DataError);
  EXPECT_THROW(read_pcfg("start: S\nS -> A\tabc\n"), DataError);
}
